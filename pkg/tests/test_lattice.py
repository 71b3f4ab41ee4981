import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsdamp.engine import QuantumState, apply_pauli, expectation
from bsdamp.lattice import (
    CodeSpec,
    Gauge,
    apply_unencoder,
    codeword,
    encode,
    encode_with_reference,
    gauge_generators,
    logical_operators,
    logical_y,
    stabilizer_generators,
    unencoder,
    z_stabilizers,
)
from bsdamp.pauli import PauliString, product

SMALL = [(n, m) for n in range(1, 5) for m in range(1, 5)]


def ket(*labels):
    n = len(labels[0])
    v = np.zeros(1 << n)
    for lab in labels:
        v[int(lab, 2)] = 1
    return v / np.linalg.norm(v)


def test_spec_validation():
    with pytest.raises(ValueError):
        CodeSpec(0, 2)
    assert CodeSpec(2, 3).num_qubits == 6
    assert CodeSpec(2, 3).qubit(1, 2) == 5
    assert CodeSpec(2, 2, "x").gauge is Gauge.X


def test_stabilizer_examples():
    assert stabilizer_generators(CodeSpec(1, 1)) == []
    s = stabilizer_generators(CodeSpec(2, 2))
    assert [str(p) for p in s] == ["+XXXX", "+ZZZZ"]
    s33 = stabilizer_generators(CodeSpec(3, 3))
    assert len(s33) == 4 and all(p.weight == 6 and p.phase == 0 for p in s33)


def test_gauge_examples():
    assert [str(p) for p in gauge_generators(CodeSpec(1, 2))] == ["+ZZ"]
    assert [p.support for p in gauge_generators(CodeSpec(2, 2))] == [[0, 1], [2, 3]]
    xg = gauge_generators(CodeSpec(2, 2, "x"))
    assert [p.support for p in xg] == [[0, 2], [1, 3]]
    assert all(set(p.letters()) <= {"I", "X"} for p in xg)


def test_logical_examples():
    x, z = logical_operators(CodeSpec(1, 1))
    assert (str(x), str(z)) == ("+X", "+Z")
    x, z = logical_operators(CodeSpec(2, 2))
    assert (str(x), str(z)) == ("+XXII", "+ZIZI")
    assert not x.commutes(z)
    x, z = logical_operators(CodeSpec(3, 3))
    assert x.weight == 3 and z.weight == 3 and len(set(x.support) & set(z.support)) == 1
    assert logical_y(CodeSpec(2, 2)).is_hermitian()


@pytest.mark.parametrize("n,m", [(n, m) for n in range(1, 6) for m in range(1, 6)])
def test_generators_commute(n, m):
    for gauge in Gauge:
        spec = CodeSpec(n, m, gauge)
        stabs = stabilizer_generators(spec)
        gauges = gauge_generators(spec)
        xbar, zbar = logical_operators(spec)
        for a, b in itertools.combinations(stabs, 2):
            assert a.commutes(b)
        for g in gauges:
            assert all(g.commutes(s) for s in stabs)
        if gauge is Gauge.Z:
            for op in stabs + gauges:
                assert op.commutes(xbar) and op.commutes(zbar)


@pytest.mark.parametrize("n,m", [(n, m) for n in range(1, 6) for m in range(2, 6)])
def test_z_stabilizers_are_gauge_products(n, m):
    spec = CodeSpec(n, m)
    gauges = gauge_generators(spec)
    for c, stab in enumerate(z_stabilizers(spec)):
        picked = [g for g in gauges if g.support[0] % m == c]
        assert product(picked, spec.num_qubits) == stab


def test_zgauge_22_codewords_match_four_qubit_code():
    spec = CodeSpec(2, 2)
    assert np.allclose(codeword(spec, 0).data, ket("0000", "1111"))
    assert np.allclose(codeword(spec, 1).data, ket("0011", "1100"))
    assert np.allclose(codeword(CodeSpec(1, 3), 0).data, ket("000"))


def test_xgauge_22_codewords_match_explicit_kets():
    spec = CodeSpec(2, 2, "x")
    assert np.allclose(codeword(spec, 0).data, ket("0000", "0101", "1010", "1111"))
    assert np.allclose(codeword(spec, 1).data, ket("0011", "0110", "1001", "1100"))


@pytest.mark.parametrize("n,m", SMALL)
def test_codeword_invariants(n, m):
    for gauge in Gauge:
        spec = CodeSpec(n, m, gauge)
        c0, c1 = codeword(spec, 0), codeword(spec, 1)
        assert abs(np.vdot(c0.data, c1.data)) < 1e-12
        assert abs(c0.weight() - 1) < 1e-12 and abs(c1.weight() - 1) < 1e-12
        xbar, zbar = logical_operators(spec)
        for op in stabilizer_generators(spec) + gauge_generators(spec):
            assert np.allclose(apply_pauli(c0, op).data, c0.data, atol=1e-12)
        assert abs(expectation(c1, zbar) + 1) < 1e-12
        assert abs(abs(np.vdot(apply_pauli(c0, xbar).data, c1.data)) - 1) < 1e-12


def test_encode():
    spec = CodeSpec(2, 2)
    assert np.allclose(encode(spec, (1, 0)).data, codeword(spec, 0).data)
    plus = encode(spec, (2 ** -0.5, 2 ** -0.5))
    assert abs(expectation(plus, logical_operators(spec)[0]) - 1) < 1e-12
    one = encode(CodeSpec(3, 3), (0, 1))
    assert abs(expectation(one, logical_operators(CodeSpec(3, 3))[1]) + 1) < 1e-12
    with pytest.raises(ValueError):
        encode(spec, (1, 1))


def test_encode_with_reference_is_maximally_entangled():
    s = encode_with_reference(CodeSpec(2, 2))
    assert s.num_qubits == 5 and abs(s.weight() - 1) < 1e-12


@pytest.mark.parametrize("n,m", [(1, 1), (1, 3), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_unencoder_orthogonal_and_maps_codewords(n, m):
    spec = CodeSpec(n, m)
    u = unencoder(spec)
    assert np.allclose(u @ u.T, np.eye(len(u)), atol=1e-12)
    nf = spec.num_qubits - 1
    for b in (0, 1):
        out = u @ codeword(spec, b).data
        expected = np.zeros(len(u))
        expected[b << nf] = 1
        assert np.allclose(out, expected, atol=1e-12)


@given(st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3)]), st.integers(0, 2**32 - 1))
def test_unencoder_reads_out_logical_representatives(nm, seed):
    # output qubit 0 carries <X_top-row> and <Z_left-column> of any input
    spec = CodeSpec(*nm)
    r = np.random.default_rng(seed)
    psi = r.normal(size=1 << spec.num_qubits) + 1j * r.normal(size=1 << spec.num_qubits)
    psi = QuantumState(psi / np.linalg.norm(psi), spec.num_qubits)
    out = apply_unencoder(psi, spec, range(spec.num_qubits))
    xbar, zbar = logical_operators(spec)
    n = spec.num_qubits
    for logical, letter in ((xbar, "X"), (zbar, "Z")):
        assert np.isclose(expectation(psi, logical), expectation(out, PauliString.on(n, [0], letter)))


def test_sparse_and_dense_unencoders_agree(rng):
    spec = CodeSpec(2, 3)
    rho = rng.normal(size=(1 << 7, 1 << 7)) + 1j * rng.normal(size=(1 << 7, 1 << 7))
    state = QuantumState(rho, 7)
    out = apply_unencoder(state, spec, range(6))
    u = np.kron(unencoder(spec), np.eye(2))
    assert np.allclose(out.data, u @ rho @ u.T)


def test_unencoder_rejects_xgauge_and_large_blocks():
    with pytest.raises(ValueError):
        unencoder(CodeSpec(2, 2, "x"))
    with pytest.raises(ValueError):
        unencoder(CodeSpec(3, 5))
