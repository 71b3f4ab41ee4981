from math import comb, sqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsdamp.channel import (
    KrausString,
    a0_decomposition,
    apply_string,
    damp_density,
    damping_kraus,
    kraus_strings_up_to_weight,
    pauli_error_strings,
    pauli_string_probability,
    truncation_bound,
    twirl_channel_kraus,
    twirl_density,
    twirl_distribution,
)
from bsdamp.engine import QuantumState
from bsdamp.lattice import CodeSpec, codeword

gammas = st.floats(0.0, 1.0, allow_nan=False)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)


def test_kraus_examples():
    a0, a1 = damping_kraus(0.0)
    assert np.allclose(a0.matrix, np.eye(2)) and np.allclose(a1.matrix, 0)
    a0, a1 = damping_kraus(1.0)
    assert np.allclose(a0.matrix, np.diag([1, 0])) and np.allclose(a1.matrix, [[0, 1], [0, 0]])
    a0, a1 = damping_kraus(0.36)
    assert np.allclose(a0.matrix, np.diag([1, 0.8])) and a1.matrix[0, 1] == pytest.approx(0.6)
    assert a0.label == "A0" and a1.label == "A1"


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_gamma_range_enforced(bad):
    with pytest.raises(ValueError):
        damping_kraus(bad)


@pytest.mark.parametrize("g", np.linspace(0, 1, 11))
def test_trace_preserving(g):
    a0, a1 = (k.matrix for k in damping_kraus(g))
    assert np.abs(a0.conj().T @ a0 + a1.conj().T @ a1 - np.eye(2)).max() <= 1e-14


@given(gammas)
def test_a0_decomposition_reproduces_a0(g):
    ci, cz = a0_decomposition(g)
    assert np.allclose(ci * np.eye(2) + cz * Z, damping_kraus(g)[0].matrix, atol=1e-15)


def test_a0_decomposition_examples():
    assert a0_decomposition(0) == (1, 0)
    assert a0_decomposition(0.36) == pytest.approx((0.9, 0.1))
    assert a0_decomposition(1) == (0.5, 0.5)


def test_twirl_examples():
    assert twirl_distribution(0).as_tuple() == (1, 0, 0, 0)
    assert twirl_distribution(1).as_tuple() == pytest.approx((0.25,) * 4)
    assert twirl_distribution(0.36).as_tuple() == pytest.approx((0.81, 0.09, 0.09, 0.01), abs=1e-15)


@given(gammas)
def test_twirl_is_distribution(g):
    d = twirl_distribution(g).as_tuple()
    assert min(d) >= 0 and abs(sum(d) - 1) <= 1e-12


@given(st.floats(1e-6, 0.1))
def test_twirl_z_second_order(g):
    assert abs(twirl_distribution(g).pZ - g * g / 16) <= g**3


def _twirl_direct(rho, g):
    # average of A rho A^dag after conjugation by each Pauli, summed over Kraus ops
    out = np.zeros((2, 2), dtype=complex)
    for k in damping_kraus(g):
        for p in (np.eye(2), X, Y, Z):
            a = p @ k.matrix @ p
            out += a @ rho @ a.conj().T / 4
    return out


def _apply_weighted_paulis(rho, g):
    out = np.zeros((2, 2), dtype=complex)
    for p, pauli in twirl_channel_kraus(g):
        m = pauli.to_matrix()
        out += p * m @ rho @ m.conj().T
    return out


@given(gammas, st.integers(0, 2**32 - 1))
def test_twirl_channel_matches_direct_twirl(g, seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=(2, 2)) + 1j * r.normal(size=(2, 2))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    assert np.allclose(_apply_weighted_paulis(rho, g), _twirl_direct(rho, g), atol=1e-12)


def test_twirl_channel_examples():
    plus = np.full((2, 2), 0.5, dtype=complex)
    d = twirl_distribution(0.2)
    out = _apply_weighted_paulis(plus, 0.2)
    assert np.trace(X @ out).real == pytest.approx(1 - 2 * (d.pY + d.pZ))
    one = np.diag([0, 1]).astype(complex)
    assert _apply_weighted_paulis(one, 0.36)[1, 1].real == pytest.approx(0.82)
    assert [p for p, _ in twirl_channel_kraus(0)] == [1, 0, 0, 0]


def test_string_counts():
    assert len(list(kraus_strings_up_to_weight(2, 0))) == 1
    assert len(list(kraus_strings_up_to_weight(2, 1))) == 3
    assert len(list(kraus_strings_up_to_weight(15, 2))) == 121


@given(st.integers(1, 9), st.data())
def test_strings_unique_weight_major(n, data):
    t = data.draw(st.integers(0, n))
    strings = list(kraus_strings_up_to_weight(n, t))
    assert len(strings) == sum(comb(n, w) for w in range(t + 1))
    assert len({s.labels for s in strings}) == len(strings)
    assert [s.weight for s in strings] == sorted(s.weight for s in strings)
    assert all(s.weight == len(s.damped) for s in strings)


def test_apply_string_examples():
    cw = codeword(CodeSpec(2, 2), 0)
    same = apply_string(cw, KrausString((0,) * 4), 0.0)
    assert np.allclose(same.data, cw.data)
    g = 0.2
    out = apply_string(cw, KrausString.with_damped(4, [0]), g)
    # A1 on the first qubit keeps only |1111>, sending it to |0111> with amplitude sqrt(g)(1-g)^(3/2)/sqrt2
    expected = np.zeros(16)
    expected[0b0111] = sqrt(g) * (1 - g) ** 1.5 / sqrt(2)
    assert np.allclose(out.data, expected)
    zero = QuantumState.basis("0")
    assert np.allclose(apply_string(zero, KrausString((1,)), 0.5).data, 0)
    with pytest.raises(ValueError):
        apply_string(cw, KrausString((0, 0)), 0.1)


@pytest.mark.parametrize("n,m", [(n, m) for n in (2, 3) for m in (1, 2, 3)])
def test_damped_row_lemma(n, m):
    spec = CodeSpec(n, m)
    sub = CodeSpec(n - 1, m)
    g = 0.3
    a0 = damping_kraus(g)[0].matrix
    for b in (0, 1):
        cw = codeword(spec, b)
        sub_flipped = codeword(sub, 1 - b).data
        for k in range(1, m + 1):
            labels = [1] * k + [0] * (m - k)
            row_only = cw
            for q in range(m):
                row_only = apply_string(row_only, KrausString((labels[q],)), g, [q])
            tail = np.array([1.0])
            for _ in range(m - k):
                tail = np.kron(tail, a0 @ np.array([0, 1]))
            expected = np.kron(np.kron(np.eye(1 << k)[0], tail), sub_flipped)
            v = row_only.data
            overlap = abs(np.vdot(expected, v)) / (np.linalg.norm(expected) * np.linalg.norm(v))
            assert overlap == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("n,t", [(4, 1), (5, 2), (6, 0)])
def test_truncation_bound_covers_excluded_weight(n, t):
    r = np.random.default_rng(n + t)
    psi = r.normal(size=1 << n) + 1j * r.normal(size=1 << n)
    state = QuantumState(psi / np.linalg.norm(psi), n)
    g = 0.2
    included = sum(apply_string(state, s, g).weight() for s in kraus_strings_up_to_weight(n, t))
    assert 1 - included <= truncation_bound(n, t, g) + 1e-12
    assert truncation_bound(n, n, g) == 0


def test_density_channels_match_string_sums():
    spec = CodeSpec(2, 2)
    cw = codeword(spec, 1)
    g = 0.15
    rho = damp_density(cw, g, range(4)).data
    direct = sum(np.outer(v.data, v.data.conj()) for v in
                 (apply_string(cw, s, g) for s in kraus_strings_up_to_weight(4, 4)))
    assert np.allclose(rho, direct)
    tw = twirl_density(cw, g, range(4)).data
    assert abs(np.trace(tw) - 1) < 1e-12
    assert sum(pauli_string_probability(s, g) for s in pauli_error_strings(4, 4)) == pytest.approx(1)
