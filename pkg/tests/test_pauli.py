import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsdamp.pauli import PauliString, product

N = 3


@st.composite
def paulis(draw, n=N):
    full = (1 << n) - 1
    return PauliString(n, draw(st.integers(0, full)), draw(st.integers(0, full)), draw(st.integers(0, 3)))


def test_from_label_round_trip():
    p = PauliString.from_label("-ZIZI")
    assert str(p) == "-ZIZI"
    assert p.weight == 2 and p.support == [0, 2]
    assert PauliString.from_label("+iY").phase == 1


def test_bad_label_rejected():
    with pytest.raises(ValueError):
        PauliString.from_label("XQ")
    with pytest.raises(ValueError):
        PauliString(2, 4, 0)


def test_xz_is_minus_i_y():
    x, z = PauliString.from_label("X"), PauliString.from_label("Z")
    assert np.allclose((x * z).to_matrix(), -1j * PauliString.from_label("Y").to_matrix())


@given(paulis(), paulis())
def test_product_matches_dense(p, q):
    assert np.allclose((p * q).to_matrix(), p.to_matrix() @ q.to_matrix())


@given(paulis(), paulis())
def test_commutation_rule(p, q):
    a, b = p.to_matrix(), q.to_matrix()
    assert p.commutes(q) == np.allclose(a @ b, b @ a)


@given(paulis())
def test_hermitian_iff_even_phase(p):
    m = p.to_matrix()
    assert p.is_hermitian() == np.allclose(m, m.conj().T)


@given(paulis(), paulis(), paulis())
def test_associative(p, q, r):
    assert (p * q) * r == p * (q * r)


@given(paulis())
def test_square_is_scalar(p):
    sq = p * p
    assert sq.xmask == 0 and sq.zmask == 0


def test_embed_and_remap():
    p = PauliString.from_label("XZ")
    assert str(p.embed(4, 1)) == "+IXZI"
    assert str(p.remap([3, 0], 4)) == "+ZIIX"
    with pytest.raises(ValueError):
        p.embed(2, 1)


def test_product_helper():
    ps = [PauliString.on(3, [q], "X") for q in range(3)]
    assert str(product(ps, 3)) == "+XXX"
