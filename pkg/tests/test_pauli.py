import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, strategies as st

from clusterlab.pauli import (
    DimensionError,
    PauliString,
    StateVector,
    WeightedPauliSum,
    apply,
    commutes,
    expectation,
    multiply,
)

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0 + 0j, -1.0])
SINGLE = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def kron_matrix(label: str, phase: int = 0) -> np.ndarray:
    """Independent oracle: Kronecker product with qubit 0 as the least significant bit."""
    mats = [SINGLE[ch] for ch in label]
    return (1j ** phase) * reduce(np.kron, reversed(mats))


labels = lambda n: st.text(alphabet="IXYZ", min_size=n, max_size=n)


# multiply ------------------------------------------------------------------

def test_x_times_z_is_minus_i_y():
    assert multiply(PauliString.from_label("XI"), PauliString.from_label("ZI")) == PauliString.from_label("-iYI")


def test_square_of_phase_free_string_is_identity():
    p = PauliString.from_label("XYZIY")
    sq = p * p
    assert sq.is_identity and sq.phase == 0


def test_bond_pair_product_matches_dense_oracle():
    a, b = PauliString.from_label("XZ"), PauliString.from_label("ZX")
    prod = a * b
    assert prod.unsigned() == PauliString.from_label("YY")
    np.testing.assert_allclose(prod.to_matrix(), kron_matrix("XZ") @ kron_matrix("ZX"), atol=1e-14)
    np.testing.assert_allclose(prod.to_matrix(), kron_matrix("YY"), atol=1e-14)


def test_multiply_dimension_mismatch():
    with pytest.raises(DimensionError):
        multiply(PauliString.from_label("X"), PauliString.from_label("XX"))


@given(labels(3), labels(3), labels(3), st.integers(0, 3), st.integers(0, 3))
def test_multiply_associative_and_phase_closed(a, b, c, pa, pb):
    A = PauliString(*PauliString.from_label(a).__dict__.values())
    A = PauliString(A.n_qubits, A.x, A.z, pa)
    B = PauliString.from_label(b)
    B = PauliString(B.n_qubits, B.x, B.z, pb)
    C = PauliString.from_label(c)
    assert (A * B) * C == A * (B * C)
    assert (A * B).phase in (0, 1, 2, 3)


@given(labels(4), labels(4))
def test_products_differ_by_symplectic_sign(a, b):
    A, B = PauliString.from_label(a), PauliString.from_label(b)
    overlap = bin(A.x & B.z).count("1") + bin(A.z & B.x).count("1")
    ab, ba = A * B, B * A
    assert ab.unsigned() == ba.unsigned()
    assert (ab.phase - ba.phase) % 4 == (2 * overlap) % 4


@given(labels(3), labels(3))
def test_multiply_matches_kronecker_oracle(a, b):
    got = (PauliString.from_label(a) * PauliString.from_label(b)).to_matrix()
    np.testing.assert_allclose(got, kron_matrix(a) @ kron_matrix(b), atol=1e-13)


def test_label_roundtrip_with_phase():
    for text in ("+XYZ", "-iIIY", "+iZ", "-XX"):
        assert PauliString.from_label(text).label() == text


# commutes ------------------------------------------------------------------

def test_commutation_examples():
    assert not commutes(PauliString.from_label("X"), PauliString.from_label("Z"))
    assert commutes(PauliString.from_label("XZ"), PauliString.from_label("ZX"))
    with pytest.raises(DimensionError):
        commutes(PauliString.from_label("X"), PauliString.from_label("ZZ"))


@given(labels(4), labels(4))
def test_commutes_agrees_with_dense_commutator(a, b):
    ma, mb = kron_matrix(a), kron_matrix(b)
    dense = np.allclose(ma @ mb, mb @ ma)
    assert commutes(PauliString.from_label(a), PauliString.from_label(b)) == dense


# apply ---------------------------------------------------------------------

def test_apply_basis_examples():
    s = apply(PauliString.from_label("XI"), StateVector.basis(2, 0b00))
    assert s.amplitudes[0b01] == 1  # qubit 0 flipped
    s = apply(PauliString.from_label("ZI"), StateVector.basis(2, 0b01))
    assert s.amplitudes[0b01] == -1


def test_apply_dimension_mismatch():
    with pytest.raises(DimensionError):
        apply(PauliString.from_label("X"), StateVector.basis(2, 0))


def _random_state(seed, n):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector(v).normalized()


@given(labels(4), labels(4), st.integers(0, 2**31))
def test_apply_is_a_representation(a, b, seed):
    A, B = PauliString.from_label(a), PauliString.from_label(b)
    s = _random_state(seed, 4)
    lhs = apply(A * B, s).amplitudes
    rhs = apply(A, apply(B, s)).amplitudes
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    assert abs(apply(A, s).norm - 1) < 1e-12


@given(labels(3), st.integers(0, 3), st.integers(0, 2**31))
def test_apply_matches_dense_matrix(a, phase, seed):
    p = PauliString.from_label(a)
    p = PauliString(p.n_qubits, p.x, p.z, phase)
    s = _random_state(seed, 3)
    np.testing.assert_allclose(apply(p, s).amplitudes, kron_matrix(a, phase) @ s.amplitudes, atol=1e-12)


# weighted sums -------------------------------------------------------------

def test_expectation_examples():
    zz = WeightedPauliSum(2, ((-1.0, PauliString.from_label("ZZ")),))
    assert expectation(StateVector.basis(2, 0), zz) == -1
    plus = StateVector(np.array([1, 1]) / np.sqrt(2))
    assert expectation(plus, WeightedPauliSum(1, ((1.0, PauliString.from_label("X")),))) == pytest.approx(1)


def test_expectation_rejects_unnormalized():
    with pytest.raises(ValueError):
        expectation(StateVector(np.array([1.0, 1.0])), WeightedPauliSum(1, ((1.0, PauliString.from_label("X")),)))


def test_expectation_dimension_mismatch():
    with pytest.raises(DimensionError):
        expectation(StateVector.basis(1, 0), WeightedPauliSum(2, ((1.0, PauliString.from_label("ZZ")),)))


def test_non_hermitian_term_rejected():
    with pytest.raises(ValueError):
        WeightedPauliSum(1, ((1.0, PauliString.from_label("iX")),))


def test_normalize_reaches_unit_norm():
    s = StateVector(np.arange(1, 9, dtype=complex)).normalized()
    assert abs(s.norm - 1) < 1e-12


term_lists = st.lists(
    st.tuples(st.floats(-2, 2, allow_nan=False), labels(4), st.sampled_from([0, 2])),
    min_size=1, max_size=8,
)


@given(term_lists)
def test_sum_matrix_matches_kronecker_construction(terms):
    h = WeightedPauliSum(4, tuple((c, PauliString(*_with_phase(lbl, ph))) for c, lbl, ph in terms))
    oracle = sum(c * kron_matrix(lbl, ph) for c, lbl, ph in terms)
    np.testing.assert_allclose(h.to_matrix(), oracle, atol=1e-12)
    dense_apply = h.apply_array(np.eye(16, dtype=complex))
    np.testing.assert_allclose(dense_apply, oracle, atol=1e-12)
    np.testing.assert_allclose(h.simplify().to_matrix(), oracle, atol=1e-12)


def _with_phase(label, phase):
    p = PauliString.from_label(label)
    return p.n_qubits, p.x, p.z, phase


@pytest.mark.parametrize("n", range(1, 7))
def test_dense_equivalence_all_single_and_pair_terms(n):
    rng = np.random.default_rng(n)
    terms = []
    for _ in range(6):
        lbl = "".join(rng.choice(list("IXYZ"), n))
        terms.append((float(rng.normal()), lbl))
    h = WeightedPauliSum(n, tuple((c, PauliString.from_label(l)) for c, l in terms))
    oracle = sum(c * kron_matrix(l) for c, l in terms)
    np.testing.assert_allclose(h.to_matrix(), oracle, atol=1e-12)
