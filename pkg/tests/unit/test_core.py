import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qomp_lab.core import (
    Support,
    kp_amplitudes,
    kp_build,
    kp_update,
    make_dictionary,
    make_signal,
    mu_best,
    mu_p,
    mutual_incoherence,
    project_colspace_exact,
    restrict,
    sigma_min,
)
from qomp_lab.errors import (
    DimensionMismatch,
    EmptyMatrix,
    IndexOutOfRange,
    InvalidInstance,
    TooFewAtoms,
    ZeroColumn,
    ZeroVector,
)

pytestmark = pytest.mark.unit

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


# ---------------------- Dictionary Tests ----------------------
def test_make_dictionary_normalizes_columns():
    """Should rescale every column to unit norm."""
    # Arrange
    raw = np.array([[3.0, 0.0], [4.0, 2.0]])
    # Act
    dictionary = make_dictionary(raw)
    # Assert
    assert np.allclose(dictionary.column_norms, 1.0)
    assert np.allclose(dictionary.atom(0), [0.6, 0.8])


def test_make_dictionary_zero_column():
    """Should reject a dictionary with a zero column and name the column."""
    with pytest.raises(ZeroColumn) as error:
        make_dictionary(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert error.value.column == 1


@pytest.mark.parametrize(
    "raw, expected",
    [
        pytest.param([[1.0, float("nan")]], InvalidInstance, id="Non-finite entry"),
        pytest.param([1.0, 2.0], DimensionMismatch, id="Vector instead of matrix"),
    ],
)
def test_make_dictionary_invalid(raw, expected):
    """Should reject malformed dictionaries."""
    with pytest.raises(expected):
        make_dictionary(raw)


def test_atom_out_of_range(identity_dictionary):
    """Should raise IndexOutOfRange for an atom index past m."""
    with pytest.raises(IndexOutOfRange):
        identity_dictionary.atom(4)


def test_support_rejects_duplicates():
    """Should refuse a support listing the same atom twice."""
    with pytest.raises(InvalidInstance):
        Support((1, 1), 4)


def test_support_complement_and_add():
    """Should keep insertion order and report the complement in ascending order."""
    support = Support.empty(5).add(3).add(1)
    assert support.indices == (3, 1)
    assert support.complement() == [0, 2, 4]
    assert 3 in support and 2 not in support


# ---------------------- Projection Tests ----------------------
def test_projection_identity_support():
    """Should project onto the selected coordinates of an orthonormal basis."""
    # Arrange
    dictionary = make_dictionary(np.eye(3))
    restricted = restrict(dictionary, Support((0, 2), 3))
    # Act
    phi, norm = project_colspace_exact(restricted, [1.0, 2.0, 3.0])
    # Assert
    assert np.allclose(phi, [1.0, 0.0, 3.0])
    assert norm == pytest.approx(math.sqrt(10))


def test_projection_empty_support(identity_dictionary):
    """Should return the zero vector for an empty support."""
    restricted = restrict(identity_dictionary, Support.empty(4))
    phi, norm = project_colspace_exact(restricted, [1.0, 0.0, 0.0, 0.0])
    assert norm == 0.0
    assert not np.any(phi)


def test_projection_dimension_mismatch(identity_dictionary):
    """Should raise DimensionMismatch for a signal of the wrong length."""
    with pytest.raises(DimensionMismatch):
        project_colspace_exact(identity_dictionary.entries, [1.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (6, 3), elements=finite), arrays(np.float64, 6, elements=finite))
def test_projection_is_idempotent_and_orthogonal(matrix, vector):
    """Should produce a projection that is idempotent with an orthogonal residual."""
    phi, _ = project_colspace_exact(matrix, vector)
    again, _ = project_colspace_exact(matrix, phi)
    assert np.allclose(again, phi, atol=1e-8)
    assert np.allclose(matrix.T @ (vector - phi), 0.0, atol=1e-6 * (1 + np.abs(matrix).max() ** 2 * 10))


# ---------------------- Singular Value Tests ----------------------
def test_sigma_min_orthonormal(identity_dictionary):
    """Should give 1 for orthonormal columns."""
    assert sigma_min(identity_dictionary.entries) == pytest.approx(1.0)


def test_sigma_min_overcomplete(gaussian_dictionary):
    """Should give 0 when there are more columns than rows."""
    assert sigma_min(gaussian_dictionary.entries) == 0.0


def test_sigma_min_ignores_zeroed_columns(identity_dictionary):
    """Should only look at the nonzero columns of a restricted dictionary."""
    restricted = restrict(identity_dictionary, Support((1,), 4))
    assert sigma_min(restricted) == pytest.approx(1.0)


def test_sigma_min_empty(identity_dictionary):
    """Should raise EmptyMatrix when every column is zero."""
    with pytest.raises(EmptyMatrix):
        sigma_min(restrict(identity_dictionary, Support.empty(4)))


# ---------------------- Incoherence Tests ----------------------
def test_mutual_incoherence_orthonormal(identity_dictionary):
    """Should be 0 for an orthonormal basis."""
    assert mutual_incoherence(identity_dictionary) == 0.0


def test_mutual_incoherence_duplicate_column():
    """Should be 1 when two atoms coincide."""
    dictionary = make_dictionary(np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    assert mutual_incoherence(dictionary) == pytest.approx(1.0)


def test_mutual_incoherence_single_atom():
    """Should raise TooFewAtoms for a single atom."""
    with pytest.raises(TooFewAtoms):
        mutual_incoherence(make_dictionary([[1.0], [0.0]]))


def test_mutual_incoherence_two_bases():
    """Should be 1/sqrt(2) for the identity next to the normalized Hadamard matrix."""
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)
    dictionary = make_dictionary(np.hstack([np.eye(2), hadamard]))
    assert mutual_incoherence(dictionary) == pytest.approx(1 / math.sqrt(2))


def random_complex(rng, n, m):
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 12), st.integers(2, 16))
def test_mutual_incoherence_invariant_under_permutation_and_rotation(seed, n, m):
    """Should keep mu under a column permutation and a left unitary rotation."""
    # Arrange
    rng = np.random.default_rng(seed)
    entries = random_complex(rng, n, m)
    unitary, _ = np.linalg.qr(random_complex(rng, n, n))
    permutation = rng.permutation(m)
    # Act
    original = mutual_incoherence(make_dictionary(entries))
    permuted = mutual_incoherence(make_dictionary(entries[:, permutation]))
    rotated = mutual_incoherence(make_dictionary(unitary @ entries))
    # Assert
    assert permuted == pytest.approx(original, abs=1e-12)
    assert rotated == pytest.approx(original, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 10), st.integers(1, 14))
def test_projection_norm_grows_with_support(seed, n, m):
    """Should never shrink ||P_Lambda s|| when atoms are added to Lambda."""
    # Arrange
    rng = np.random.default_rng(seed)
    dictionary = make_dictionary(random_complex(rng, n, m))
    signal = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    order = [int(j) for j in rng.permutation(m)]
    support = Support.empty(m)
    norms = []
    # Act
    for j in order:
        support = support.add(j)
        _, norm = project_colspace_exact(restrict(dictionary, support), signal)
        norms.append(norm)
    # Assert
    assert all(later >= earlier - 1e-10 for earlier, later in zip(norms, norms[1:]))
    assert norms[-1] <= np.linalg.norm(signal) + 1e-10


# ---------------------- QRAM Normalization Tests ----------------------
def test_mu_p_identity():
    """Should be 1 for the identity at every p."""
    for p in (0.0, 0.5, 1.0):
        assert mu_p(np.eye(4), p) == pytest.approx(1.0)


def test_mu_p_all_ones():
    """Should be 2 for the 2x2 all-ones matrix at p = 1/2."""
    assert mu_p(np.ones((2, 2)), 0.5) == pytest.approx(2.0)


def test_mu_p_rejects_out_of_range():
    """Should reject p outside [0, 1]."""
    with pytest.raises(ValueError):
        mu_p(np.eye(2), 1.5)


def test_mu_best_never_exceeds_frobenius():
    """Should fall back to the Frobenius norm when every grid value is larger."""
    # Arrange
    matrix = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    # Act
    value, p = mu_best(matrix)
    # Assert
    assert value == pytest.approx(math.sqrt(5))
    assert p is None


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 5), elements=finite))
def test_mu_best_bounded_by_frobenius(matrix):
    """Should never exceed the Frobenius norm."""
    value, _ = mu_best(matrix)
    assert value <= np.linalg.norm(matrix) + 1e-12


# ---------------------- KP-tree Tests ----------------------
def test_kp_tree_root_is_squared_norm():
    """Should store the squared norm at the root."""
    tree = kp_build([1.0, 2.0, 2.0])
    assert tree.root == pytest.approx(9.0)
    assert tree.depth == 2


def test_kp_tree_recovers_state_with_phases():
    """Should prepare the normalized vector including phases."""
    vector = np.array([1.0, -1.0j, 0.5, 0.0, 2.0])
    amplitudes = kp_amplitudes(kp_build(vector))
    assert np.allclose(amplitudes, vector / np.linalg.norm(vector))


def test_kp_update_matches_rebuild():
    """Should give the same tree as rebuilding after a single-leaf update."""
    tree = kp_update(kp_build([1.0, 2.0, 3.0, 4.0]), 2, -1.0)
    rebuilt = kp_build([1.0, 2.0, -1.0, 4.0])
    for updated, expected in zip(tree.levels, rebuilt.levels):
        assert np.allclose(updated, expected)


def test_kp_update_out_of_range():
    """Should refuse to update a leaf past the stored length."""
    with pytest.raises(IndexOutOfRange):
        kp_update(kp_build([1.0, 2.0, 3.0]), 3, 1.0)


def test_kp_amplitudes_zero_root():
    """Should raise ZeroVector for an all-zero tree."""
    with pytest.raises(ZeroVector):
        kp_amplitudes(kp_build([0.0, 0.0]))


def test_make_signal_norm():
    """Should record the norm and expose the unit state."""
    signal = make_signal([3.0, 4.0])
    assert signal.norm == pytest.approx(5.0)
    assert np.allclose(signal.state, [0.6, 0.8])
