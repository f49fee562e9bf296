import math
from itertools import combinations

import numpy as np
import pytest

from qomp_lab.classical_omp import residual_norm
from qomp_lab.core import Support
from qomp_lab.errors import CombinatorialBlowup, InvalidInstance
from qomp_lab.hardness import (
    X3CInstance,
    equivalence_epsilon,
    equivalence_holds,
    make_x3c,
    reduce_x3c,
    solve_reduced,
    verify_reduction,
    x3c_bitmask,
    x3c_brute,
)
from qomp_lab.services.generators import planted_x3c, random_x3c

pytestmark = pytest.mark.unit


def is_cover(instance, chosen):
    covered = [element for index in chosen for element in instance.triples[index]]
    return sorted(covered) == list(range(instance.ground_size))


# ---------------------- Instance Tests ----------------------
@pytest.mark.parametrize(
    "ground_size, triples",
    [
        pytest.param(4, [(0, 1, 2)], id="Ground size not a multiple of 3"),
        pytest.param(0, [], id="Empty ground set"),
        pytest.param(3, [(0, 0, 1)], id="Repeated element"),
        pytest.param(3, [(0, 1, 3)], id="Element outside the ground set"),
        pytest.param(6, [(0, 1)], id="Pair instead of triple"),
    ],
)
def test_make_x3c_rejects_malformed(ground_size, triples):
    """Should raise InvalidInstance for malformed instances."""
    with pytest.raises(InvalidInstance):
        make_x3c(ground_size, triples)


def test_make_x3c_sorts_triples():
    """Should store each triple in ascending order."""
    instance = make_x3c(6, [(5, 3, 4), [2, 0, 1]])
    assert instance.triples == ((3, 4, 5), (0, 1, 2))
    assert instance.cover_size == 2


# ---------------------- Reduction Tests ----------------------
def test_reduce_single_triple():
    """Should build a 1/sqrt(3) column and unit-norm uniform target for N = 3."""
    # Act
    reduced = reduce_x3c(make_x3c(3, [(0, 1, 2)]))
    # Assert
    assert np.allclose(reduced.dictionary.entries[:, 0], 1 / math.sqrt(3))
    assert np.allclose(reduced.signal.amplitudes, 1 / math.sqrt(3))
    assert reduced.eps_bound == pytest.approx(1.0)
    assert reduced.sound_bound == pytest.approx(1 / math.sqrt(3))


def test_reduce_twelve_elements():
    """Should give sqrt(3/N) = 0.5 as the size bound and 1/sqrt(12) as the sound bound for N = 12."""
    instance = planted_x3c(12, 4, np.random.default_rng(0))
    reduced = reduce_x3c(instance)
    assert reduced.dictionary.n == 12
    assert reduced.dictionary.m == 8
    assert reduced.eps_bound == pytest.approx(0.5)
    assert reduced.sound_bound == pytest.approx(1 / math.sqrt(12))
    assert equivalence_epsilon(instance) == pytest.approx(0.9 / math.sqrt(12))


def test_reduce_without_triples():
    """Should refuse an instance with no triples."""
    with pytest.raises(InvalidInstance):
        reduce_x3c(X3CInstance(3, ()))


def test_exact_cover_is_zero_residual_support():
    """Should represent the target exactly with coefficients sqrt(3)/sqrt(N) on a cover."""
    # Arrange
    instance = make_x3c(6, [(0, 1, 2), (2, 3, 4), (3, 4, 5)])
    reduced = reduce_x3c(instance)
    cover = Support((0, 2), 3)
    # Act
    residual = residual_norm(reduced.dictionary, cover, reduced.signal)
    coefficients = np.linalg.pinv(reduced.dictionary.columns(cover.indices)) @ reduced.signal.amplitudes
    # Assert
    assert residual == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(coefficients, math.sqrt(3) / math.sqrt(6))


@pytest.mark.parametrize("seed", range(5))
def test_small_supports_stay_above_size_bound(seed):
    """Should keep every support smaller than N/3 at residual at least sqrt(3/N)."""
    instance = random_x3c(9, 8, np.random.default_rng(seed))
    reduced = reduce_x3c(instance)
    m = reduced.dictionary.m
    for size in range(instance.cover_size):
        for chosen in combinations(range(m), size):
            residual = residual_norm(reduced.dictionary, Support(chosen, m), reduced.signal)
            assert residual >= reduced.eps_bound - 1e-12


# ---------------------- Verification Tests ----------------------
def test_verify_planted_cover():
    """Should map a planted cover back to its triple indices."""
    instance = make_x3c(6, [(0, 1, 2), (2, 3, 4), (3, 4, 5)])
    assert verify_reduction(instance, Support((2, 0), 3)) == [0, 2]


@pytest.mark.parametrize(
    "support",
    [
        pytest.param(None, id="No support"),
        pytest.param(Support((0, 1), 3), id="Overlapping triples"),
        pytest.param(Support((0, 1, 2), 3), id="Larger than N over 3"),
        pytest.param(Support((), 3), id="Empty support"),
    ],
)
def test_verify_rejects_non_covers(support):
    """Should return None for supports that are not exact covers."""
    instance = make_x3c(6, [(0, 1, 2), (2, 3, 4), (3, 4, 5)])
    assert verify_reduction(instance, support) is None


# ---------------------- Solver Tests ----------------------
def test_brute_and_bitmask_agree():
    """Should agree on cover existence and return valid covers."""
    rng = np.random.default_rng(3)
    for _ in range(30):
        instance = random_x3c(9, int(rng.integers(3, 12)), rng)
        brute, bitmask = x3c_brute(instance), x3c_bitmask(instance)
        assert (brute is None) == (bitmask is None)
        if brute is not None:
            assert is_cover(instance, brute)
            assert is_cover(instance, bitmask)


def test_brute_finds_planted_cover():
    """Should find a cover in every planted instance."""
    rng = np.random.default_rng(8)
    for _ in range(10):
        instance = planted_x3c(9, 5, rng)
        assert is_cover(instance, x3c_brute(instance))


def test_solvers_guard_large_instances():
    """Should refuse exhaustive search over more than 24 triples."""
    instance = random_x3c(9, 25, np.random.default_rng(0))
    with pytest.raises(CombinatorialBlowup):
        x3c_brute(instance)
    with pytest.raises(CombinatorialBlowup):
        x3c_bitmask(instance)


@pytest.mark.parametrize("seed", range(12))
def test_reduction_equivalence(seed):
    """Should find a cover exactly when the reduced instance has a small fitting support."""
    rng = np.random.default_rng(seed)
    if seed % 2:
        instance = planted_x3c(9, int(rng.integers(0, 9)), rng)
    else:
        instance = random_x3c(int(rng.choice([6, 9])), int(rng.integers(2, 13)), rng)
    assert equivalence_holds(instance)


def test_solve_reduced_returns_cover():
    """Should recover a support that verifies as an exact cover."""
    instance = planted_x3c(9, 4, np.random.default_rng(5))
    support = solve_reduced(instance)
    assert verify_reduction(instance, support) is not None
