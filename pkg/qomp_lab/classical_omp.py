"""Reference classical solvers: greedy OMP in both formulations, the l0 oracle and certificates."""
import enum
import itertools
import logging
from dataclasses import dataclass, field
from math import comb
from typing import List, Optional, Tuple

import numpy as np

from qomp_lab.core import (
    Dictionary,
    Signal,
    Support,
    VectorLike,
    make_signal,
    project_colspace_exact,
    pseudoinverse,
    restrict,
    sigma_min,
)
from qomp_lab.errors import CombinatorialBlowup, InvalidParameter, RankDeficient

logger = logging.getLogger(__name__)

MAX_ENUMERATED_SUBSETS = 10 ** 7
# Absolute slack when comparing a least-squares residual with a threshold.
RESIDUAL_ATOL = 1e-10


class RecoveryStatus(str, enum.Enum):
    CONVERGED = "converged"
    SPARSITY_EXCEEDED = "sparsity_exceeded"
    MAX_ITERATIONS_INTERNAL = "max_iterations_internal"


@dataclass
class RecoveryResult:
    support: Support
    coefficients: np.ndarray
    residual_norms: List[float] = field(default_factory=list)
    iterations: int = 0
    status: RecoveryStatus = RecoveryStatus.CONVERGED

    @property
    def failed(self) -> bool:
        return self.status is not RecoveryStatus.CONVERGED


def _check_run_parameters(sparsity: int, epsilon: float) -> None:
    if sparsity < 1:
        raise InvalidParameter(f"Sparsity threshold L must be at least 1, got {sparsity}")
    if epsilon <= 0:
        raise InvalidParameter(f"Residual threshold must be positive, got {epsilon}")


def least_squares(dictionary: Dictionary, support: Support, signal: np.ndarray) -> np.ndarray:
    """argmin_x ||s - D_Lambda x||, returned as an m-vector that vanishes off the support."""
    coefficients = np.zeros(dictionary.m, dtype=complex)
    if len(support):
        compact = dictionary.columns(support.indices)
        coefficients[list(support.indices)] = pseudoinverse(compact) @ signal
    return coefficients


def _argmax_smallest_index(scores: np.ndarray, candidates: List[int]) -> int:
    # np.argmax returns the first maximum, candidates are ascending
    return candidates[int(np.argmax(scores))]


def _finish(
    dictionary: Dictionary,
    support: Support,
    signal: np.ndarray,
    residual_norms: List[float],
    iterations: int,
    sparsity: int,
    exhausted: bool,
) -> RecoveryResult:
    if iterations > sparsity:
        status = RecoveryStatus.SPARSITY_EXCEEDED
    elif exhausted:
        status = RecoveryStatus.MAX_ITERATIONS_INTERNAL
    else:
        status = RecoveryStatus.CONVERGED
    return RecoveryResult(
        support=support,
        coefficients=least_squares(dictionary, support, signal),
        residual_norms=residual_norms,
        iterations=iterations,
        status=status,
    )


def omp(dictionary: Dictionary, signal: VectorLike, sparsity: int, epsilon: float) -> RecoveryResult:
    """
    Greedy orthogonal matching pursuit with an explicit residual vector.

    The loop runs while k <= L and ||r|| > epsilon; leaving with k > L is a FAIL.
    """
    _check_run_parameters(sparsity, epsilon)
    s = make_signal(signal).amplitudes
    support = Support.empty(dictionary.m)
    residual = s.copy()
    residual_norms: List[float] = []
    k = 0
    exhausted = False
    while not (k > sparsity or np.linalg.norm(residual) <= epsilon):
        candidates = support.complement()
        if not candidates:
            exhausted = True
            break
        scores = np.abs(dictionary.entries[:, candidates].conj().T @ residual)
        support = support.add(_argmax_smallest_index(scores, candidates))
        x = least_squares(dictionary, support, s)
        residual = s - dictionary.entries @ x
        residual_norms.append(float(np.linalg.norm(residual)))
        k += 1
    return _finish(dictionary, support, s, residual_norms, k, sparsity, exhausted)


def omp_projection(
    dictionary: Dictionary, signal: VectorLike, sparsity: int, epsilon: float
) -> RecoveryResult:
    """OMP written with column-space projections only, the form the quantum loop mirrors."""
    _check_run_parameters(sparsity, epsilon)
    s = make_signal(signal)
    support = Support.empty(dictionary.m)
    residual_norm = s.norm
    residual_norms: List[float] = []
    k = 0
    exhausted = False
    while not (k > sparsity or residual_norm <= epsilon):
        candidates = support.complement()
        if not candidates:
            exhausted = True
            break
        if k == 0:
            target = s.amplitudes
        else:
            phi, _ = project_colspace_exact(restrict(dictionary, support), s)
            target = s.amplitudes - phi
        scores = np.abs(dictionary.entries[:, candidates].conj().T @ target)
        support = support.add(_argmax_smallest_index(scores, candidates))
        phi, _ = project_colspace_exact(restrict(dictionary, support), s)
        residual_norm = float(np.linalg.norm(s.amplitudes - phi))
        residual_norms.append(residual_norm)
        k += 1
    return _finish(dictionary, support, s.amplitudes, residual_norms, k, sparsity, exhausted)


def residual_norm(dictionary: Dictionary, support: Support, signal: VectorLike) -> float:
    s = make_signal(signal)
    phi, _ = project_colspace_exact(restrict(dictionary, support), s)
    return float(np.linalg.norm(s.amplitudes - phi))


def fits(residual: float, epsilon: float) -> bool:
    return residual <= epsilon + RESIDUAL_ATOL


def count_subsets(m: int, max_size: int) -> int:
    return sum(comb(m, size) for size in range(0, max_size + 1))


def guard_enumeration(m: int, max_size: int) -> None:
    total = count_subsets(m, max_size)
    if total > MAX_ENUMERATED_SUBSETS:
        raise CombinatorialBlowup(
            f"Enumerating supports of size <= {max_size} over {m} atoms needs {total} fits"
        )


def brute_force_l0(
    dictionary: Dictionary, signal: VectorLike, epsilon: float, max_size: int
) -> Optional[Tuple[Support, np.ndarray]]:
    """Smallest support whose least-squares fit reaches the threshold, ties lexicographic."""
    guard_enumeration(dictionary.m, max_size)
    s = make_signal(signal)
    for size in range(0, max_size + 1):
        for combination in itertools.combinations(range(dictionary.m), size):
            support = Support(combination, dictionary.m)
            if fits(residual_norm(dictionary, support, s), epsilon):
                return support, least_squares(dictionary, support, s.amplitudes)
    return None


def erc_value(dictionary: Dictionary, optimal: Support) -> float:
    """max over atoms psi outside the optimal support of ||A_opt^+ psi||_1."""
    outside = optimal.complement()
    if not outside:
        return 0.0
    compact = dictionary.columns(optimal.indices)
    if not len(optimal) or sigma_min(compact) <= 1e-12:
        raise RankDeficient("The optimal subdictionary must have full column rank")
    projections = pseudoinverse(compact) @ dictionary.entries[:, outside]
    return float(np.max(np.sum(np.abs(projections), axis=0)))


def mi_condition(mu: float, sparsity: int, eta: float = 0.0) -> bool:
    """K < (1 - eta) / (2 - eta) * (1/mu + 1); eta = 0 is the classical condition."""
    if mu <= 0.0:
        return True
    # cross-multiplied so the boundary case compares exactly
    return sparsity * (2.0 - eta) < (1.0 - eta) * (1.0 / mu + 1.0)
