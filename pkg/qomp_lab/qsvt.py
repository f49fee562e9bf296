"""
Matrix-level simulation of block-encodings and singular value transformation.

A BlockEncoding stores the matrix its unitary actually encodes (times alpha) together with
the declared normalization, ancilla count, error bound and query cost in model units.
Polynomials live in the Chebyshev basis on [-scale, scale].
"""
import enum
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.special
from numpy.polynomial import chebyshev

from qomp_lab.core import (
    KPTree,
    MatrixLike,
    VectorLike,
    as_vector,
    kp_build,
    mu_best,
    nonzero_columns,
    project_colspace_exact,
    pseudoinverse,
    sigma_max,
    sigma_min,
    singular_values,
)
from qomp_lab.errors import (
    ConstructionFailed,
    DimensionMismatch,
    GammaTooLarge,
    IllConditioned,
    InvalidParameter,
    NonTerminating,
    PrecisionInsufficient,
    ZeroAlpha,
    ZeroProjection,
)
from qomp_lab.quantum_primitives import (
    Charges,
    EstimateOutcome,
    NoiseModel,
    QueryLedger,
    amp_est,
    combine_charges,
    evaluations_for,
    fixed_point_amplify_cost,
    perturb_state,
)

logger = logging.getLogger(__name__)

# degree <= SIGN_DEGREE_CONSTANT * log(1/eps) / delta for every constructed sign polynomial
SIGN_DEGREE_CONSTANT = 12.0
VALIDATION_POINTS = 10 ** 4
MAX_CONSTRUCTION_RETRIES = 3
MAX_PROJECTOR_DELTA = 0.9
# Each of the two transformations in the projector runs at epsilon / PROJECTOR_SPLIT.
PROJECTOR_SPLIT = 6.0
# Calibrated constant c in "block-encoding error <= eps / c" for the norm estimators.
NORM_PRECISION_CONSTANT = 2.0
MARKOV_FACTOR = 4.0
# Each relative bootstrap at error 1/2 overshoots with probability below 1/2.
MAX_BOOTSTRAP_ATTEMPTS = 12
ORACLE_COST_UNITS = 2


@dataclass(frozen=True)
class BlockEncoding:
    matrix: np.ndarray
    alpha: float
    ancillas: int
    epsilon: float = 0.0
    cost: int = ORACLE_COST_UNITS

    @property
    def degenerate(self) -> bool:
        return self.alpha == 0.0

    @property
    def block(self) -> np.ndarray:
        """Top-left block of the unitary, i.e. matrix / alpha."""
        if self.degenerate:
            return np.zeros_like(self.matrix)
        return self.matrix / self.alpha


@dataclass(frozen=True)
class Guarantee:
    region: str
    epsilon: float
    bound: float = 1.0
    scale: float = 1.0
    delta: Optional[float] = None
    width: Optional[float] = None


@dataclass(frozen=True)
class OddPolynomial:
    chebyshev_coeffs: Tuple[float, ...]
    degree: int
    guarantee: Guarantee = field(default_factory=lambda: Guarantee("identity", 0.0))
    scale: float = 1.0

    def __call__(self, x) -> np.ndarray:
        return chebyshev.chebval(np.asarray(x, dtype=float) / self.scale, self.chebyshev_coeffs)

    @classmethod
    def identity(cls) -> "OddPolynomial":
        return cls((0.0, 1.0), 1)


def _ceil_log2(value: int) -> int:
    return max(0, math.ceil(math.log2(value)))


def block_encode_oracular(matrix: MatrixLike) -> BlockEncoding:
    a = np.asarray(matrix, dtype=complex)
    n, m = a.shape
    alpha = float(np.linalg.norm(a))
    if alpha == 0.0:
        logger.warning("degenerate-block-encoding: zero matrix has alpha 0")
    return BlockEncoding(a, alpha, _ceil_log2(n + m), 0.0, ORACLE_COST_UNITS)


def qram_trees(matrix: MatrixLike, p: float) -> Tuple[Tuple[KPTree, ...], Tuple[KPTree, ...]]:
    """KP-trees over the rows of |A|^p and the columns of |A|^(1-p)."""
    magnitudes = np.abs(np.asarray(matrix, dtype=complex))

    def powered(exponent: float) -> np.ndarray:
        return np.where(magnitudes > 0.0, magnitudes ** exponent, 0.0)

    rows = tuple(kp_build(row) for row in powered(p))
    columns = tuple(kp_build(column) for column in powered(1.0 - p).T)
    return rows, columns


def block_encode_qram(matrix: MatrixLike, p: Optional[float] = None) -> BlockEncoding:
    """
    Block-encoding from KP-tree storage. With p given, alpha is mu_p read off the tree
    roots; otherwise the best of the p-grid and the Frobenius norm.
    """
    a = np.asarray(matrix, dtype=complex)
    n, m = a.shape
    if p is None:
        alpha, _ = mu_best(a)
    else:
        rows, columns = qram_trees(a, p)
        alpha = math.sqrt(max(t.root for t in rows) * max(t.root for t in columns))
    cost = max(1, _ceil_log2(n * m + 1))
    return BlockEncoding(a, float(alpha), _ceil_log2(n + m + 1), 0.0, cost)


def be_rescale(encoding: BlockEncoding) -> BlockEncoding:
    if encoding.alpha <= 0.0:
        raise ZeroAlpha("Cannot rescale a block-encoding with alpha 0")
    return BlockEncoding(
        encoding.matrix / encoding.alpha,
        1.0,
        encoding.ancillas,
        encoding.epsilon / encoding.alpha,
        encoding.cost,
    )


def be_adjoint(encoding: BlockEncoding) -> BlockEncoding:
    return BlockEncoding(
        encoding.matrix.conj().T, encoding.alpha, encoding.ancillas, encoding.epsilon, encoding.cost
    )


def be_product(first: BlockEncoding, second: BlockEncoding) -> BlockEncoding:
    """(alpha*beta, a+b, alpha*eps_second + beta*eps_first) encoding of A B."""
    if first.matrix.shape[1] != second.matrix.shape[0]:
        raise DimensionMismatch(
            f"Cannot multiply {first.matrix.shape} by {second.matrix.shape}"
        )
    return BlockEncoding(
        first.matrix @ second.matrix,
        first.alpha * second.alpha,
        first.ancillas + second.ancillas,
        first.alpha * second.epsilon + second.alpha * first.epsilon,
        first.cost + second.cost,
    )


def _odd_truncation(coeffs: np.ndarray, tail_budget: float) -> Tuple[float, ...]:
    coeffs = coeffs.copy()
    coeffs[0::2] = 0.0
    tails = np.cumsum(np.abs(coeffs[::-1]))[::-1]
    # tails[j] = sum_{i >= j} |c_i|; keep up to the first odd degree whose tail fits
    degree = 1
    for j in range(1, coeffs.size, 2):
        if j + 1 >= coeffs.size or tails[j + 1] <= tail_budget:
            degree = j
            break
    return tuple(float(c) for c in coeffs[: degree + 1])


def _validation_grid(low: float, high: float) -> np.ndarray:
    return np.linspace(low, high, VALIDATION_POINTS)


def _validate_sign(poly: OddPolynomial, delta: float, epsilon: float) -> bool:
    grid = _validation_grid(-2.0, 2.0)
    values = poly(grid)
    outside = np.abs(grid) >= delta
    bounded = np.max(np.abs(values)) <= 1.0 + 1e-9
    accurate = np.max(np.abs(values[outside] - np.sign(grid[outside]))) <= epsilon
    return bool(bounded and accurate)


@functools.lru_cache(maxsize=256)
def sign_poly(delta: float, epsilon: float) -> OddPolynomial:
    """
    Odd polynomial with |P| <= 1 on [-2, 2] and |P - sign| <= epsilon outside (-delta, delta).

    Built from erf(k x) scaled by (1 - epsilon/4), interpolated at Chebyshev nodes on
    [-2, 2] and truncated once the odd tail drops below the remaining budget. The grid
    check is the contract; on failure the inner budgets are halved and the build retried.
    """
    if not 0 < delta < 1:
        raise InvalidParameter(f"Sign polynomial width must be in (0, 1), got {delta}")
    if not 0 < epsilon < 0.5:
        raise InvalidParameter(f"Sign polynomial error must be in (0, 1/2), got {epsilon}")
    budget = epsilon / 4
    for attempt in range(MAX_CONSTRUCTION_RETRIES + 1):
        steepness = math.sqrt(math.log(1 / budget)) / delta
        target_scale = 1.0 - budget

        def target(y: np.ndarray) -> np.ndarray:
            return target_scale * scipy.special.erf(2.0 * steepness * y)

        nodes = 2 * math.ceil(8 * math.log(4 / budget) / delta) + 1
        coeffs = _odd_truncation(chebyshev.chebinterpolate(target, nodes), budget)
        poly = OddPolynomial(
            coeffs,
            len(coeffs) - 1,
            Guarantee("|x| in [delta, 2]", epsilon, 1.0, 2.0, delta=delta),
            2.0,
        )
        if _validate_sign(poly, delta, epsilon):
            return poly
        logger.warning(
            f"polynomial-escalated: sign polynomial attempt {attempt} failed validation "
            f"(delta={delta}, epsilon={epsilon}, degree={poly.degree})"
        )
        budget /= 2
    raise ConstructionFailed(f"Sign polynomial failed validation for delta={delta}, epsilon={epsilon}")


def sign_degree_bound(delta: float, epsilon: float) -> float:
    return SIGN_DEGREE_CONSTANT * math.log(1 / epsilon) / delta


def sign_degree_estimate(delta: float, epsilon: float) -> int:
    """Analytic degree used for cost accounting of simulated projections."""
    return 2 * math.ceil(2 * math.log(4 / epsilon) / delta) + 1


def _validate_step(poly: OddPolynomial, width: float, epsilon: float) -> bool:
    grid = _validation_grid(-1.0, 1.0)
    values = poly(grid)
    upper = grid >= width
    middle = np.abs(grid) <= width / 3
    return bool(
        np.max(np.abs(values)) <= 1.0 + 1e-9
        and np.max(np.abs(1.0 - values[upper])) <= epsilon
        and np.max(np.abs(values[middle])) <= epsilon
    )


@functools.lru_cache(maxsize=64)
def antisym_step_poly(width: float, epsilon: float) -> OddPolynomial:
    """P(x) = (Q(x + 2w/3) + Q(x - 2w/3)) / 2 with Q the sign polynomial of width w/3."""
    if not 0 < width < 1:
        raise InvalidParameter(f"Step width must be in (0, 1), got {width}")
    if not 0 < epsilon < 0.5:
        raise InvalidParameter(f"Step error must be in (0, 1/2), got {epsilon}")
    base = sign_poly(width / 3, epsilon)
    shift = 2 * width / 3

    def target(x: np.ndarray) -> np.ndarray:
        return (base(x + shift) + base(x - shift)) / 2

    coeffs = chebyshev.chebinterpolate(target, base.degree)
    coeffs[0::2] = 0.0
    poly = OddPolynomial(
        tuple(float(c) for c in coeffs),
        base.degree,
        Guarantee("x in [w, 1] and |x| <= w/3", epsilon, 1.0, 1.0, width=width),
        1.0,
    )
    if not _validate_step(poly, width, epsilon):
        raise ConstructionFailed(f"Step polynomial failed validation for w={width}, epsilon={epsilon}")
    return poly


def svt_apply(poly: OddPolynomial, encoding: BlockEncoding, delta: Optional[float] = None) -> BlockEncoding:
    """
    (1, q+2, delta) encoding of P applied to the singular values of A/alpha.

    delta defaults to the smallest value the input error allows, 4 d sqrt(eps/alpha).
    """
    if encoding.alpha <= 0.0:
        raise ZeroAlpha("Singular value transformation needs alpha > 0")
    degree = max(1, poly.degree)
    allowed = 4 * degree * math.sqrt(encoding.epsilon / encoding.alpha)
    if delta is None:
        delta = allowed
    elif encoding.epsilon > encoding.alpha * delta ** 2 / (16 * degree ** 2):
        raise PrecisionInsufficient(
            f"Encoding error {encoding.epsilon} exceeds alpha*delta^2/(16 d^2) for d={degree}"
        )
    left, singular, right = scipy.linalg.svd(encoding.block, full_matrices=False)
    transformed = (left * poly(singular)) @ right
    return BlockEncoding(transformed, 1.0, encoding.ancillas + 2, float(delta), degree * encoding.cost)


def projector_delta(alpha: float, gamma: float) -> float:
    return min(gamma / alpha, MAX_PROJECTOR_DELTA)


def colspace_projector_be(
    restricted: MatrixLike, gamma: float, epsilon: float, step: str = "sign"
) -> BlockEncoding:
    """(1, 2(q+2), epsilon) encoding of U U^dagger built as P(A) P(A)^dagger."""
    a = np.asarray(restricted, dtype=complex)
    floor = sigma_min(a)
    if gamma > floor + 1e-9:
        raise GammaTooLarge(f"gamma={gamma} exceeds the smallest singular value {floor}")
    if not 0 < epsilon < 1:
        raise InvalidParameter(f"Projector error must be in (0, 1), got {epsilon}")
    encoding = block_encode_oracular(a)
    delta = projector_delta(encoding.alpha, gamma)
    if step == "antisymmetric":
        poly = antisym_step_poly(delta, epsilon / PROJECTOR_SPLIT)
    else:
        poly = sign_poly(delta, epsilon / PROJECTOR_SPLIT)
    transformed = svt_apply(poly, encoding, delta=epsilon / PROJECTOR_SPLIT)
    projector = be_product(transformed, be_adjoint(transformed))
    return BlockEncoding(
        projector.matrix, 1.0, 2 * (encoding.ancillas + 2), epsilon, projector.cost
    )


class ProjectionVariant(str, enum.Enum):
    STATE = "state"
    ABS_NORM = "abs_norm"
    REL_NORM = "rel_norm"


@dataclass
class StateOutcome:
    state: Optional[np.ndarray]
    tolerance: float
    queries_charged: int
    terminated: bool = True
    gamma_used: Optional[float] = None


def projection_charges(alpha: float, gamma: float, epsilon: float) -> Dict[str, int]:
    """One application of the projector encoding: P(A) then P(A)^dagger."""
    degree = sign_degree_estimate(projector_delta(alpha, gamma), min(epsilon, 0.49) / PROJECTOR_SPLIT)
    return {"u_d": degree, "u_d_dag": degree, "aux_gates": 2 * degree}


SIGNAL_PREP: Dict[str, int] = {"u_s": 1, "u_s_dag": 1}


def projector_encoding(restricted: np.ndarray, access: str = "oracular") -> BlockEncoding:
    compact = nonzero_columns(restricted)
    if access == "qram":
        return block_encode_qram(compact)
    return block_encode_oracular(compact)


def relative_estimate(
    truth: float,
    scale: float,
    epsilon: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    per_call: Charges,
) -> EstimateOutcome:
    """
    Relative-error estimate of truth in [0, scale] by halving an additive tolerance until
    the estimate clears it by (1 + eps)/eps. Stops with terminated=False past the Markov
    cutoff (4x the analytic expectation) or when the tolerance underflows.
    """
    if truth > 0:
        expected = 2 * math.pi * (1 + epsilon) * scale / (epsilon * truth)
    else:
        expected = math.inf
    cutoff = MARKOV_FACTOR * expected
    tolerance = scale
    spent = 0
    while tolerance > 1e-12 * scale:
        evaluations = evaluations_for(tolerance / scale)
        outcome = amp_est(truth / scale, evaluations, noise, ledger, per_call)
        spent += evaluations
        estimate = outcome.value * scale
        if estimate >= tolerance * (1 + epsilon) / epsilon:
            value = truth if noise.exact else estimate
            return EstimateOutcome(value, epsilon * value, outcome.success, spent)
        if spent > cutoff:
            break
        tolerance /= 2
    logger.warning(f"markov-cutoff: relative estimate stopped after {spent} evaluations")
    return EstimateOutcome(0.0, math.inf, False, spent, terminated=False)


Outcome = Union[EstimateOutcome, "StateOutcome"]


def require_terminated(outcome: Outcome) -> Outcome:
    """Pass a terminated outcome through; raise for one stopped at the Markov cutoff."""
    if not outcome.terminated:
        raise NonTerminating(
            f"Estimation stopped at the Markov cutoff after {outcome.queries_charged} evaluations",
            recovery_suggestion="The estimated quantity is zero or below the resolvable scale",
        )
    return outcome


def column_space_projection(
    restricted: MatrixLike,
    signal: VectorLike,
    gamma: float,
    epsilon: float,
    variant: ProjectionVariant,
    noise: NoiseModel,
    ledger: QueryLedger,
    access: str = "oracular",
    signal_charges: Charges = SIGNAL_PREP,
):
    """
    Projection of the signal onto the column space of D_Lambda.

    STATE returns a StateOutcome with a unit vector within epsilon of the normalized
    projection; ABS_NORM and REL_NORM return EstimateOutcomes for ||D D^+ s|| with additive
    and relative error. Values are exact projections perturbed by the noise model.
    """
    if gamma <= 0:
        raise InvalidParameter(f"Projection needs a positive singular value bound, got gamma={gamma}")
    a = np.asarray(restricted, dtype=complex)
    vector = as_vector(signal)
    phi, phi_norm = project_colspace_exact(a, vector)
    signal_norm = float(np.linalg.norm(vector))
    alpha = projector_encoding(a, access).alpha if np.any(a) else 1.0
    per_call = combine_charges(signal_charges, projection_charges(alpha, gamma, epsilon))
    variant = ProjectionVariant(variant)
    if variant is ProjectionVariant.STATE:
        if phi_norm < 1e-12:
            raise ZeroProjection("The signal has no component in the column space")
        rounds = math.ceil(signal_norm / phi_norm)
        ledger.charge(rounds, per_call)
        state = perturb_state(phi / phi_norm, epsilon, noise)
        return StateOutcome(state, epsilon, rounds)
    if signal_norm == 0.0:
        return EstimateOutcome(0.0, epsilon, True, 0)
    if variant is ProjectionVariant.ABS_NORM:
        evaluations = evaluations_for(epsilon / signal_norm)
        outcome = amp_est(phi_norm / signal_norm, evaluations, noise, ledger, per_call)
        value = phi_norm if noise.exact else outcome.value * signal_norm
        return EstimateOutcome(value, epsilon, outcome.success, evaluations)
    return relative_estimate(phi_norm, signal_norm, epsilon, noise, ledger, per_call)


def matvec_and_norm(
    encoding: BlockEncoding,
    x: VectorLike,
    variant: int,
    epsilon: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    gamma: Optional[float] = None,
    per_call: Optional[Charges] = None,
):
    """
    Matrix-vector multiplication and norm estimation from a block-encoding.

    1: additive estimate of ||Ax||/||x||;  2: relative estimate (non-terminating if Ax = 0);
    3: state within epsilon of Ax/||Ax|| given gamma <= ||Ax||/||x||;
    4: like 3 with gamma = (2/3) of a relative estimate at error 1/2.
    """
    vector = as_vector(x)
    if encoding.matrix.shape[1] != vector.shape[0]:
        raise DimensionMismatch(f"Cannot apply {encoding.matrix.shape} to length {vector.shape[0]}")
    matrix_calls = combine_charges(
        per_call or {"u_d": 1, "u_d_dag": 1}, scale=max(1, encoding.cost // ORACLE_COST_UNITS)
    )
    calls = combine_charges(matrix_calls, SIGNAL_PREP)
    x_norm = float(np.linalg.norm(vector))
    image = encoding.matrix @ vector
    truth = float(np.linalg.norm(image)) / x_norm if x_norm > 0 else 0.0
    alpha = encoding.alpha

    if variant == 1:
        if encoding.epsilon > epsilon / NORM_PRECISION_CONSTANT:
            raise PrecisionInsufficient("Block-encoding error too large for the requested precision")
        evaluations = evaluations_for(epsilon / alpha)
        outcome = amp_est(truth / alpha, evaluations, noise, ledger, calls)
        value = truth if noise.exact else outcome.value * alpha
        return EstimateOutcome(value, epsilon, outcome.success, evaluations)
    if variant == 2:
        return relative_estimate(truth, alpha, epsilon, noise, ledger, calls)
    bootstrap_spent = 0
    if variant == 4:
        gamma = None
        for attempt in range(1, MAX_BOOTSTRAP_ATTEMPTS + 1):
            bootstrap = relative_estimate(truth, alpha, 0.5, noise, ledger, calls)
            bootstrap_spent += bootstrap.queries_charged
            if not bootstrap.terminated:
                return StateOutcome(None, epsilon, bootstrap_spent, terminated=False)
            gamma = 2.0 * bootstrap.value / 3.0
            if gamma <= truth + 1e-12:
                break
            # the bootstrap landed in its failure tail; the amplification would not converge
            logger.info(f"bootstrap-retried: attempt {attempt} gave gamma={gamma} above {truth}")
        else:
            logger.warning(f"gamma-clamped: bootstrap kept overshooting, using ||Ax||/||x|| = {truth}")
            gamma = truth
    if variant in (3, 4):
        if gamma is None or gamma <= 0:
            raise InvalidParameter("State variant needs a positive lower bound gamma")
        if gamma > truth + 1e-12:
            raise GammaTooLarge(f"gamma={gamma} exceeds ||Ax||/||x|| = {truth}")
        if encoding.epsilon > epsilon * gamma / 3:
            raise PrecisionInsufficient("Block-encoding error exceeds eps*gamma/3")
        success_lb = min(1.0, (gamma - encoding.epsilon) / alpha)
        rounds = fixed_point_amplify_cost(success_lb, min(epsilon, 0.5))
        ledger.charge(rounds, calls)
        state = perturb_state(image / np.linalg.norm(image), epsilon, noise)
        return StateOutcome(state, epsilon, bootstrap_spent + rounds, gamma_used=gamma)
    raise InvalidParameter(f"Unknown matvec variant {variant}")


def qlss_solve(
    encoding: BlockEncoding,
    signal: VectorLike,
    gamma: float,
    delta: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    signal_charges: Charges = SIGNAL_PREP,
) -> np.ndarray:
    """Unit vector within delta of A^+ b / ||A^+ b||."""
    a = encoding.matrix
    b = as_vector(signal)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"Right-hand side length {b.shape[0]} does not match {a.shape[0]} rows")
    floor = sigma_min(a)
    if floor < gamma - 1e-9 or floor <= 1e-12:
        raise IllConditioned(f"Smallest singular value {floor} is below gamma={gamma}")
    alpha = max(encoding.alpha, sigma_max(a))
    ratio = max(math.log(alpha / (gamma * delta)), 1.0)
    if encoding.epsilon > gamma ** 3 * delta / (alpha ** 2 * ratio ** 2):
        raise PrecisionInsufficient("Block-encoding error too large for the linear-system solver")
    solution = pseudoinverse(a) @ b
    norm = np.linalg.norm(solution)
    if norm < 1e-12:
        raise ZeroProjection("The right-hand side is orthogonal to the column space")
    condition = alpha / gamma
    rounds = math.ceil(condition * max(math.log(condition), 1.0))
    matrix_calls = max(1, encoding.cost // ORACLE_COST_UNITS)
    ledger.charge(rounds * math.ceil(ratio), {"u_d": matrix_calls, "u_d_dag": matrix_calls})
    ledger.charge(rounds, signal_charges)
    return perturb_state(solution / norm, delta, noise)


def operator_distance(first: np.ndarray, second: np.ndarray) -> float:
    values = singular_values(np.asarray(first) - np.asarray(second))
    return float(values[0]) if values.size else 0.0
