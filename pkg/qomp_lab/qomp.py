"""
Quantum orthogonal matching pursuit, simulated.

Each iteration selects an atom by approximate maximum finding over the score oracle and then
estimates the residual norm from (s, Lambda) alone, so estimation errors never carry over
from one iteration to the next.
"""
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from qomp_lab.classical_omp import RecoveryResult, RecoveryStatus
from qomp_lab.core import Dictionary, Signal, Support, kp_build, make_signal, restrict, sigma_min
from qomp_lab.errors import (
    AtomAlreadySelected,
    EmptyComplement,
    InvalidParameter,
    NormTooSmall,
    ZeroProjection,
)
from qomp_lab.qsvt import SIGNAL_PREP, ProjectionVariant, column_space_projection
from qomp_lab.quantum_primitives import (
    Charges,
    NoiseModel,
    QueryLedger,
    amplification_reps,
    combine_charges,
    find_max_approx,
    hadamard_inner_product,
    majority_vote,
    weighted_distance_estimate,
)

logger = logging.getLogger(__name__)

GAMMA_FLOOR = 1e-6
# An exact projection norm below this is treated as zero.
PHI_ZERO = 1e-12
NORM_SLACK = 1e-9
ATOM_CHARGES: Dict[str, int] = {"u_d": 1, "u_d_dag": 1}
MAJORITY_BASE_DELTA = 1 / 3


class AccessMode(str, enum.Enum):
    ORACULAR = "oracular"
    QRAM = "qram"


@dataclass(frozen=True)
class PrecisionBudget:
    eps_i: float
    eps_f: float
    eps_1re: float
    eps_1im: float
    eps_2re: float
    eps_2im: float
    eps_1phi: float
    eps_1nphi: float
    eps_2phi: float
    eps_2nphi: float
    eps_w: float
    eta: float = 0.0
    gamma: float = 1.0


def derive_budget(
    eps_i: float,
    eps_f: float,
    s_norm: float,
    phi_norm_est: float,
    first_iteration: bool = False,
    eta: float = 0.0,
    gamma: float = 1.0,
) -> PrecisionBudget:
    """
    Sub-tolerances at their maxima. The projection norm enters through max(phi, eps_f) so
    a vanishing estimate cannot blow the budgets up.
    """
    if eps_i <= 0 or eps_f <= 0:
        raise InvalidParameter(f"Top-level budgets must be positive, got eps_i={eps_i}, eps_f={eps_f}")
    if s_norm < 1.0 - NORM_SLACK:
        raise NormTooSmall(f"Signal norm {s_norm} is below 1")
    phi = max(phi_norm_est, eps_f)
    first = eps_i / (8 * s_norm ** 2) if first_iteration else eps_i / (48 * s_norm ** 2)
    second = eps_i / (48 * s_norm * phi)
    return PrecisionBudget(
        eps_i=eps_i,
        eps_f=eps_f,
        eps_1re=first,
        eps_1im=first,
        eps_2re=second,
        eps_2im=second,
        eps_1phi=eps_i / (96 * s_norm * phi),
        eps_1nphi=eps_i / (72 * s_norm),
        eps_2phi=eps_f / (3 * phi),
        eps_2nphi=eps_f / 3,
        eps_w=eps_f / 3,
        eta=eta,
        gamma=gamma,
    )


@dataclass
class QompState:
    support: Support
    sparsity: int
    eps_i: float
    eps_f: float
    gamma: float
    k: int = 0
    last_residual_estimate: float = math.inf
    ledger: QueryLedger = field(default_factory=QueryLedger)
    budget: Optional[PrecisionBudget] = None
    status: RecoveryStatus = RecoveryStatus.CONVERGED
    access: AccessMode = AccessMode.ORACULAR
    eta: float = 0.0
    phi_hat: Optional[np.ndarray] = None
    phi_norm_est: float = 0.0
    phi_charges: Dict[str, int] = field(default_factory=dict)
    last_scores: Dict[int, float] = field(default_factory=dict)
    # every iteration at the generic budget, the first included
    uniform_budgets: bool = False

    @property
    def delta_iter(self) -> float:
        return 1.0 / (6 * self.sparsity)

    @property
    def delta_atom(self) -> float:
        return self.delta_iter / 4


def _phi_negligible(estimate: float, eps_f: float, noise: NoiseModel) -> bool:
    return estimate < (PHI_ZERO if noise.exact else eps_f)


def signal_charges(signal: Signal, access: AccessMode) -> Dict[str, int]:
    """One preparation of |s> and its inverse; QRAM walks the KP-tree once per preparation."""
    if AccessMode(access) is AccessMode.QRAM:
        return combine_charges(SIGNAL_PREP, {"aux_gates": kp_build(signal.state).depth})
    return dict(SIGNAL_PREP)


def _prepare_projection(
    state: QompState,
    dictionary: Dictionary,
    signal: Signal,
    norm_tolerance: float,
    state_tolerance: Callable[[PrecisionBudget], float],
    noise: NoiseModel,
    ledger: QueryLedger,
) -> PrecisionBudget:
    """
    AbsNorm estimate of ||phi||, the budget that depends on it, then the State preparation.
    Leaves phi_hat None when the projection is negligible. Returns the budget.
    """
    restricted = restrict(dictionary, state.support)
    prep = signal_charges(signal, state.access)
    norm = column_space_projection(
        restricted, signal, state.gamma, norm_tolerance, ProjectionVariant.ABS_NORM,
        noise, ledger, state.access.value, prep,
    )
    budget = derive_budget(
        state.eps_i, state.eps_f, signal.norm, norm.value, eta=state.eta, gamma=state.gamma
    )
    state.phi_norm_est = norm.value
    state.phi_hat = None
    state.phi_charges = {}
    if _phi_negligible(norm.value, state.eps_f, noise):
        return budget
    scratch = QueryLedger()
    try:
        prepared = column_space_projection(
            restricted, signal, state.gamma, state_tolerance(budget), ProjectionVariant.STATE,
            noise, scratch, state.access.value, prep,
        )
    except ZeroProjection:
        logger.warning("phi-dropped: projection estimate is nonzero but the projection vanishes")
        return budget
    ledger.merge(scratch)
    state.phi_hat = prepared.state
    state.phi_charges = scratch.totals()
    return budget


def atom_oracle(
    j: int,
    state: QompState,
    dictionary: Dictionary,
    signal: Signal,
    noise: NoiseModel,
    ledger: QueryLedger,
) -> float:
    """
    Squared score (||s|| Re z1 - ||phi|| Re z2)^2 + (||s|| Im z1 - ||phi|| Im z2)^2 with
    z1 = <d_j|s> and z2 = <d_j|phi_hat>; monotone in |<d_j, r>|.
    """
    if j in state.support:
        raise AtomAlreadySelected(f"Atom {j} is already in the support")
    budget = state.budget
    if budget is None:
        raise InvalidParameter("The score oracle needs a derived precision budget")
    atom = dictionary.atom(j)
    s_norm = signal.norm
    re1, im1 = hadamard_inner_product(
        atom, signal.amplitudes, budget.eps_1re, state.delta_atom, noise, ledger,
        combine_charges(ATOM_CHARGES, signal_charges(signal, state.access)),
    )
    if state.phi_hat is None:
        return s_norm ** 2 * (re1 ** 2 + im1 ** 2)
    # phi_charges already holds one preparation of phi_hat and its inverse
    phi_charges = combine_charges(ATOM_CHARGES, state.phi_charges)
    re2, im2 = hadamard_inner_product(
        atom, state.phi_hat, budget.eps_2re, state.delta_atom, noise, ledger, phi_charges
    )
    phi_norm = state.phi_norm_est
    return (s_norm * re1 - phi_norm * re2) ** 2 + (s_norm * im1 - phi_norm * im2) ** 2


def prepare_selection(
    state: QompState, dictionary: Dictionary, signal: Signal, noise: NoiseModel, ledger: QueryLedger
) -> PrecisionBudget:
    """Projection estimates shared by every score query of one iteration."""
    if state.k == 0 or not len(state.support):
        state.phi_hat, state.phi_norm_est, state.phi_charges = None, 0.0, {}
        state.budget = derive_budget(
            state.eps_i, state.eps_f, signal.norm, 0.0, not state.uniform_budgets, state.eta, state.gamma
        )
        return state.budget
    first_pass = derive_budget(state.eps_i, state.eps_f, signal.norm, 0.0, eta=state.eta, gamma=state.gamma)
    state.budget = _prepare_projection(
        state, dictionary, signal, first_pass.eps_1nphi, lambda budget: budget.eps_1phi, noise, ledger
    )
    return state.budget


def select_atom(
    state: QompState, dictionary: Dictionary, signal: Signal, noise: NoiseModel, ledger: QueryLedger
) -> int:
    """
    Approximate argmax of the score oracle over the complement of the support.

    The projection estimates are charged once per selection. Scores are evaluated once in
    ascending j and maximum finding is charged per query with the cost of one oracle call.
    """
    candidates = state.support.complement()
    if not candidates:
        raise EmptyComplement("Every atom is already selected")
    prepare_selection(state, dictionary, signal, noise, ledger)

    scores: Dict[int, float] = {}
    per_query: Charges = {}
    for position, j in enumerate(candidates):
        scratch = QueryLedger()
        scores[j] = atom_oracle(j, state, dictionary, signal, noise, scratch)
        if position == 0:
            per_query = scratch.totals()
    state.last_scores = scores

    def search(delta: float) -> int:
        return find_max_approx(scores.__getitem__, candidates, delta, noise, ledger, per_query)

    if noise.amplified:
        reps = amplification_reps(state.delta_iter)
        return majority_vote(lambda: search(MAJORITY_BASE_DELTA), reps)
    return search(state.delta_iter)


def residual_norm_estimate(
    state: QompState, dictionary: Dictionary, signal: Signal, noise: NoiseModel, ledger: QueryLedger
) -> float:
    """
    ||r|| estimated as || ||s|| |s> - ||phi|| |phi> || from fresh projections of the current
    support; the first iteration (empty support) returns ||s||.
    """
    if not len(state.support):
        return signal.norm
    budget = _prepare_projection(
        state, dictionary, signal, state.eps_f / 3, lambda b: b.eps_2phi, noise, ledger
    )
    state.budget = budget
    if state.phi_hat is None:
        return signal.norm
    phi_prep = combine_charges(signal_charges(signal, state.access), state.phi_charges)
    return weighted_distance_estimate(
        signal.norm, signal.amplitudes, state.phi_norm_est, state.phi_hat,
        budget.eps_w, state.delta_iter, noise, ledger, phi_prep,
    )


def _resolve_gamma(dictionary: Dictionary, support: Support, gamma: Optional[float], default: float) -> float:
    floor = sigma_min(restrict(dictionary, support))
    if gamma is None:
        chosen = default if default > 0 else floor
    else:
        chosen = gamma
        if gamma > floor + 1e-12:
            logger.warning(f"gamma-clamped: gamma={gamma} exceeds sigma_min(D_Lambda)={floor}")
            chosen = floor
    return max(chosen, GAMMA_FLOOR)


@dataclass
class QompRun:
    result: RecoveryResult
    ledger: QueryLedger
    budgets: List[PrecisionBudget] = field(default_factory=list)
    gammas: List[float] = field(default_factory=list)
    seed: int = 0


def qomp_run(
    dictionary: Dictionary,
    signal,
    sparsity: int,
    epsilon: float,
    eps_i: float,
    eps_f: float,
    gamma: Optional[float] = None,
    noise: Optional[NoiseModel] = None,
    access: AccessMode = AccessMode.ORACULAR,
    max_iterations: Optional[int] = None,
    eta: float = 0.0,
    uniform_budgets: bool = False,
) -> QompRun:
    """
    The QOMP loop: while not (k > L or ||r||est <= epsilon), select an atom and re-estimate
    the residual. Iteration k draws from noise.derive(k, 0) for selection and
    noise.derive(k, 1) for the residual, so rerunning it with the same support reproduces it.
    uniform_budgets drops the relaxed eps_i / 8 share of the first iteration.
    """
    if sparsity < 1:
        raise InvalidParameter(f"Sparsity threshold L must be at least 1, got {sparsity}")
    if epsilon <= 0:
        raise InvalidParameter(f"Residual threshold must be positive, got {epsilon}")
    noise = noise or NoiseModel()
    s = make_signal(signal)
    full_floor = sigma_min(dictionary.entries)
    state = QompState(
        support=Support.empty(dictionary.m),
        sparsity=sparsity,
        eps_i=eps_i,
        eps_f=eps_f,
        gamma=max(gamma if gamma is not None else full_floor, GAMMA_FLOOR),
        access=AccessMode(access),
        eta=eta,
        uniform_budgets=uniform_budgets,
    )
    ledger = state.ledger
    residual = s.norm
    residual_norms: List[float] = []
    budgets: List[PrecisionBudget] = []
    gammas: List[float] = []
    exhausted = False
    while not (state.k > sparsity or residual <= epsilon):
        if max_iterations is not None and state.k >= max_iterations:
            exhausted = True
            break
        if not state.support.complement():
            exhausted = True
            break
        if len(state.support):
            state.gamma = _resolve_gamma(dictionary, state.support, gamma, full_floor)
        j = select_atom(state, dictionary, s, noise.derive(state.k, 0), ledger)
        state.support = state.support.add(j)
        state.k += 1
        state.gamma = _resolve_gamma(dictionary, state.support, gamma, full_floor)
        gammas.append(state.gamma)
        residual = residual_norm_estimate(state, dictionary, s, noise.derive(state.k - 1, 1), ledger)
        state.last_residual_estimate = residual
        residual_norms.append(float(residual))
        if state.budget is not None:
            budgets.append(state.budget)
        ledger.close_iteration(f"iteration-{state.k}")
        logger.info(f"atom-selected: iteration {state.k} picked atom {j}, residual estimate {residual:.6g}")

    if state.k > sparsity:
        state.status = RecoveryStatus.SPARSITY_EXCEEDED
    elif exhausted:
        state.status = RecoveryStatus.MAX_ITERATIONS_INTERNAL
    else:
        state.status = RecoveryStatus.CONVERGED
    logger.info(f"run-finished: status {state.status.value} after {state.k} iterations")
    result = RecoveryResult(
        support=state.support,
        coefficients=np.zeros(0, dtype=complex),
        residual_norms=residual_norms,
        iterations=state.k,
        status=state.status,
    )
    return QompRun(result, ledger, budgets, gammas, noise.seed)


def iteration_cost_model(
    k: int,
    m: int,
    s_norm: float,
    eps_i: float,
    eps_f: float,
    gamma: float,
    mode: AccessMode = AccessMode.ORACULAR,
    mu: Optional[float] = None,
    t_s: float = 1.0,
    t_d: float = 1.0,
    t_lambda: float = 1.0,
    t_lambda_bar: Optional[float] = None,
) -> float:
    """
    Predicted per-iteration cost in model units.

    t_lambda prices the selected-atom unitary and t_lambda_bar the complement search over
    unselected atoms; t_lambda_bar defaults to t_lambda.

    Oracular: sqrt(m) T_comp + ||s||^2 (sqrt(m)/eps_i + 1/eps_f)(T_s + (T_D + T_Lambda) sqrt(k)/gamma).
    QRAM: ||s||^2 mu(D_Lambda)/gamma (sqrt(m)/eps_i + 1/eps_f), mu defaulting to sqrt(k).
    """
    if min(m, s_norm, eps_i, eps_f, gamma) <= 0 or k < 0:
        raise InvalidParameter("Cost model parameters must be positive")
    precision = math.sqrt(m) / eps_i + 1 / eps_f
    if AccessMode(mode) is AccessMode.QRAM:
        normalization = math.sqrt(k) if mu is None else mu
        return s_norm ** 2 * normalization / gamma * precision
    complement = t_lambda if t_lambda_bar is None else t_lambda_bar
    return math.sqrt(m) * complement + s_norm ** 2 * precision * (
        t_s + (t_d + t_lambda) * math.sqrt(k) / gamma
    )


CLASSICAL_VARIANTS = ("naive", "chol1", "chol2", "qr1", "qr2", "mil")


def classical_iteration_cost(variant: str, n: int, m: int, k: int) -> int:
    """Per-iteration operation counts of the classical OMP implementations, constants 1."""
    costs = {
        "naive": n * m + n * k + n * k ** 2 + k ** 3,
        "chol1": n * m + n * k + k ** 2,
        "chol2": m * k + k ** 2,
        "qr1": n * m + n * k,
        "qr2": n * k + m * k + k ** 2,
        "mil": n * k + m * k,
    }
    if variant not in costs:
        raise InvalidParameter(f"Unknown classical variant {variant}; expected one of {CLASSICAL_VARIANTS}")
    return costs[variant]


def compare_iteration_costs(
    n: int,
    m: int,
    k: int,
    s_norm: float = 1.0,
    eps_i: float = 0.1,
    eps_f: float = 0.1,
    gamma: float = 1.0,
    mu: Optional[float] = None,
) -> Dict[str, float]:
    row: Dict[str, float] = {
        variant: float(classical_iteration_cost(variant, n, m, k)) for variant in CLASSICAL_VARIANTS
    }
    row["qomp_oracular"] = iteration_cost_model(k, m, s_norm, eps_i, eps_f, gamma, AccessMode.ORACULAR)
    row["qomp_qram"] = iteration_cost_model(k, m, s_norm, eps_i, eps_f, gamma, AccessMode.QRAM, mu)
    return row
