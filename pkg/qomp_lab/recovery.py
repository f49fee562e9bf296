"""
End-to-end sparse recovery on top of the QOMP loop: support recovery with its incoherence
certificate, coefficient states, sparse tomography and the estimated mutual incoherence.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from qomp_lab.classical_omp import brute_force_l0, erc_value, mi_condition
from qomp_lab.core import (
    Dictionary,
    Support,
    VectorLike,
    as_vector,
    make_signal,
    mutual_incoherence,
    pair_magnitudes,
    sigma_max,
    sigma_min,
)
from qomp_lab.errors import (
    CombinatorialBlowup,
    GuaranteeNotApplicable,
    IllConditioned,
    InvalidParameter,
    RankDeficient,
    ThresholdViolated,
)
from qomp_lab.qomp import GAMMA_FLOOR, AccessMode, QompRun, qomp_run, signal_charges
from qomp_lab.qsvt import BlockEncoding, block_encode_qram, qlss_solve
from qomp_lab.quantum_primitives import (
    Charges,
    NoiseModel,
    QueryLedger,
    amplitude_draw,
    combine_charges,
    evaluations_for,
    find_max_approx,
    hadamard_inner_product,
)

logger = logging.getLogger(__name__)

PAIR_CHARGES: Dict[str, int] = {"u_d": 2, "u_d_dag": 2}


@dataclass
class Certificates:
    mi_condition: bool
    erc_value: Optional[float] = None
    identifiable: Optional[bool] = None


@dataclass
class SupportRecovery:
    support: Support
    ledger: QueryLedger
    run: QompRun
    mu: float
    gamma: float
    certificates: Certificates


def _incoherence(dictionary: Dictionary) -> float:
    return mutual_incoherence(dictionary) if dictionary.m >= 2 else 0.0


def default_gamma(dictionary: Dictionary, sparsity: int) -> float:
    """
    sigma_min(D) when it is positive, otherwise the Gershgorin bound sqrt(1 - (K-1) mu)
    that holds for every K-column subdictionary.
    """
    floor = sigma_min(dictionary.entries)
    if floor > 0:
        return floor
    bound = 1.0 - (sparsity - 1) * _incoherence(dictionary)
    if bound <= 0:
        logger.warning(f"gamma-clamped: no positive singular value bound for K={sparsity}")
        return GAMMA_FLOOR
    return math.sqrt(bound)


def support_recovery(
    dictionary: Dictionary,
    signal: VectorLike,
    sparsity: int,
    epsilon: float,
    eta: float,
    gamma: Optional[float] = None,
    noise: Optional[NoiseModel] = None,
    access: AccessMode = AccessMode.ORACULAR,
    strict: bool = False,
) -> SupportRecovery:
    """
    QOMP with eps_i = eta gamma epsilon / sqrt(K) and eps_f = epsilon/2, stopping after K
    iterations or once the residual estimate is at most epsilon/2. Every iteration runs at
    the generic budget, so each one is charged the same sqrt(K) sqrt(m) / (gamma eta epsilon)
    order of U_s queries and the totals grow like K^(3/2) up to logarithmic factors.
    """
    if not 0 < eta < 1:
        raise InvalidParameter(f"Support recovery needs eta in (0, 1), got {eta}")
    if sparsity < 1:
        raise InvalidParameter(f"Sparsity bound K must be at least 1, got {sparsity}")
    mu = _incoherence(dictionary)
    holds = mi_condition(mu, sparsity, eta)
    if not holds:
        message = f"incoherence condition fails for mu={mu:.4g}, K={sparsity}, eta={eta}"
        if strict:
            raise GuaranteeNotApplicable(message)
        logger.warning(f"guarantee-not-applicable: {message}")
    gamma = gamma if gamma is not None else default_gamma(dictionary, sparsity)
    eps_i = eta * gamma * epsilon / math.sqrt(sparsity)
    run = qomp_run(
        dictionary,
        signal,
        sparsity,
        epsilon / 2,
        eps_i,
        epsilon / 2,
        gamma=gamma,
        noise=noise,
        access=access,
        max_iterations=sparsity,
        eta=eta,
        uniform_budgets=True,
    )
    return SupportRecovery(run.result.support, run.ledger, run, mu, gamma, Certificates(holds))


def check_identifiability(
    dictionary: Dictionary, signal: VectorLike, optimal: Support, epsilon: float
) -> bool:
    """True when no support smaller than the optimal one fits |s> to within epsilon."""
    unit = make_signal(signal).state
    if not len(optimal):
        return True
    return brute_force_l0(dictionary, unit, epsilon, len(optimal) - 1) is None


def _scatter(values: np.ndarray, support: Support, m: int) -> np.ndarray:
    full = np.zeros(m, dtype=complex)
    full[list(support.indices)] = values
    return full


def coefficients_encoding(compact: np.ndarray, access: AccessMode = AccessMode.ORACULAR) -> BlockEncoding:
    """(sqrt(K), ceil(log2(n+K)), 0) encoding of the compact subdictionary."""
    n, k = compact.shape
    if AccessMode(access) is AccessMode.QRAM:
        return block_encode_qram(compact)
    return BlockEncoding(compact, math.sqrt(k), max(0, math.ceil(math.log2(n + k))), 0.0)


def coefficients_state(
    dictionary: Dictionary,
    support: Support,
    signal: VectorLike,
    epsilon: float,
    ledger: QueryLedger,
    gamma: Optional[float] = None,
    noise: Optional[NoiseModel] = None,
    access: AccessMode = AccessMode.ORACULAR,
) -> np.ndarray:
    """Unit m-vector within epsilon of D_Lambda^+ |s> / ||D_Lambda^+ |s>||, zero off the support."""
    if not len(support):
        raise IllConditioned("The empty subdictionary has no coefficient state")
    compact = dictionary.columns(support.indices)
    floor = sigma_min(compact)
    if floor <= 1e-12:
        raise IllConditioned("The selected atoms are linearly dependent")
    gamma = floor if gamma is None else gamma
    s = make_signal(signal)
    solution = qlss_solve(
        coefficients_encoding(compact, access),
        s.state,
        gamma,
        epsilon,
        noise or NoiseModel(),
        ledger,
        signal_charges(s, AccessMode(access)),
    )
    return _scatter(solution, support, dictionary.m)


def tomography_sample_count(k: int, epsilon: float, delta: float) -> int:
    return math.ceil(4 * k / epsilon ** 2 * max(1.0, math.log(k / delta)))


def tomography_sparsity_cap(k: int, delta: float) -> int:
    return math.ceil(4 * k * max(1.0, math.log(k)) * max(1.0, math.log(1 / delta)))


def tomography_charge(k: int, epsilon: float, delta: float) -> int:
    return math.ceil(k / epsilon * max(1.0, math.log2(1 / delta)))


def orthogonal_sparse_tomography(
    state_oracle: VectorLike,
    k: int,
    epsilon: float,
    delta: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    per_call: Optional[Charges] = None,
    check_threshold: bool = False,
) -> np.ndarray:
    """
    Sparse estimate of the amplitudes of the state the oracle prepares, within epsilon in
    norm. Computational-basis sampling finds the heavy indices; each kept amplitude is
    read off Hadamard tests against the basis state at epsilon / (2 sqrt(k')) per part.
    The ledger receives the sampling charge plus the charge of every Hadamard test.
    """
    if k < 1:
        raise InvalidParameter(f"Tomography sparsity must be at least 1, got {k}")
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise InvalidParameter("Tomography needs epsilon and delta in (0, 1)")
    amplitudes = as_vector(state_oracle)
    size = amplitudes.size
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    if check_threshold:
        heavy = int(np.sum(np.abs(amplitudes) >= epsilon * math.sqrt(k / size)))
        if heavy > k:
            raise ThresholdViolated(f"{heavy} amplitudes exceed the heavy threshold for k={k}")
    cap = tomography_sparsity_cap(k, delta)
    probabilities = np.abs(amplitudes) ** 2
    if noise.exact:
        counts = probabilities
    else:
        probabilities = probabilities / probabilities.sum()
        counts = noise.rng.multinomial(tomography_sample_count(k, epsilon, delta), probabilities)
    observed = np.flatnonzero(counts > 0)
    # heaviest first, ties by index
    order = sorted(observed, key=lambda j: (-counts[j], j))[:cap]
    kept = sorted(int(j) for j in order)

    state_calls = per_call or {"u_s": 1, "u_s_dag": 1}
    ledger.charge(tomography_charge(k, epsilon, delta), state_calls)
    estimate = np.zeros(size, dtype=complex)
    if not kept:
        return estimate
    tolerance = epsilon / (2 * math.sqrt(len(kept)))
    for j in kept:
        basis = np.zeros(size, dtype=complex)
        basis[j] = 1.0
        re, im = hadamard_inner_product(
            basis, amplitudes, tolerance, delta / (2 * len(kept)), noise, ledger, state_calls
        )
        estimate[j] = complex(re, im)
    return estimate


@dataclass
class TomographyReport:
    support: Support
    coefficients: np.ndarray
    reconstruction_error: float
    ledger: QueryLedger
    certificates: Certificates
    budgets: Dict[str, float] = field(default_factory=dict)
    epsilon: float = 0.0

    @property
    def success(self) -> bool:
        return self.reconstruction_error <= self.epsilon


def tomography_budgets(epsilon: float, kappa: float, k: int, m: int) -> Dict[str, float]:
    """eps_0 = eps/4, eps_t = eps/(6 kappa), eps_1 just below min(eps_t sqrt(K/m), eps_t/2)."""
    eps_t = epsilon / (6 * kappa)
    return {
        "eps_0": epsilon / 4,
        "eps_t": eps_t,
        "eps_1": 0.99 * min(eps_t * math.sqrt(k / m), eps_t / 2),
        "kappa": kappa,
    }


def reconstruction_error(dictionary: Dictionary, coefficients: np.ndarray, signal: VectorLike) -> float:
    """|| |s> - D y / ||D y|| ||, or 2 when D y vanishes."""
    unit = make_signal(signal).state
    image = dictionary.entries @ coefficients
    norm = np.linalg.norm(image)
    if norm < 1e-15:
        return 2.0
    return float(np.linalg.norm(unit - image / norm))


def build_certificates(
    dictionary: Dictionary, support: Support, signal: VectorLike, epsilon: float, eta: float = 0.0
) -> Certificates:
    try:
        erc: Optional[float] = erc_value(dictionary, support)
    except RankDeficient:
        erc = None
    try:
        identifiable: Optional[bool] = check_identifiability(dictionary, signal, support, epsilon)
    except CombinatorialBlowup:
        identifiable = None
    return Certificates(mi_condition(_incoherence(dictionary), len(support), eta), erc, identifiable)


def sparse_coefficient_tomography(
    dictionary: Dictionary,
    support: Support,
    signal: VectorLike,
    epsilon: float,
    delta: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    gamma: Optional[float] = None,
    access: AccessMode = AccessMode.ORACULAR,
    eta: float = 0.0,
) -> TomographyReport:
    """
    Coefficient state at eps_1 followed by sparse tomography at eps_t; the reconstruction
    error is at most 2 eps_0 + 3 kappa eps_t <= epsilon when the support was recovered to
    residual epsilon/4.
    """
    if not len(support):
        raise IllConditioned("Tomography needs a nonempty support")
    k = len(support)
    compact = dictionary.columns(support.indices)
    floor = sigma_min(compact)
    if floor <= 1e-12:
        raise IllConditioned("The selected atoms are linearly dependent")
    gamma = floor if gamma is None else gamma
    if gamma > floor + 1e-9:
        raise IllConditioned(f"gamma={gamma} exceeds sigma_min(D_Lambda)={floor}")
    kappa = sigma_max(compact) / floor
    if kappa > math.sqrt(k) / gamma + 1e-9:
        raise InvalidParameter(f"Condition number {kappa} exceeds sqrt(K)/gamma")
    budgets = tomography_budgets(epsilon, kappa, k, dictionary.m)
    state = coefficients_state(
        dictionary, support, signal, budgets["eps_1"], ledger, gamma, noise, access
    )
    coefficients = orthogonal_sparse_tomography(state, k, budgets["eps_t"], delta, noise, ledger)
    error = reconstruction_error(dictionary, coefficients, signal)
    certificates = build_certificates(dictionary, support, signal, epsilon, eta)
    return TomographyReport(support, coefficients, error, ledger, certificates, budgets, epsilon)


def classical_incoherence_cost(n: int, m: int) -> int:
    return m * (m - 1) // 2 * n


def incoherence_tolerance(epsilon: float) -> float:
    """Oracle error plus the 2 epsilon maximum-finding slack."""
    return 3 * epsilon


def estimate_mutual_incoherence_q(
    dictionary: Dictionary,
    epsilon: float,
    delta: float,
    noise: NoiseModel,
    ledger: QueryLedger,
) -> float:
    """
    Maximum finding over the m(m-1) ordered atom pairs with an amplitude-estimated
    |<d_i, d_j>| oracle; within 3 epsilon of the mutual incoherence w.p. >= 1 - delta.

    Each oracle query is one amplitude estimation at t = evaluations_for(epsilon) costing
    PAIR_CHARGES per evaluation, so the ledger receives exactly the maximum-finding queries
    times that per-query charge.
    """
    rows, cols, magnitudes = pair_magnitudes(dictionary)
    m = dictionary.m
    evaluations = evaluations_for(epsilon)
    estimates: Dict[Tuple[int, int], float] = {
        (int(i), int(j)): amplitude_draw(value, evaluations, noise).value
        for i, j, value in zip(rows, cols, magnitudes)
    }
    pairs = [(i, j) for i in range(m) for j in range(m) if i != j]
    per_query = incoherence_query_charges(epsilon)

    def oracle(pair: Tuple[int, int]) -> float:
        return estimates[(min(pair), max(pair))]

    best = find_max_approx(oracle, pairs, delta, noise, ledger, per_query)
    return float(oracle(best))


def incoherence_query_charges(epsilon: float) -> Dict[str, int]:
    return combine_charges(PAIR_CHARGES, scale=evaluations_for(epsilon))
