"""
Statistical simulators of the quantum subroutines.

Every primitive computes the exact quantity it estimates, perturbs it according to a
NoiseModel, and charges a QueryLedger with the oracle calls the quantum routine would make.
Cost constants are all 1 ("model units"): scaling laws are meaningful, absolute counts are not.
"""
import enum
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np

from qomp_lab.core import VectorLike, as_vector
from qomp_lab.errors import DimensionMismatch, EmptySet, InvalidParameter

logger = logging.getLogger(__name__)

SUCCESS_PROBABILITY = 8 / math.pi ** 2
# Failed runs land within FAILURE_SPREAD tolerances of the truth.
FAILURE_SPREAD = 3.0

COUNTERS = ("u_s", "u_s_dag", "u_d", "u_d_dag", "aux_gates")

T = TypeVar("T", bound=Hashable)


class NoiseMode(str, enum.Enum):
    EXACT = "exact"
    ADVERSARIAL = "adversarial"
    STOCHASTIC = "stochastic"


class FailureHandling(str, enum.Enum):
    PROPAGATE = "propagate"
    AMPLIFIED = "amplified"


@dataclass
class NoiseModel:
    mode: NoiseMode = NoiseMode.EXACT
    seed: int = 0
    failure_handling: FailureHandling = FailureHandling.AMPLIFIED
    stream: Tuple[int, ...] = ()
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.mode = NoiseMode(self.mode)
        self.failure_handling = FailureHandling(self.failure_handling)
        self.rng = np.random.default_rng([self.seed, *self.stream])

    @property
    def exact(self) -> bool:
        return self.mode is NoiseMode.EXACT

    @property
    def amplified(self) -> bool:
        return self.failure_handling is FailureHandling.AMPLIFIED

    def derive(self, *keys: int) -> "NoiseModel":
        """Independent stream keyed by (seed, stream, keys); the parent's draws do not affect it."""
        return NoiseModel(self.mode, self.seed, self.failure_handling, self.stream + tuple(keys))


Charges = Mapping[str, int]


def combine_charges(*parts: Charges, scale: int = 1) -> Dict[str, int]:
    total: Dict[str, int] = {}
    for part in parts:
        for key, value in part.items():
            total[key] = total.get(key, 0) + scale * int(value)
    return total


@dataclass
class LedgerSnapshot:
    label: str
    counts: Dict[str, int]


@dataclass
class QueryLedger:
    u_s: int = 0
    u_s_dag: int = 0
    u_d: int = 0
    u_d_dag: int = 0
    aux_gates: int = 0
    per_iteration: List[LedgerSnapshot] = field(default_factory=list)

    def charge(self, calls: int, per_call: Charges) -> int:
        """Charge `calls` uses of a routine costing `per_call`; returns the calls charged."""
        if calls < 0:
            raise InvalidParameter(f"Cannot charge a negative number of calls: {calls}")
        for key, value in per_call.items():
            if key not in COUNTERS:
                raise InvalidParameter(f"Unknown ledger counter {key}")
            setattr(self, key, getattr(self, key) + calls * int(value))
        return calls

    def totals(self) -> Dict[str, int]:
        return {key: getattr(self, key) for key in COUNTERS}

    def _recorded(self) -> Dict[str, int]:
        return combine_charges(*(snapshot.counts for snapshot in self.per_iteration))

    def close_iteration(self, label: str) -> LedgerSnapshot:
        """Record everything charged since the previous snapshot."""
        recorded = self._recorded()
        counts = {key: getattr(self, key) - recorded.get(key, 0) for key in COUNTERS}
        snapshot = LedgerSnapshot(label, counts)
        self.per_iteration.append(snapshot)
        return snapshot

    def merge(self, other: "QueryLedger") -> None:
        self.charge(1, other.totals())


@dataclass
class EstimateOutcome:
    value: float
    tolerance: float
    success: bool
    queries_charged: int
    terminated: bool = True


def amplification_reps(delta: float) -> int:
    """Odd repetition count 2*ceil(log2(1/delta)) + 1 for median or majority amplification."""
    if delta <= 0:
        raise InvalidParameter(f"Failure probability must be positive, got {delta}")
    if delta >= 1:
        return 1
    return 2 * math.ceil(math.log2(1 / delta)) + 1


def evaluations_for(tolerance: float) -> int:
    """Smallest t with pi/t <= tolerance."""
    if tolerance <= 0:
        raise InvalidParameter(f"Tolerance must be positive, got {tolerance}")
    return max(1, math.ceil(math.pi / tolerance))


def _perturb(
    truth: float, tolerance: float, noise: NoiseModel, low: float, high: float
) -> Tuple[float, bool]:
    if noise.mode is NoiseMode.EXACT:
        return truth, True
    rng = noise.rng
    if noise.mode is NoiseMode.ADVERSARIAL:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return float(np.clip(truth + sign * tolerance, low, high)), True
    if rng.random() < SUCCESS_PROBABILITY:
        value = rng.uniform(truth - tolerance, truth + tolerance)
    else:
        spread = FAILURE_SPREAD * tolerance
        value = rng.uniform(truth - spread, truth + spread)
    value = float(np.clip(value, low, high))
    return value, abs(value - truth) <= tolerance


def amp_est(
    amplitude: float,
    evaluations: int,
    noise: NoiseModel,
    ledger: QueryLedger,
    per_call: Optional[Charges] = None,
) -> EstimateOutcome:
    """Amplitude estimation with t evaluations: |estimate - a| <= pi/t w.p. >= 8/pi^2."""
    outcome = amplitude_draw(amplitude, evaluations, noise)
    ledger.charge(evaluations, per_call or {"aux_gates": 1})
    return outcome


def amplitude_draw(amplitude: float, evaluations: int, noise: NoiseModel) -> EstimateOutcome:
    """
    The outcome amp_est would return, with nothing charged. For oracles queried inside
    maximum finding, which charges its queries in bulk.
    """
    if evaluations < 1:
        raise InvalidParameter(f"Amplitude estimation needs t >= 1, got {evaluations}")
    truth = float(np.clip(amplitude, 0.0, 1.0))
    tolerance = math.pi / evaluations
    value, success = _perturb(truth, tolerance, noise, 0.0, 1.0)
    return EstimateOutcome(value, tolerance, success, evaluations)


def sin_error_check(theta: float, theta_bar: float) -> bool:
    return abs(math.sin(theta) - math.sin(theta_bar)) <= abs(theta - theta_bar) + 1e-15


def fixed_point_amplify_cost(delta_lb: float, epsilon: float) -> int:
    """Base-unitary calls of fixed-point amplification: ceil(log(1/eps)/delta)."""
    if not 0 < delta_lb <= 1:
        raise InvalidParameter(f"Success lower bound must be in (0, 1], got {delta_lb}")
    if not 0 < epsilon < 1:
        raise InvalidParameter(f"Target error must be in (0, 1), got {epsilon}")
    return max(1, math.ceil(math.log(1 / epsilon) / delta_lb))


def powering_median(run: Callable[[], float], reps: int) -> float:
    if reps < 1 or reps % 2 == 0:
        raise InvalidParameter(f"Median amplification needs an odd positive count, got {reps}")
    return float(np.median([run() for _ in range(reps)]))


def majority_vote(run: Callable[[], T], reps: int) -> T:
    if reps < 1:
        raise InvalidParameter(f"Majority vote needs at least one run, got {reps}")
    counts = Counter(run() for _ in range(reps))
    best = max(counts.values())
    return min(value for value, count in counts.items() if count == best)


def _median_reps(delta: float, noise: NoiseModel) -> int:
    return amplification_reps(delta) if noise.amplified else 1


def hadamard_inner_product(
    v: VectorLike,
    c: VectorLike,
    epsilon: float,
    delta: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    per_call: Optional[Charges] = None,
) -> Tuple[float, float]:
    """
    Real and imaginary parts of <v|c> for the normalized inputs, each within epsilon.

    The ancilla reads |1> with probability (1 - Re<v|c>)/2, and with the extra phase gate
    (1 - Im<v|c>)/2; both probabilities go through amplitude estimation at epsilon/2.
    """
    left, right = as_vector(v), as_vector(c)
    if left.shape != right.shape:
        raise DimensionMismatch(f"Cannot compare states of shapes {left.shape} and {right.shape}")
    left_norm, right_norm = np.linalg.norm(left), np.linalg.norm(right)
    inner = (
        complex(np.vdot(left, right)) / (left_norm * right_norm)
        if left_norm > 0 and right_norm > 0
        else 0j
    )
    evaluations = evaluations_for(epsilon / 2)
    reps = _median_reps(delta, noise)
    charges = per_call or {"aux_gates": 1}

    def estimate(part: float) -> float:
        probability = (1.0 - part) / 2.0
        outcome = amp_est(probability, evaluations, noise, ledger, charges)
        return 1.0 - 2.0 * outcome.value

    re_estimate = powering_median(lambda: estimate(inner.real), reps)
    im_estimate = powering_median(lambda: estimate(inner.imag), reps)
    if noise.exact:
        return inner.real, inner.imag
    return re_estimate, im_estimate


def find_max_approx(
    u_oracle: Callable[[T], float],
    candidates: Sequence[T],
    delta: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    per_query: Optional[Charges] = None,
) -> T:
    """
    Approximate maximum finding over an oracle accurate to epsilon.

    The result satisfies u_j >= max(u_k - 2 epsilon) because it is the argmax of
    estimates that are each within epsilon of the truth; the stochastic failure event
    (probability delta) returns a uniformly random candidate. Charges
    ceil(sqrt(|S|) log(|S|/delta)) oracle queries.
    """
    if not candidates:
        raise EmptySet("Maximum finding over an empty set")
    if not 0 < delta <= 1:
        raise InvalidParameter(f"Failure probability must be in (0, 1], got {delta}")
    size = len(candidates)
    queries = max(1, math.ceil(math.sqrt(size) * math.log(size / delta)))
    ledger.charge(queries, per_query or {"aux_gates": 1})
    if noise.mode is NoiseMode.STOCHASTIC and noise.rng.random() < delta:
        return candidates[int(noise.rng.integers(size))]
    values = np.array([u_oracle(candidate) for candidate in candidates], dtype=float)
    return candidates[int(np.argmax(values))]


def _unit_term(vector: np.ndarray, weight: float) -> Tuple[np.ndarray, float]:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0 or weight == 0.0:
        return np.zeros_like(vector), 0.0
    return vector / norm, weight


def weighted_distance_estimate(
    alpha: float,
    v: VectorLike,
    beta: float,
    c: VectorLike,
    epsilon: float,
    delta: float,
    noise: NoiseModel,
    ledger: QueryLedger,
    per_call: Optional[Charges] = None,
) -> float:
    """
    Estimate ||alpha|v> - beta|c>|| to additive epsilon.

    The circuit exposes the distance divided by 2*alpha*beta as an amplitude; when that
    would exceed one the normalization is raised to alpha + beta. A zero weight or a zero
    vector drops its term; with both terms gone the distance is 0 and nothing is charged.
    """
    if alpha < 0 or beta < 0:
        raise InvalidParameter(f"Weights must be nonnegative, got alpha={alpha}, beta={beta}")
    left, right = as_vector(v), as_vector(c)
    if left.shape != right.shape:
        raise DimensionMismatch(f"Cannot compare states of shapes {left.shape} and {right.shape}")
    left, alpha = _unit_term(left, alpha)
    right, beta = _unit_term(right, beta)
    if alpha == 0.0 and beta == 0.0:
        return 0.0
    truth = float(np.linalg.norm(alpha * left - beta * right))
    normalization = max(2 * alpha * beta, alpha + beta)
    evaluations = evaluations_for(epsilon / normalization)
    reps = _median_reps(delta, noise)

    def estimate() -> float:
        outcome = amp_est(truth / normalization, evaluations, noise, ledger, per_call)
        return outcome.value * normalization

    value = powering_median(estimate, reps)
    return truth if noise.exact else value


def perturb_state(target: np.ndarray, epsilon: float, noise: NoiseModel) -> np.ndarray:
    """
    Unit vector within epsilon of the unit target. Adversarial sits on the boundary,
    stochastic draws the distance uniformly; the error direction is orthogonal to the target.
    """
    if noise.exact or epsilon <= 0:
        return target
    rng = noise.rng
    distance = epsilon if noise.mode is NoiseMode.ADVERSARIAL else epsilon * rng.random()
    distance = min(distance, 2.0)
    angle = 2.0 * math.asin(distance / 2.0)
    direction = rng.standard_normal(target.shape) + 1j * rng.standard_normal(target.shape)
    direction = direction - np.vdot(target, direction) * target
    direction_norm = np.linalg.norm(direction)
    if direction_norm < 1e-12:
        return target * np.exp(1j * angle)
    direction = direction / direction_norm
    return math.cos(angle) * target + math.sin(angle) * direction
