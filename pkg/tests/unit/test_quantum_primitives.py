import math

import numpy as np
import pytest

from qomp_lab.errors import DimensionMismatch, EmptySet, InvalidParameter
from qomp_lab.quantum_primitives import (
    FailureHandling,
    NoiseMode,
    NoiseModel,
    QueryLedger,
    amp_est,
    amplification_reps,
    combine_charges,
    evaluations_for,
    find_max_approx,
    fixed_point_amplify_cost,
    hadamard_inner_product,
    majority_vote,
    perturb_state,
    powering_median,
    sin_error_check,
    weighted_distance_estimate,
)

pytestmark = pytest.mark.unit


@pytest.fixture
def ledger():
    return QueryLedger()


# ---------------------- Noise Model Tests ----------------------
def test_derived_streams_are_reproducible():
    """Should give identical draws for the same derivation keys."""
    noise = NoiseModel(NoiseMode.STOCHASTIC, seed=5)
    assert noise.derive(1, 2).rng.random() == noise.derive(1, 2).rng.random()


def test_derived_streams_ignore_parent_draws():
    """Should not let draws on the parent shift a derived stream."""
    # Arrange
    noise = NoiseModel(NoiseMode.STOCHASTIC, seed=5)
    expected = noise.derive(3).rng.random()
    # Act
    noise.rng.random()
    # Assert
    assert noise.derive(3).rng.random() == expected


def test_noise_model_accepts_strings():
    """Should coerce string modes to the enums."""
    noise = NoiseModel("adversarial", 1, "propagate")
    assert noise.mode is NoiseMode.ADVERSARIAL
    assert noise.failure_handling is FailureHandling.PROPAGATE
    assert not noise.amplified


# ---------------------- Ledger Tests ----------------------
def test_ledger_charges_and_snapshots(ledger):
    """Should record per-iteration differences that add up to the totals."""
    # Arrange
    ledger.charge(3, {"u_s": 1, "u_d": 2})
    ledger.close_iteration("iteration-1")
    ledger.charge(2, {"u_s_dag": 1})
    # Act
    second = ledger.close_iteration("iteration-2")
    # Assert
    assert second.counts["u_s_dag"] == 2
    assert second.counts["u_d"] == 0
    assert ledger.totals() == combine_charges(*(s.counts for s in ledger.per_iteration))


def test_ledger_rejects_unknown_counter(ledger):
    """Should refuse charges against a counter it does not track."""
    with pytest.raises(InvalidParameter):
        ledger.charge(1, {"u_x": 1})


def test_ledger_merge(ledger):
    """Should add another ledger's totals."""
    other = QueryLedger()
    other.charge(4, {"aux_gates": 1})
    ledger.merge(other)
    assert ledger.aux_gates == 4


# ---------------------- Amplitude Estimation Tests ----------------------
def test_amp_est_exact_zero(ledger):
    """Should return 0 exactly for a zero amplitude in exact mode."""
    outcome = amp_est(0.0, 17, NoiseModel(), ledger)
    assert outcome.value == 0.0
    assert ledger.aux_gates == 17


def test_amp_est_adversarial_clipped(ledger):
    """Should clip adversarial estimates to [0, 1] while staying within pi/t."""
    for seed in range(20):
        outcome = amp_est(1.0, 10, NoiseModel(NoiseMode.ADVERSARIAL, seed), ledger)
        assert 0.0 <= outcome.value <= 1.0
        assert abs(outcome.value - 1.0) <= math.pi / 10 + 1e-12


def test_amp_est_success_rate():
    """Should succeed with probability at least 8/pi^2 in stochastic mode."""
    # Arrange
    noise = NoiseModel(NoiseMode.STOCHASTIC, seed=99)
    ledger = QueryLedger()
    # Act
    outcomes = [amp_est(0.5, 100, noise, ledger) for _ in range(10_000)]
    # Assert
    assert outcomes[0].tolerance == pytest.approx(0.0314159, abs=1e-6)
    rate = np.mean([abs(o.value - 0.5) <= o.tolerance for o in outcomes])
    assert rate >= 0.81


def test_amp_est_rejects_zero_evaluations(ledger):
    """Should require at least one evaluation."""
    with pytest.raises(InvalidParameter):
        amp_est(0.3, 0, NoiseModel(), ledger)


def test_evaluations_for_tolerance():
    """Should give the smallest t with pi/t at most the tolerance."""
    t = evaluations_for(0.01)
    assert math.pi / t <= 0.01 < math.pi / (t - 1)


# ---------------------- Cost Formula Tests ----------------------
def test_sin_error_check_random_pairs():
    """Should never find |sin a - sin b| above |a - b|."""
    rng = np.random.default_rng(0)
    pairs = rng.uniform(-10, 10, size=(100_000, 2))
    assert all(sin_error_check(a, b) for a, b in pairs)
    assert sin_error_check(math.pi / 2, math.pi / 2 + 0.01)


@pytest.mark.parametrize(
    "delta_lb, epsilon, expected",
    [
        pytest.param(0.5, 0.5, 2, id="Half success half error"),
        pytest.param(1.0, 0.01, math.ceil(math.log(100)), id="Certain success"),
    ],
)
def test_fixed_point_amplify_cost(delta_lb, epsilon, expected):
    """Should charge ceil(log(1/eps)/delta) base calls."""
    assert fixed_point_amplify_cost(delta_lb, epsilon) == expected


@pytest.mark.parametrize(
    "delta, expected",
    [
        pytest.param(0.5, 3, id="One halving"),
        pytest.param(0.01, 15, id="Seven halvings"),
        pytest.param(1.0, 1, id="No amplification"),
    ],
)
def test_amplification_reps(delta, expected):
    """Should use 2 ceil(log2(1/delta)) + 1 repetitions."""
    assert amplification_reps(delta) == expected


# ---------------------- Amplification Tests ----------------------
def test_powering_median_single_and_constant_runs():
    """Should return the run itself for one repetition and the common value for identical runs."""
    values = iter([4.0])
    assert powering_median(lambda: next(values), 1) == 4.0
    assert powering_median(lambda: 2.5, 7) == 2.5


def test_powering_median_rejects_even_count():
    """Should refuse an even repetition count."""
    with pytest.raises(InvalidParameter):
        powering_median(lambda: 1.0, 4)


def test_powering_median_decays_failures():
    """Should drive the failure rate of stochastic estimates below one percent with 15 runs."""
    # Arrange
    noise = NoiseModel(NoiseMode.STOCHASTIC, seed=3)
    ledger = QueryLedger()
    tolerance = math.pi / 50
    # Act
    failures = 0
    for _ in range(2_000):
        estimate = powering_median(lambda: amp_est(0.4, 50, noise, ledger).value, 15)
        failures += abs(estimate - 0.4) > tolerance
    # Assert
    assert failures / 2_000 < 0.01


def test_majority_vote_ties_pick_smallest():
    """Should return the smallest of the most frequent values."""
    values = iter([3, 1, 3, 1, 2])
    assert majority_vote(lambda: next(values), 5) == 1


def test_majority_vote_decays_failures():
    """Should recover the right answer far more often than a single noisy run."""
    rng = np.random.default_rng(4)

    def noisy_run() -> int:
        return 7 if rng.random() < 0.7 else int(rng.integers(6))

    wins = sum(majority_vote(noisy_run, 15) == 7 for _ in range(1_000))
    assert wins / 1_000 > 0.95


# ---------------------- Hadamard Test Tests ----------------------
@pytest.mark.parametrize(
    "v, c, expected",
    [
        pytest.param([1.0, 0.0], [1.0, 0.0], (1.0, 0.0), id="Identical states"),
        pytest.param([1.0, 0.0], [0.0, 1.0], (0.0, 0.0), id="Orthogonal states"),
        pytest.param([1.0, 1.0], [1j, 1j], (0.0, 1.0), id="Phase i"),
    ],
)
def test_hadamard_inner_product_adversarial(ledger, v, c, expected):
    """Should estimate both parts of the normalized inner product within epsilon."""
    # Arrange
    noise = NoiseModel(NoiseMode.ADVERSARIAL, seed=1)
    # Act
    re, im = hadamard_inner_product(v, c, 0.05, 0.1, noise, ledger)
    # Assert
    assert re == pytest.approx(expected[0], abs=0.05)
    assert im == pytest.approx(expected[1], abs=0.05)


def test_hadamard_inner_product_charges_median_runs(ledger):
    """Should charge t evaluations for every median run of both parts."""
    hadamard_inner_product([1.0, 0.0], [0.6, 0.8], 0.1, 0.25, NoiseModel(), ledger)
    assert ledger.aux_gates == 2 * amplification_reps(0.25) * evaluations_for(0.05)


def test_hadamard_inner_product_stochastic_success_rate():
    """Should land both parts within epsilon in at least a 1 - delta fraction of stochastic runs."""
    # Arrange
    epsilon, delta, trials = 0.1, 0.2, 2000
    rng = np.random.default_rng(31)
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    c = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    inner = np.vdot(v, c) / (np.linalg.norm(v) * np.linalg.norm(c))
    noise = NoiseModel(NoiseMode.STOCHASTIC, seed=17)
    successes = 0
    # Act
    for trial in range(trials):
        re, im = hadamard_inner_product(v, c, epsilon, delta, noise.derive(trial), QueryLedger())
        successes += abs(re - inner.real) <= epsilon and abs(im - inner.imag) <= epsilon
    # Assert
    assert successes / trials >= 1 - delta - 3 * math.sqrt(delta * (1 - delta) / trials)


def test_hadamard_inner_product_shape_mismatch(ledger):
    """Should reject states of different dimensions."""
    with pytest.raises(DimensionMismatch):
        hadamard_inner_product([1.0, 0.0], [1.0, 0.0, 0.0], 0.1, 0.1, NoiseModel(), ledger)


# ---------------------- Maximum Finding Tests ----------------------
def test_find_max_separated_maximum(ledger):
    """Should return the true argmax when it is separated from the rest."""
    values = {0: 0.1, 1: 0.9, 2: 0.3}
    assert find_max_approx(values.__getitem__, [0, 1, 2], 0.1, NoiseModel(), ledger) == 1
    assert ledger.aux_gates == math.ceil(math.sqrt(3) * math.log(30))


def test_find_max_empty(ledger):
    """Should raise EmptySet on an empty candidate list."""
    with pytest.raises(EmptySet):
        find_max_approx(lambda j: 0.0, [], 0.1, NoiseModel(), ledger)


def test_find_max_stochastic_guarantee(ledger):
    """Should violate the 2 epsilon guarantee in at most a delta fraction of runs."""
    # Arrange
    rng = np.random.default_rng(12)
    truth = rng.uniform(0, 1, size=64)
    ordered = np.sort(truth)
    epsilon = (ordered[-1] - ordered[-2]) / 4
    noise = NoiseModel(NoiseMode.STOCHASTIC, seed=8)
    delta = 0.1
    trials = 1_000
    # Act
    violations = 0
    for _ in range(trials):
        noisy = truth + rng.uniform(-epsilon, epsilon, size=64)
        chosen = find_max_approx(lambda j: noisy[j], list(range(64)), delta, noise, ledger)
        violations += truth[chosen] < truth.max() - 2 * epsilon
    # Assert
    assert violations / trials <= delta + 3 * math.sqrt(delta * (1 - delta) / trials)


# ---------------------- Distance Estimate Tests ----------------------
@pytest.mark.parametrize(
    "alpha, v, beta, c, expected",
    [
        pytest.param(1.0, [1.0, 0.0], 1.0, [1.0, 0.0], 0.0, id="Identical states"),
        pytest.param(1.0, [1.0, 0.0], 1.0, [0.0, 1.0], math.sqrt(2), id="Orthogonal states"),
    ],
)
def test_weighted_distance_simple(ledger, alpha, v, beta, c, expected):
    """Should estimate the weighted distance within epsilon."""
    noise = NoiseModel(NoiseMode.ADVERSARIAL, seed=2)
    value = weighted_distance_estimate(alpha, v, beta, c, 0.05, 0.1, noise, ledger)
    assert value == pytest.approx(expected, abs=0.05)


def test_weighted_distance_random_vectors(ledger):
    """Should match the dense difference norm for unequal weights."""
    # Arrange
    rng = np.random.default_rng(21)
    v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    expected = np.linalg.norm(2 * v / np.linalg.norm(v) - 3 * c / np.linalg.norm(c))
    # Act
    noise = NoiseModel(NoiseMode.ADVERSARIAL, 6)
    value = weighted_distance_estimate(2.0, v, 3.0, c, 0.05, 0.1, noise, ledger)
    # Assert
    assert value == pytest.approx(expected, abs=0.05)


@pytest.mark.parametrize(
    "alpha, v, beta, c, expected",
    [
        pytest.param(1.0, [0.0, 0.0], 1.0, [0.0, 0.0], 0.0, id="Both vectors zero"),
        pytest.param(0.0, [1.0, 0.0], 0.0, [0.0, 1.0], 0.0, id="Both weights zero"),
        pytest.param(2.0, [0.0, 0.0], 0.7, [0.0, 1.0], 0.7, id="Left vector zero"),
        pytest.param(0.0, [1.0, 0.0], 1.5, [0.6, 0.8], 1.5, id="Left weight zero"),
    ],
)
def test_weighted_distance_vanishing_terms(ledger, alpha, v, beta, c, expected):
    """Should drop a zero term, and return 0 uncharged when both terms vanish."""
    # Arrange
    noise = NoiseModel(NoiseMode.EXACT, seed=3)
    # Act
    value = weighted_distance_estimate(alpha, v, beta, c, 0.05, 0.1, noise, ledger)
    # Assert
    assert math.isfinite(value)
    assert value == pytest.approx(expected, abs=1e-12)
    if expected == 0.0:
        assert not any(ledger.totals().values())


def test_weighted_distance_rejects_negative_weight(ledger):
    """Should reject a negative weight."""
    with pytest.raises(InvalidParameter):
        weighted_distance_estimate(-1.0, [1.0, 0.0], 1.0, [0.0, 1.0], 0.05, 0.1, NoiseModel(), ledger)


def test_perturb_state_adversarial_distance():
    """Should place the adversarial state exactly epsilon away from a unit target."""
    target = np.array([0.6, 0.8j, 0.0])
    perturbed = perturb_state(target, 0.1, NoiseModel(NoiseMode.ADVERSARIAL, 4))
    assert np.linalg.norm(perturbed) == pytest.approx(1.0)
    assert np.linalg.norm(perturbed - target) == pytest.approx(0.1)
