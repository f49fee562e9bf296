import logging

import numpy as np

import qomp_lab.repository.instance_repository as instance_repo
import qomp_lab.repository.run_repository as run_repo
from qomp_lab.core import mutual_incoherence
from qomp_lab.errors import IllConditioned
from qomp_lab.quantum_primitives import QueryLedger
from qomp_lab.recovery import (
    classical_incoherence_cost,
    estimate_mutual_incoherence_q,
    incoherence_tolerance,
    sparse_coefficient_tomography,
    support_recovery,
)
from qomp_lab.schemas import ExperimentConfig, MuEstimateExport
from qomp_lab.services.experiments import DEFAULT_ETA, load_or_generate, noise_model
from qomp_lab.services.generators import generate_dictionary

logger = logging.getLogger(__name__)


def cmd_estimate_mu(config: ExperimentConfig) -> int:
    if config.instance is not None:
        dictionary, _, _ = instance_repo.load_instance(config.instance)
    else:
        rng = np.random.default_rng(config.seed if config.seed is not None else 0)
        dictionary = generate_dictionary(config.dictionary_kind, config.n, config.m, rng)
    ledger = QueryLedger()
    estimate = estimate_mutual_incoherence_q(
        dictionary, config.epsilon, config.delta, noise_model(config), ledger
    )
    export = MuEstimateExport(
        estimate=estimate,
        tolerance=incoherence_tolerance(config.epsilon),
        classical_value=mutual_incoherence(dictionary),
        classical_cost=classical_incoherence_cost(dictionary.n, dictionary.m),
        ledger=run_repo.ledger_to_export(ledger),
        seed=config.seed,
    )
    run_repo.save_model(config.output, export)
    return 0


def cmd_tomography(config: ExperimentConfig) -> int:
    """Support recovery to residual epsilon/4, then sparse coefficient tomography at epsilon."""
    instance = load_or_generate(config)
    noise = noise_model(config)
    recovered = support_recovery(
        instance.dictionary,
        instance.signal,
        config.sparsity,
        config.epsilon / 4,
        config.eta or DEFAULT_ETA,
        config.gamma,
        noise.derive(0),
        config.access,
    )
    if not len(recovered.support):
        raise IllConditioned("Support recovery selected no atom")
    report = sparse_coefficient_tomography(
        instance.dictionary,
        recovered.support,
        instance.signal,
        config.epsilon,
        config.delta,
        noise.derive(1),
        recovered.ledger,
        access=config.access,
        eta=config.eta,
    )
    run_repo.save_model(config.output, run_repo.report_to_export(report, config.seed))
    if not report.success:
        logger.warning(f"tomography-failed: reconstruction error {report.reconstruction_error:.4g}")
        return 2
    return 0
