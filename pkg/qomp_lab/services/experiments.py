"""Glue between an ExperimentConfig and the solvers: instances, noise, budgets and sweep trials."""
import logging
import math
from dataclasses import dataclass
from typing import Any, List, Optional

import numpy as np

import qomp_lab.repository.instance_repository as instance_repo
from qomp_lab.classical_omp import RecoveryResult, omp, residual_norm
from qomp_lab.core import Dictionary, Signal, Support, mutual_incoherence
from qomp_lab.qomp import QompRun, qomp_run
from qomp_lab.quantum_primitives import NoiseModel
from qomp_lab.recovery import default_gamma, support_recovery
from qomp_lab.schemas import ExperimentConfig
from qomp_lab.services.generators import planted_instance

logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.25
INTEGER_FIELDS = ("n", "m", "sparsity")


@dataclass
class LoadedInstance:
    dictionary: Dictionary
    signal: Signal
    support: Optional[Support]


def base_seed(config: ExperimentConfig) -> int:
    return config.seed if config.seed is not None else 0


def noise_model(config: ExperimentConfig, seed: Optional[int] = None) -> NoiseModel:
    return NoiseModel(
        config.noise,
        base_seed(config) if seed is None else seed,
        config.failure_handling,
    )


def load_or_generate(config: ExperimentConfig, seed: Optional[int] = None) -> LoadedInstance:
    """The configured instance file, or a planted instance drawn from the seed."""
    if config.instance is not None:
        dictionary, signal, support = instance_repo.load_instance(config.instance)
        return LoadedInstance(dictionary, signal, support)
    planted = planted_instance(
        config.dictionary_kind,
        config.n,
        config.m,
        config.sparsity,
        base_seed(config) if seed is None else seed,
        config.incoherence,
    )
    return LoadedInstance(planted.dictionary, planted.signal, planted.support)


def qomp_parameters(config: ExperimentConfig, dictionary: Dictionary):
    """(eps_i, eps_f, gamma); unset values follow the support-recovery budgets."""
    gamma = config.gamma if config.gamma is not None else default_gamma(dictionary, config.sparsity)
    eta = config.eta or DEFAULT_ETA
    eps_i = config.eps_i or eta * gamma * config.epsilon / math.sqrt(config.sparsity)
    eps_f = config.eps_f or config.epsilon / 2
    return eps_i, eps_f, gamma


def run_omp(config: ExperimentConfig, instance: LoadedInstance) -> RecoveryResult:
    return omp(instance.dictionary, instance.signal, config.sparsity, config.epsilon)


def run_qomp(config: ExperimentConfig, instance: LoadedInstance, seed: Optional[int] = None) -> QompRun:
    eps_i, eps_f, gamma = qomp_parameters(config, instance.dictionary)
    return qomp_run(
        instance.dictionary,
        instance.signal,
        config.sparsity,
        config.epsilon,
        eps_i,
        eps_f,
        gamma=gamma,
        noise=noise_model(config, seed),
        access=config.access,
        max_iterations=config.max_iterations,
        eta=config.eta,
    )


def with_value(config: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    typed: Any = int(value) if parameter in INTEGER_FIELDS else float(value)
    return config.copy(update={parameter: typed})


def _support_ok(found: Support, planted: Optional[Support], exact: bool) -> Optional[bool]:
    if planted is None:
        return None
    if exact:
        return set(found.indices) == set(planted.indices)
    return bool(len(found)) and set(found.indices) <= set(planted.indices)


def run_trial(config: ExperimentConfig, solver: str, trial: int) -> List[Any]:
    """One sweep row; the trial seed is the base seed plus the trial index."""
    seed = base_seed(config) + trial
    instance = load_or_generate(config, seed)
    dictionary = instance.dictionary
    mu = mutual_incoherence(dictionary) if dictionary.m >= 2 else 0.0
    u_s: Optional[int] = None
    u_d: Optional[int] = None
    gamma: Optional[float] = None
    if solver == "omp":
        result = run_omp(config, instance)
        support, status = result.support, result.status.value
        error = result.residual_norms[-1] if result.residual_norms else instance.signal.norm
        support_ok = _support_ok(support, instance.support, exact=True)
    else:
        if solver == "recovery":
            recovered = support_recovery(
                dictionary,
                instance.signal,
                config.sparsity,
                config.epsilon,
                config.eta or DEFAULT_ETA,
                config.gamma,
                noise_model(config, seed),
                config.access,
            )
            run, gamma = recovered.run, recovered.gamma
        else:
            run = run_qomp(config, instance, seed)
            gamma = qomp_parameters(config, dictionary)[2]
        support, status = run.result.support, run.result.status.value
        estimate = run.result.residual_norms[-1] if run.result.residual_norms else instance.signal.norm
        error = abs(estimate - residual_norm(dictionary, support, instance.signal))
        support_ok = _support_ok(support, instance.support, exact=False)
        u_s, u_d = run.ledger.u_s, run.ledger.u_d
    logger.info(f"trial-finished: trial {trial} seed {seed} status {status}")
    return [
        trial, seed, dictionary.n, dictionary.m, config.sparsity, mu, config.eta, gamma,
        config.epsilon, status, error, support_ok, u_s, u_d,
    ]


def sweep_plan(config: ExperimentConfig) -> List[ExperimentConfig]:
    """One config per trial in trial order: grid values outermost."""
    if config.sweep is None:
        return [config] * config.trials
    plan: List[ExperimentConfig] = []
    for value in config.sweep.values:
        plan.extend([with_value(config, config.sweep.parameter, value)] * config.trials)
    return plan


def round_row(row: List[Any]) -> List[Any]:
    """Floats to 12 significant digits so CSVs diff cleanly."""
    return [float(f"{cell:.12g}") if isinstance(cell, (float, np.floating)) else cell for cell in row]
