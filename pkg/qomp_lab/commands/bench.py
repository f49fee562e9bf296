import itertools

import qomp_lab.repository.run_repository as run_repo
from qomp_lab.qomp import CLASSICAL_VARIANTS, compare_iteration_costs
from qomp_lab.schemas import ExperimentConfig
from qomp_lab.services.experiments import round_row

BENCH_HEADER = ("n", "m", "k", *CLASSICAL_VARIANTS, "qomp_oracular", "qomp_qram")


def cmd_bench(config: ExperimentConfig) -> int:
    """Per-iteration cost predictions over the configured (n, m, k) grid."""
    gamma = config.gamma if config.gamma is not None else 1.0
    eps_i = config.eps_i or config.epsilon
    eps_f = config.eps_f or config.epsilon
    rows = []
    for n, m, k in itertools.product(config.bench.n, config.bench.m, config.bench.k):
        costs = compare_iteration_costs(n, m, k, 1.0, eps_i, eps_f, gamma)
        rows.append(round_row([n, m, k, *(costs[column] for column in BENCH_HEADER[3:])]))
    run_repo.save_rows(config.output, BENCH_HEADER, rows)
    return 0
