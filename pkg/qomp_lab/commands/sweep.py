import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, List

import qomp_lab.repository.run_repository as run_repo
from qomp_lab.config import get_threads
from qomp_lab.schemas import ExperimentConfig
from qomp_lab.services.experiments import round_row, run_trial, sweep_plan

logger = logging.getLogger(__name__)


def cmd_sweep(config: ExperimentConfig) -> int:
    """One CSV row per (grid value, trial), written in trial order whatever the thread count."""
    solver = config.sweep.solver if config.sweep is not None else "qomp"
    plan = sweep_plan(config)

    def run(indexed) -> List[Any]:
        trial, trial_config = indexed
        return round_row(run_trial(trial_config, solver, trial))

    threads = min(get_threads(), max(1, len(plan)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(run, enumerate(plan)))
    logger.info(f"sweep-finished: {len(rows)} rows with {threads} threads")
    run_repo.save_rows(config.output, run_repo.SWEEP_HEADER, rows)
    return 0
