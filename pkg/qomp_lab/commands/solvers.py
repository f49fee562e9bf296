import logging

import qomp_lab.repository.run_repository as run_repo
from qomp_lab.classical_omp import RecoveryStatus
from qomp_lab.schemas import ExperimentConfig, RunRecord
from qomp_lab.services.experiments import load_or_generate, run_omp, run_qomp

logger = logging.getLogger(__name__)

EXIT_CONVERGED = 0
EXIT_FAILED = 2


def _write(config: ExperimentConfig, record: RunRecord) -> int:
    run_repo.save_model(config.output, record)
    run_repo.save_rows(
        run_repo.csv_path_for(config.output), run_repo.RUN_SUMMARY_HEADER, [run_repo.summary_row(record)]
    )
    if record.status != RecoveryStatus.CONVERGED.value:
        logger.warning(f"run-failed: {record.solver} stopped with status {record.status}")
        return EXIT_FAILED
    return EXIT_CONVERGED


def cmd_omp(config: ExperimentConfig) -> int:
    instance = load_or_generate(config)
    result = run_omp(config, instance)
    return _write(config, run_repo.omp_record(result, config.seed, instance.support))


def cmd_qomp(config: ExperimentConfig) -> int:
    instance = load_or_generate(config)
    run = run_qomp(config, instance)
    return _write(config, run_repo.qomp_record(run, config.seed, instance.support))
