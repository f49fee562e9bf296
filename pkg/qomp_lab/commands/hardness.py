import logging

import numpy as np

import qomp_lab.repository.instance_repository as instance_repo
import qomp_lab.repository.run_repository as run_repo
from qomp_lab.errors import CombinatorialBlowup
from qomp_lab.hardness import X3CInstance, equivalence_epsilon, reduce_x3c, x3c_brute
from qomp_lab.schemas import ExperimentConfig, ReducedInstancePayload
from qomp_lab.services.experiments import base_seed
from qomp_lab.services.generators import planted_x3c, random_x3c

logger = logging.getLogger(__name__)


def _instance(config: ExperimentConfig) -> X3CInstance:
    if config.instance is not None:
        return instance_repo.load_x3c(config.instance)
    rng = np.random.default_rng(base_seed(config))
    if config.planted:
        extra = max(0, config.triple_count - config.ground_size // 3)
        return planted_x3c(config.ground_size, extra, rng)
    return random_x3c(config.ground_size, config.triple_count, rng)


def cmd_reduce_x3c(config: ExperimentConfig) -> int:
    instance = _instance(config)
    reduced = reduce_x3c(instance)
    try:
        cover = x3c_brute(instance)
    except CombinatorialBlowup as error:
        logger.warning(f"cover-skipped: {error.detail}")
        cover = None
    payload = ReducedInstancePayload(
        dictionary=instance_repo.matrix_to_payload(reduced.dictionary.entries),
        signal=instance_repo.matrix_to_payload(reduced.signal.amplitudes),
        eps_bound=reduced.eps_bound,
        sound_bound=reduced.sound_bound,
        equivalence_epsilon=equivalence_epsilon(instance),
        cover=cover,
    )
    run_repo.save_model(config.output, payload)
    return 0
