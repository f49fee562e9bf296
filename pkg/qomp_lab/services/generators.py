"""Seeded instance generators for experiments and tests."""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from qomp_lab.core import (
    Dictionary,
    Signal,
    Support,
    make_dictionary,
    make_signal,
    mutual_incoherence,
)
from qomp_lab.errors import InvalidParameter
from qomp_lab.hardness import Triple, X3CInstance, make_x3c

logger = logging.getLogger(__name__)

COEFFICIENT_RANGE = (0.5, 1.5)


@dataclass(frozen=True)
class PlantedInstance:
    dictionary: Dictionary
    signal: Signal
    support: Support
    coefficients: np.ndarray


def gaussian_dictionary(n: int, m: int, rng: np.random.Generator) -> Dictionary:
    """Complex Gaussian columns normalized to unit norm."""
    if n < 1 or m < 1:
        raise InvalidParameter(f"Dictionary sizes must be positive, got n={n}, m={m}")
    entries = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    return make_dictionary(entries)


def union_of_bases(n: int) -> Dictionary:
    """Identity next to the unitary DFT; mutual incoherence 1/sqrt(n)."""
    if n < 1:
        raise InvalidParameter(f"Dimension must be positive, got {n}")
    dft = np.fft.fft(np.eye(n)) / math.sqrt(n)
    return make_dictionary(np.hstack([np.eye(n), dft]))


def planted_signal(
    dictionary: Dictionary, sparsity: int, rng: np.random.Generator, normalize: bool = True
) -> PlantedInstance:
    """
    K atoms chosen uniformly without replacement, magnitudes uniform in [0.5, 1.5] and
    uniform phases. The signal is scaled to unit norm unless normalize is False.
    """
    if not 1 <= sparsity <= dictionary.m:
        raise InvalidParameter(f"Sparsity must lie in [1, {dictionary.m}], got {sparsity}")
    chosen = sorted(int(j) for j in rng.choice(dictionary.m, size=sparsity, replace=False))
    magnitudes = rng.uniform(*COEFFICIENT_RANGE, size=sparsity)
    phases = np.exp(2j * math.pi * rng.random(sparsity))
    coefficients = np.zeros(dictionary.m, dtype=complex)
    coefficients[chosen] = magnitudes * phases
    amplitudes = dictionary.entries @ coefficients
    if normalize:
        scale = np.linalg.norm(amplitudes)
        amplitudes = amplitudes / scale
        coefficients = coefficients / scale
    return PlantedInstance(
        dictionary, make_signal(amplitudes), Support(tuple(chosen), dictionary.m), coefficients
    )


def generate_dictionary(kind: str, n: int, m: int, rng: np.random.Generator) -> Dictionary:
    if kind == "gaussian":
        return gaussian_dictionary(n, m, rng)
    if kind == "union_of_bases":
        if m != 2 * n:
            logger.warning(f"size-adjusted: union of bases has m = 2n = {2 * n}, ignoring m={m}")
        return union_of_bases(n)
    raise InvalidParameter(f"Unknown dictionary kind {kind}")


def planted_instance(
    kind: str, n: int, m: int, sparsity: int, seed: int, incoherence: Optional[float] = None
) -> PlantedInstance:
    """
    Dictionary and planted signal from one seed. With an incoherence bound the dictionary is
    redrawn (up to 100 times) until its mutual incoherence is at most that bound.
    """
    rng = np.random.default_rng(seed)
    dictionary = generate_dictionary(kind, n, m, rng)
    if incoherence is not None and dictionary.m >= 2:
        for _ in range(100):
            if mutual_incoherence(dictionary) <= incoherence:
                break
            dictionary = generate_dictionary(kind, n, m, rng)
        else:
            raise InvalidParameter(f"No dictionary with incoherence <= {incoherence} in 100 draws")
    return planted_signal(dictionary, sparsity, rng)


def planted_x3c(ground_size: int, extra_triples: int, rng: np.random.Generator) -> X3CInstance:
    """A random exact cover mixed with random extra triples, shuffled; always a YES instance."""
    if ground_size < 3 or ground_size % 3:
        raise InvalidParameter(f"Ground set size must be a positive multiple of 3, got {ground_size}")
    elements = rng.permutation(ground_size)
    triples: List[Triple] = [
        (int(elements[i]), int(elements[i + 1]), int(elements[i + 2]))
        for i in range(0, ground_size, 3)
    ]
    triples.extend(_random_triples(ground_size, extra_triples, rng))
    order = rng.permutation(len(triples))
    return make_x3c(ground_size, [triples[i] for i in order])


def random_x3c(ground_size: int, count: int, rng: np.random.Generator) -> X3CInstance:
    """Uniformly random triples; may or may not admit a cover."""
    if ground_size < 3 or ground_size % 3:
        raise InvalidParameter(f"Ground set size must be a positive multiple of 3, got {ground_size}")
    return make_x3c(ground_size, _random_triples(ground_size, count, rng))


def _random_triples(ground_size: int, count: int, rng: np.random.Generator) -> List[Triple]:
    triples: List[Triple] = []
    for _ in range(count):
        a, b, c = (int(e) for e in rng.choice(ground_size, size=3, replace=False))
        triples.append((a, b, c))
    return triples
