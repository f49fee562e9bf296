"""
Exact cover by 3-sets reduced to sparse recovery: atoms are uniform over their triple, the
target is uniform over the ground set, and an exact cover is a support of size N/3 with
zero residual.
"""
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from qomp_lab.classical_omp import brute_force_l0, residual_norm
from qomp_lab.core import Dictionary, Signal, Support, make_dictionary, make_signal
from qomp_lab.errors import CombinatorialBlowup, InvalidInstance

logger = logging.getLogger(__name__)

MAX_BRUTE_TRIPLES = 24
# Fraction of the sound threshold 1/sqrt(N) used by the equivalence check.
EQUIVALENCE_FRACTION = 0.9

Triple = Tuple[int, int, int]


@dataclass(frozen=True)
class X3CInstance:
    ground_size: int
    triples: Tuple[Triple, ...]

    def __post_init__(self):
        if self.ground_size < 3 or self.ground_size % 3:
            raise InvalidInstance(f"Ground set size must be a positive multiple of 3, got {self.ground_size}")
        for triple in self.triples:
            if len(triple) != 3 or len(set(triple)) != 3:
                raise InvalidInstance(f"Triple {triple} does not have 3 distinct elements")
            if not all(0 <= element < self.ground_size for element in triple):
                raise InvalidInstance(f"Triple {triple} leaves the ground set [0, {self.ground_size})")

    @property
    def cover_size(self) -> int:
        return self.ground_size // 3


def make_x3c(ground_size: int, triples: Sequence[Sequence[int]]) -> X3CInstance:
    normalized: List[Triple] = []
    for triple in triples:
        if len(triple) != 3:
            raise InvalidInstance(f"Triple {list(triple)} does not have 3 elements")
        first, second, third = sorted(int(element) for element in triple)
        normalized.append((first, second, third))
    return X3CInstance(int(ground_size), tuple(normalized))


class ReducedInstance(NamedTuple):
    dictionary: Dictionary
    signal: Signal
    eps_bound: float
    sound_bound: float


def reduce_x3c(instance: X3CInstance) -> ReducedInstance:
    """
    Atom i is 1/sqrt(3) on the elements of triple i; the signal is 1/sqrt(N) everywhere.

    eps_bound = sqrt(3/N) separates supports smaller than N/3; sound_bound = 1/sqrt(N) also
    separates size-N/3 supports that are not covers.
    """
    if not instance.triples:
        raise InvalidInstance("An instance without triples has no dictionary")
    size = instance.ground_size
    entries = np.zeros((size, len(instance.triples)))
    for column, triple in enumerate(instance.triples):
        entries[list(triple), column] = 1 / math.sqrt(3)
    signal = make_signal(np.full(size, 1 / math.sqrt(size)))
    return ReducedInstance(make_dictionary(entries), signal, math.sqrt(3 / size), 1 / math.sqrt(size))


def equivalence_epsilon(instance: X3CInstance) -> float:
    return EQUIVALENCE_FRACTION / math.sqrt(instance.ground_size)


def _is_cover(instance: X3CInstance, chosen: Sequence[int]) -> bool:
    covered: List[int] = []
    for index in chosen:
        covered.extend(instance.triples[index])
    return len(covered) == instance.ground_size and len(set(covered)) == instance.ground_size


def verify_reduction(instance: X3CInstance, support: Optional[Support]) -> Optional[List[int]]:
    """Map a solver's support back to an exact cover, or None if it is not one."""
    if support is None or not len(support) or len(support) > instance.cover_size:
        return None
    reduced = reduce_x3c(instance)
    if residual_norm(reduced.dictionary, support, reduced.signal) >= reduced.eps_bound:
        return None
    chosen = sorted(support.indices)
    if not _is_cover(instance, chosen):
        logger.info(f"cover-rejected: support {chosen} is below the threshold but not disjoint")
        return None
    return chosen


def _guard(instance: X3CInstance) -> None:
    if len(instance.triples) > MAX_BRUTE_TRIPLES:
        raise CombinatorialBlowup(
            f"Exhaustive cover search is limited to {MAX_BRUTE_TRIPLES} triples, got {len(instance.triples)}"
        )


def x3c_brute(instance: X3CInstance) -> Optional[List[int]]:
    """Depth-first search branching on the smallest uncovered element."""
    _guard(instance)
    by_element: List[List[int]] = [[] for _ in range(instance.ground_size)]
    for index, triple in enumerate(instance.triples):
        for element in triple:
            by_element[element].append(index)

    def search(covered: frozenset, chosen: List[int]) -> Optional[List[int]]:
        if len(covered) == instance.ground_size:
            return sorted(chosen)
        element = min(e for e in range(instance.ground_size) if e not in covered)
        for index in by_element[element]:
            triple = instance.triples[index]
            if covered.isdisjoint(triple):
                found = search(covered | frozenset(triple), chosen + [index])
                if found is not None:
                    return found
        return None

    return search(frozenset(), [])


def x3c_bitmask(instance: X3CInstance) -> Optional[List[int]]:
    """Independent enumerator over all N/3-subsets of triples encoded as bitmasks."""
    _guard(instance)
    full = (1 << instance.ground_size) - 1
    masks = [sum(1 << element for element in triple) for triple in instance.triples]
    for chosen in combinations(range(len(masks)), instance.cover_size):
        union = 0
        for index in chosen:
            if union & masks[index]:
                break
            union |= masks[index]
        else:
            if union == full:
                return list(chosen)
    return None


def solve_reduced(instance: X3CInstance) -> Optional[Support]:
    """Smallest support of the reduced instance fitting at 0.9/sqrt(N), up to size N/3."""
    reduced = reduce_x3c(instance)
    found = brute_force_l0(
        reduced.dictionary, reduced.signal, equivalence_epsilon(instance), instance.cover_size
    )
    return None if found is None else found[0]


def equivalence_holds(instance: X3CInstance) -> bool:
    """Cover exists iff the reduced instance has a support of size <= N/3 below the threshold."""
    return (x3c_brute(instance) is not None) == (solve_reduced(instance) is not None)
