"""
Dictionaries, signals, supports and the exact linear algebra every simulated primitive is
checked against: column-space projections, smallest singular values, mutual incoherence,
the QRAM normalization mu_p and KP-trees.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from qomp_lab.errors import (
    DimensionMismatch,
    EmptyMatrix,
    IndexOutOfRange,
    InvalidInstance,
    TooFewAtoms,
    ZeroColumn,
    ZeroVector,
)

logger = logging.getLogger(__name__)

# Singular values below RANK_CUTOFF * sigma_max count as zero.
RANK_CUTOFF = 1e-12
ZERO_COLUMN_NORM = 1e-14
MU_P_GRID = tuple(round(0.1 * i, 1) for i in range(11))


@dataclass(frozen=True)
class Dictionary:
    entries: np.ndarray

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    @property
    def m(self) -> int:
        return int(self.entries.shape[1])

    @property
    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.entries, axis=0)

    def atom(self, j: int) -> np.ndarray:
        if not 0 <= j < self.m:
            raise IndexOutOfRange(f"Atom index {j} outside [0, {self.m})")
        return self.entries[:, j]

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        """Compact n x |indices| submatrix, columns in the given order."""
        return self.entries[:, list(indices)]


@dataclass(frozen=True)
class Signal:
    amplitudes: np.ndarray
    norm: float

    @property
    def n(self) -> int:
        return int(self.amplitudes.shape[0])

    @property
    def state(self) -> np.ndarray:
        """Unit-norm view |s>; the zero signal maps to the zero vector."""
        if self.norm == 0.0:
            return np.zeros_like(self.amplitudes)
        return self.amplitudes / self.norm


@dataclass(frozen=True)
class Support:
    indices: Tuple[int, ...]
    m: int

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise InvalidInstance(f"Support has duplicate indices: {self.indices}")
        for index in self.indices:
            if not 0 <= index < self.m:
                raise IndexOutOfRange(f"Support index {index} outside [0, {self.m})")

    @classmethod
    def empty(cls, m: int) -> "Support":
        return cls((), m)

    def add(self, index: int) -> "Support":
        return Support(self.indices + (int(index),), self.m)

    def complement(self) -> List[int]:
        selected = set(self.indices)
        return [j for j in range(self.m) if j not in selected]

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, index: object) -> bool:
        return index in self.indices

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)


MatrixLike = Union[np.ndarray, Sequence[Sequence[complex]]]
VectorLike = Union[np.ndarray, Sequence[complex], Signal]


def make_dictionary(raw: MatrixLike) -> Dictionary:
    entries = np.array(raw, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
        raise DimensionMismatch(f"Dictionary must be a non-empty matrix, got shape {entries.shape}")
    if not np.all(np.isfinite(entries)):
        raise InvalidInstance("Dictionary has non-finite entries")
    norms = np.linalg.norm(entries, axis=0)
    for j, norm in enumerate(norms):
        if norm < ZERO_COLUMN_NORM:
            raise ZeroColumn(j)
    return Dictionary(entries / norms)


def make_signal(raw: VectorLike) -> Signal:
    if isinstance(raw, Signal):
        return raw
    amplitudes = np.array(raw, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(amplitudes)):
        raise InvalidInstance("Signal has non-finite entries")
    return Signal(amplitudes, float(np.linalg.norm(amplitudes)))


def as_vector(value: VectorLike) -> np.ndarray:
    if isinstance(value, Signal):
        return value.amplitudes
    return np.asarray(value, dtype=complex).reshape(-1)


def restrict(dictionary: Dictionary, support: Support) -> np.ndarray:
    """D_Lambda: same shape as D, columns outside the support zeroed."""
    restricted = np.zeros_like(dictionary.entries)
    if len(support):
        columns = list(support.indices)
        restricted[:, columns] = dictionary.entries[:, columns]
    return restricted


def _column_space_basis(matrix: np.ndarray) -> np.ndarray:
    if matrix.size == 0:
        return np.zeros((matrix.shape[0], 0), dtype=complex)
    left, singular, _ = scipy.linalg.svd(matrix, full_matrices=False)
    if singular.size == 0 or singular[0] == 0.0:
        return np.zeros((matrix.shape[0], 0), dtype=complex)
    rank = int(np.sum(singular > RANK_CUTOFF * singular[0]))
    return left[:, :rank]


def project_colspace_exact(restricted: np.ndarray, signal: VectorLike) -> Tuple[np.ndarray, float]:
    """phi = D_Lambda D_Lambda^+ s via the SVD, with the module rank cutoff."""
    vector = as_vector(signal)
    if restricted.shape[0] != vector.shape[0]:
        raise DimensionMismatch(
            f"Signal length {vector.shape[0]} does not match {restricted.shape[0]} rows"
        )
    basis = _column_space_basis(np.asarray(restricted, dtype=complex))
    phi = basis @ (basis.conj().T @ vector)
    return phi, float(np.linalg.norm(phi))


def pseudoinverse(matrix: np.ndarray) -> np.ndarray:
    return np.linalg.pinv(np.asarray(matrix, dtype=complex), rcond=RANK_CUTOFF)


def nonzero_columns(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=0)
    return matrix[:, norms >= ZERO_COLUMN_NORM]


def singular_values(matrix: np.ndarray) -> np.ndarray:
    return scipy.linalg.svdvals(np.asarray(matrix, dtype=complex))


def sigma_min(restricted: np.ndarray) -> float:
    """
    Smallest singular value of the nonzero-column submatrix.

    A submatrix with more columns than rows has a nontrivial kernel, so its smallest
    singular value as a map on the column coordinates is zero.
    """
    compact = nonzero_columns(np.asarray(restricted, dtype=complex))
    if compact.shape[1] == 0:
        raise EmptyMatrix("Matrix has no nonzero column")
    if compact.shape[1] > compact.shape[0]:
        return 0.0
    return float(np.min(singular_values(compact)))


def sigma_max(matrix: np.ndarray) -> float:
    values = singular_values(matrix)
    return float(values[0]) if values.size else 0.0


def pair_magnitudes(dictionary: Dictionary) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    |<d_i, d_j>| clipped to [0, 1] for every pair i < j, read off the upper triangle of the
    Gram matrix. The classical and the estimated incoherence both reduce over these values.
    """
    if dictionary.m < 2:
        raise TooFewAtoms(f"Mutual incoherence needs at least 2 atoms, got {dictionary.m}")
    entries = dictionary.entries
    gram = np.clip(np.abs(entries.conj().T @ entries), 0.0, 1.0)
    rows, cols = np.triu_indices(dictionary.m, 1)
    return rows, cols, gram[rows, cols]


def mutual_incoherence(dictionary: Dictionary) -> float:
    _, _, magnitudes = pair_magnitudes(dictionary)
    return float(magnitudes.max())


def _row_power_sums(matrix: np.ndarray, power: float) -> np.ndarray:
    # 0**0 counts as 0 so that the p=0 end counts nonzeros per row
    magnitudes = np.abs(matrix)
    powered = np.where(magnitudes > 0.0, magnitudes ** power, 0.0)
    return powered.sum(axis=1)


def s_p(matrix: np.ndarray, power: float) -> float:
    """max_i ||a_i||_p^p over the rows of the matrix."""
    sums = _row_power_sums(np.asarray(matrix), power)
    return float(sums.max()) if sums.size else 0.0


def mu_p(matrix: MatrixLike, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    a = np.asarray(matrix, dtype=complex)
    return float(np.sqrt(s_p(a, 2 * p) * s_p(a.T, 2 * (1 - p))))


def mu_best(matrix: MatrixLike, grid: Sequence[float] = MU_P_GRID) -> Tuple[float, Optional[float]]:
    """
    Best QRAM normalization over the p-grid and the Frobenius norm.

    Returns the value and the p achieving it, or None when the Frobenius norm wins.
    """
    a = np.asarray(matrix, dtype=complex)
    best_value = float(np.linalg.norm(a))
    best_p: Optional[float] = None
    for p in grid:
        value = mu_p(a, p)
        if value < best_value:
            best_value, best_p = value, p
    return best_value, best_p


@dataclass(frozen=True)
class KPTree:
    """
    Binary tree over squared magnitudes. levels[0] is the root, levels[-1] the leaves.
    Leaves keep their complex values so phases survive state preparation.
    """

    leaf_values: np.ndarray
    levels: Tuple[np.ndarray, ...]
    size: int

    @property
    def root(self) -> float:
        return float(self.levels[0][0])

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def _padded_length(size: int) -> int:
    length = 1
    while length < size:
        length *= 2
    return length


def kp_build(values: VectorLike) -> KPTree:
    vector = as_vector(values)
    if vector.size == 0:
        raise EmptyMatrix("Cannot build a KP-tree over an empty vector")
    leaves = np.zeros(_padded_length(vector.size), dtype=complex)
    leaves[: vector.size] = vector
    level = np.abs(leaves) ** 2
    levels = [level]
    while level.size > 1:
        level = level[0::2] + level[1::2]
        levels.append(level)
    return KPTree(leaves, tuple(reversed(levels)), int(vector.size))


def kp_update(tree: KPTree, index: int, value: complex) -> KPTree:
    """Copy-on-write update touching the depth+1 nodes on the leaf-to-root path."""
    if not 0 <= index < tree.size:
        raise IndexOutOfRange(f"Leaf index {index} outside [0, {tree.size})")
    leaves = tree.leaf_values.copy()
    leaves[index] = value
    levels = [level.copy() for level in tree.levels]
    levels[-1][index] = abs(value) ** 2
    position = index
    for depth in range(len(levels) - 2, -1, -1):
        position //= 2
        child = levels[depth + 1]
        levels[depth][position] = child[2 * position] + child[2 * position + 1]
    return KPTree(leaves, tuple(levels), tree.size)


def kp_amplitudes(tree: KPTree) -> np.ndarray:
    """Rebuild the normalized vector from root-to-leaf ratios, as state preparation would."""
    if tree.root <= 0.0:
        raise ZeroVector("KP-tree root is zero; there is no state to prepare")
    probabilities = np.ones(1)
    for depth in range(1, len(tree.levels)):
        parent = tree.levels[depth - 1]
        child = tree.levels[depth]
        parent_of_child = np.repeat(parent, 2)
        ratios = np.divide(
            child, parent_of_child, out=np.zeros_like(child), where=parent_of_child > 0.0
        )
        probabilities = np.repeat(probabilities, 2) * ratios
    phases = np.exp(1j * np.angle(tree.leaf_values))
    return (np.sqrt(probabilities) * phases)[: tree.size]
