"""Pairwise Euclidean distance matrices and the norms used to compare them."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import DataMatrix

__all__ = [
    "DistanceMatrix",
    "NormKind",
    "pairwise_distances",
    "normalize_max",
    "diff_norm",
]


class NormKind(enum.Enum):
    L_INF = "linf"
    L1 = "l1"
    L2 = "l2"


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative n-by-n matrix with zero diagonal.

    ``normalized`` records whether entries were divided by the max; after
    normalization the largest entry is exactly 1 unless the matrix is all
    zero.
    """

    entries: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        e = np.asarray(self.entries, dtype=np.float64)
        object.__setattr__(self, "entries", e)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("entries must be a square matrix")
        if not np.array_equal(e, e.T):
            raise ValueError("entries must be exactly symmetric")
        if np.any(np.diagonal(e) != 0.0):
            raise ValueError("diagonal must be zero")
        if e.size and e.min() < 0.0:
            raise ValueError("entries must be nonnegative")

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def pairwise_distances(X: DataMatrix, subset=None) -> DistanceMatrix:
    """Euclidean distances between rows, optionally over a coordinate subset.

    The condensed form is computed once and mirrored, so the result is
    exactly symmetric.
    """
    values = X.values
    if subset is not None:
        idx = np.asarray(list(subset), dtype=np.int64)
        if idx.size == 0:
            raise ValueError("feature subset is empty")
        if len(np.unique(idx)) != idx.size:
            raise ValueError("feature subset has repeated indices")
        if idx.min() < 0 or idx.max() >= X.d:
            raise ValueError(f"feature index out of range [0, {X.d})")
        values = values[:, idx]
    if X.n == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(squareform(pdist(values, metric="euclidean")))


def normalize_max(D: DistanceMatrix) -> DistanceMatrix:
    """Divide all entries by the largest one; an all-zero matrix passes through."""
    peak = float(D.entries.max()) if D.entries.size else 0.0
    if peak == 0.0:
        return DistanceMatrix(D.entries.copy(), normalized=True)
    return DistanceMatrix(D.entries / peak, normalized=True)


def diff_norm(D: DistanceMatrix, DF: DistanceMatrix, kind: NormKind) -> float:
    """Norm of the entrywise difference; sums run over all n^2 ordered pairs.

    Both inputs must be normalized so the norms compare matrices on a common
    [0, 1] scale.
    """
    if D.n != DF.n:
        raise ValueError(f"dimension mismatch: {D.n} vs {DF.n}")
    if not (D.normalized and DF.normalized):
        raise ValueError("diff_norm requires normalized distance matrices")
    delta = np.abs(D.entries - DF.entries)
    if kind is NormKind.L_INF:
        return float(delta.max()) if delta.size else 0.0
    if kind is NormKind.L1:
        return float(delta.sum())
    if kind is NormKind.L2:
        return float(np.sqrt((delta * delta).sum()))
    raise ValueError(f"unknown norm kind {kind!r}")
