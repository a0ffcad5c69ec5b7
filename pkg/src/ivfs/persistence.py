"""Vietoris-Rips filtrations and persistent homology in dimensions 0 and 1.

The filtration lists vertices, edges at their normalized distance, and
triangles at the max of their edge values, keeping only values <= alpha.
Homology is computed over Z/2 by standard boundary-matrix column reduction;
columns are Python integers used as bitsets, so the reduction XORs whole
columns at once.  Classes still alive at alpha are truncated to die at
alpha, which keeps every barcode finite for the diagram-distance layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RngHandle
from .metricspace import DistanceMatrix

__all__ = [
    "RipsFiltration",
    "PersistenceDiagram",
    "build_rips",
    "compute_persistence",
    "filter_noise",
]


@dataclass(frozen=True)
class RipsFiltration:
    """Simplices up to dimension 2, sorted by (value, dimension, vertices)."""

    n: int
    alpha: float
    simplices: tuple  # of (vertex tuple, filtration value)


@dataclass(frozen=True)
class PersistenceDiagram:
    dimension: int
    barcodes: tuple  # of (birth, death) pairs

    def __post_init__(self) -> None:
        if self.dimension not in (0, 1):
            raise ValueError("only dimensions 0 and 1 are supported")
        for birth, death in self.barcodes:
            if not (0.0 <= birth <= death):
                raise ValueError(f"bad barcode ({birth}, {death})")


def build_rips(
    D: DistanceMatrix, alpha: float, max_points: int = 128, rng: RngHandle | None = None
) -> RipsFiltration:
    """Enumerate the Rips filtration of D up to dimension 2, truncated at alpha.

    D's entries must lie in [0, 1] (normalized, or a submatrix of a
    normalized matrix).  When n exceeds max_points, max_points rows are
    subsampled with rng; passing the same handle across related calls keeps
    the row choice identical, so diagrams of X and X_F stay comparable.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha {alpha} out of range (0, 1]")
    if max_points < 1:
        raise ValueError("max_points must be >= 1")
    entries = D.entries
    if entries.size and entries.max() > 1.0 + 1e-12:
        raise ValueError("distance entries exceed 1; normalize first")
    n = D.n
    if n > max_points:
        if rng is None:
            raise ValueError(f"n={n} exceeds max_points={max_points} but no rng given")
        keep = np.sort(rng.generator().choice(n, size=max_points, replace=False))
        entries = entries[np.ix_(keep, keep)]
        n = max_points

    simplices = [((v,), 0.0) for v in range(n)]
    # edges within threshold, then triangles whose three edges all made it
    edge_val: dict[tuple[int, int], float] = {}
    for i in range(n):
        row = entries[i]
        for j in range(i + 1, n):
            val = float(row[j])
            if val <= alpha:
                edge_val[(i, j)] = val
                simplices.append(((i, j), val))
    for i, j in sorted(edge_val):
        for k in range(j + 1, n):
            a = edge_val.get((i, j))
            b = edge_val.get((i, k))
            c = edge_val.get((j, k))
            if b is not None and c is not None:
                simplices.append(((i, j, k), max(a, b, c)))

    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    return RipsFiltration(n=n, alpha=float(alpha), simplices=tuple(simplices))


def compute_persistence(
    filt: RipsFiltration,
) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """Z/2 boundary-matrix reduction of the filtration.

    Returns the dimension-0 and dimension-1 diagrams.  Classes unpaired at
    the end of the filtration die at alpha.  Zero-length barcodes are kept;
    filter_noise removes them.
    """
    simplices = filt.simplices
    position = {verts: idx for idx, (verts, _) in enumerate(simplices)}
    values = [val for _, val in simplices]
    dims = [len(verts) - 1 for verts, _ in simplices]

    for idx, (verts, _) in enumerate(simplices):
        if len(verts) > 1:
            for omit in range(len(verts)):
                face = verts[:omit] + verts[omit + 1 :]
                if position.get(face, len(simplices)) >= idx:
                    raise ValueError(f"face {face} of simplex {verts} does not precede it")

    # columns as bitsets over simplex positions
    pivot_owner: dict[int, int] = {}
    reduced: dict[int, int] = {}
    creators: set[int] = set()
    pairs: list[tuple[int, int]] = []
    for idx, (verts, _) in enumerate(simplices):
        col = 0
        if len(verts) > 1:
            for omit in range(len(verts)):
                face = verts[:omit] + verts[omit + 1 :]
                col ^= 1 << position[face]
        while col:
            low = col.bit_length() - 1
            owner = pivot_owner.get(low)
            if owner is None:
                break
            col ^= reduced[owner]
        if col == 0:
            creators.add(idx)
        else:
            low = col.bit_length() - 1
            pivot_owner[low] = idx
            reduced[idx] = col
            creators.discard(low)
            pairs.append((low, idx))

    bars: dict[int, list[tuple[float, float]]] = {0: [], 1: []}
    for birth_idx, death_idx in pairs:
        dim = dims[birth_idx]
        if dim in bars:
            bars[dim].append((values[birth_idx], values[death_idx]))
    for idx in creators:
        dim = dims[idx]
        if dim in bars:
            bars[dim].append((values[idx], filt.alpha))

    return (
        PersistenceDiagram(0, tuple(sorted(bars[0]))),
        PersistenceDiagram(1, tuple(sorted(bars[1]))),
    )


def filter_noise(diag: PersistenceDiagram, epsilon: float) -> PersistenceDiagram:
    """Drop barcodes shorter than epsilon (death - birth < epsilon)."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    kept = tuple(bc for bc in diag.barcodes if bc[1] - bc[0] >= epsilon)
    return PersistenceDiagram(diag.dimension, kept)
