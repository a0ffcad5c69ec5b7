"""Bottleneck and degree-q Wasserstein distances between persistence diagrams.

Both distances allow any point to be matched to the diagonal at cost
(death - birth) / 2, so diagrams of different sizes are always comparable.
The bottleneck solver binary-searches the exact finite set of candidate
costs, testing feasibility with an augmenting-path bipartite matching, so
the result is exact.  Wasserstein reduces to one min-cost assignment on an
augmented square cost matrix.  ``matching_oracle`` brute-forces tiny inputs
and anchors both solvers in tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .persistence import PersistenceDiagram

__all__ = [
    "DIAGONAL",
    "AugmentedMatching",
    "bottleneck_distance",
    "wasserstein_distance",
    "matching_oracle",
]

DIAGONAL = "diagonal"
_ORACLE_GUARD = 8


@dataclass(frozen=True)
class AugmentedMatching:
    """Pairing of two diagrams' points, each side padded with the diagonal.

    A pair's cost is the L-infinity plane distance, or (death - birth) / 2
    when one end is the diagonal.
    """

    pairs: tuple  # of (source, target), each a (birth, death) pair or DIAGONAL
    cost_per_pair: tuple

    def max_cost(self) -> float:
        return max(self.cost_per_pair, default=0.0)

    def power_cost(self, q: float) -> float:
        return sum(c**q for c in self.cost_per_pair) ** (1.0 / q)


def _pair_cost(x, y) -> float:
    if x == DIAGONAL and y == DIAGONAL:
        return 0.0
    if x == DIAGONAL:
        return (y[1] - y[0]) / 2.0
    if y == DIAGONAL:
        return (x[1] - x[0]) / 2.0
    return max(abs(x[0] - y[0]), abs(x[1] - y[1]))


def _check_pair(X: PersistenceDiagram, Y: PersistenceDiagram) -> None:
    if X.dimension != Y.dimension:
        raise ValueError(
            f"dimension mismatch: {X.dimension} vs {Y.dimension}"
        )


def _kuhn_perfect_matching(adj: list[list[int]], n_right: int) -> bool:
    """True when every left vertex can be matched (augmenting-path search)."""
    match_right = [-1] * n_right

    def try_augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                if match_right[v] == -1 or try_augment(match_right[v], seen):
                    match_right[v] = u
                    return True
        return False

    for u in range(len(adj)):
        if not try_augment(u, [False] * n_right):
            return False
    return True


def _feasible(xs, ys, dx, dy, t: float) -> bool:
    """Can every point be matched within cost t?

    Left side: X points then one diagonal slot per Y point; right side:
    Y points then one diagonal slot per X point.  Slot-to-slot edges are
    free, each point may take only its own projection's slot.
    """
    nx, ny = len(xs), len(ys)
    adj: list[list[int]] = []
    for i in range(nx):
        nbrs = [j for j in range(ny) if _pair_cost(xs[i], ys[j]) <= t]
        if dx[i] <= t:
            nbrs.append(ny + i)
        adj.append(nbrs)
    for j in range(ny):
        nbrs = list(range(ny, ny + nx))  # diagonal-to-diagonal, always allowed
        if dy[j] <= t:
            nbrs = [j] + nbrs
        adj.append(nbrs)
    return _kuhn_perfect_matching(adj, ny + nx)


def bottleneck_distance(X: PersistenceDiagram, Y: PersistenceDiagram) -> float:
    """Exact bottleneck distance via binary search over the candidate cost set."""
    _check_pair(X, Y)
    xs, ys = list(X.barcodes), list(Y.barcodes)
    dx = [(b[1] - b[0]) / 2.0 for b in xs]
    dy = [(b[1] - b[0]) / 2.0 for b in ys]
    candidates = {0.0}
    candidates.update(dx)
    candidates.update(dy)
    for x in xs:
        for y in ys:
            candidates.add(_pair_cost(x, y))
    levels = sorted(candidates)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(xs, ys, dx, dy, levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    return levels[lo]


def wasserstein_distance(X: PersistenceDiagram, Y: PersistenceDiagram, q: float = 1.0) -> float:
    """Degree-q Wasserstein distance via one min-cost perfect matching.

    Cost matrix rows are X points plus |Y| diagonal slots, columns are Y
    points plus |X| slots; matching a point into any opposite slot costs its
    own diagonal projection, slot-to-slot is free.  Supports q >= 1.
    """
    _check_pair(X, Y)
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    if q < 1:
        raise ValueError("the assignment solver supports q >= 1 only")
    xs, ys = list(X.barcodes), list(Y.barcodes)
    nx, ny = len(xs), len(ys)
    if nx == 0 and ny == 0:
        return 0.0
    size = nx + ny
    cost = np.zeros((size, size), dtype=np.float64)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            cost[i, j] = _pair_cost(x, y) ** q
        cost[i, ny:] = ((x[1] - x[0]) / 2.0) ** q
    for j, y in enumerate(ys):
        cost[nx:, j] = ((y[1] - y[0]) / 2.0) ** q
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() ** (1.0 / q))


def _enumerate_matchings(xs, ys):
    """Yield every augmented matching of two small diagrams."""
    nx, ny = len(xs), len(ys)
    for size in range(min(nx, ny) + 1):
        for x_idx in itertools.combinations(range(nx), size):
            for y_idx in itertools.permutations(range(ny), size):
                pairs = [(xs[i], ys[j]) for i, j in zip(x_idx, y_idx)]
                pairs += [(xs[i], DIAGONAL) for i in range(nx) if i not in x_idx]
                pairs += [(DIAGONAL, ys[j]) for j in range(ny) if j not in y_idx]
                costs = tuple(_pair_cost(a, b) for a, b in pairs)
                yield AugmentedMatching(tuple(pairs), costs)


def matching_oracle(X: PersistenceDiagram, Y: PersistenceDiagram, q: float = math.inf) -> float:
    """Exact optimum by enumerating all augmented matchings; |X|+|Y| <= 8."""
    _check_pair(X, Y)
    xs, ys = list(X.barcodes), list(Y.barcodes)
    if len(xs) + len(ys) > _ORACLE_GUARD:
        raise ValueError(
            f"oracle limited to {_ORACLE_GUARD} total points, got {len(xs) + len(ys)}"
        )
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    if len(xs) == 0 and len(ys) == 0:
        return 0.0
    best = math.inf
    for matching in _enumerate_matchings(xs, ys):
        value = matching.max_cost() if math.isinf(q) else matching.power_cost(q)
        best = min(best, value)
    return best
