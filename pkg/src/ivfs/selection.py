"""Random-subset feature selection driven by distance-matrix preservation.

Each of k iterations draws a feature subset F and a row subset, scores F by
how little the normalized pairwise-distance matrix changes when only F is
kept, and credits that score to every member of F.  Per-feature averages of
these credits estimate the feature's inclusion value: its mean score over
all size-d_tilde subsets containing it.  :func:`exact_inclusion_value`
computes that average exhaustively for small d and anchors the Monte Carlo
path in tests.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import pdist

from .data import DataMatrix, RngHandle, derive_seed
from .metricspace import DistanceMatrix, NormKind, normalize_max, pairwise_distances, diff_norm

__all__ = [
    "FeatureSubset",
    "IvfsConfig",
    "ScoreTable",
    "SelectionResult",
    "score_subset",
    "run_ivfs",
    "exact_inclusion_value",
    "estimate_iv_spread",
    "select_top",
]

# Memory ceiling for the vectorized path's per-feature distance table.
_FAST_PATH_BUDGET_BYTES = 512 * 1024 * 1024
_ENUMERATION_GUARD = 10**6


@dataclass(frozen=True)
class FeatureSubset:
    """Distinct feature indices in canonical ascending order."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise ValueError("feature subset is empty")
        if len(set(idx)) != len(idx):
            raise ValueError("feature subset has repeated indices")
        if any(i < 0 for i in idx):
            raise ValueError("feature indices must be nonnegative")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, i) -> bool:
        return i in self.indices


@dataclass(frozen=True)
class IvfsConfig:
    k: int
    d_tilde: int
    n_tilde: int
    d0: int
    norm: NormKind
    master_seed: int

    def validate(self, n: int, d: int) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (1 <= self.d_tilde <= d):
            raise ValueError(f"d_tilde {self.d_tilde} out of range [1, {d}]")
        if not (2 <= self.n_tilde <= n):
            raise ValueError(f"n_tilde {self.n_tilde} out of range [2, {n}]")
        if not (1 <= self.d0 <= d):
            raise ValueError(f"d0 {self.d0} out of range [1, {d}]")


@dataclass
class ScoreTable:
    """Per-feature draw counters and cumulative scores."""

    counters: np.ndarray
    cumulative: np.ndarray


@dataclass
class SelectionResult:
    selected: FeatureSubset
    final_scores: np.ndarray
    table: ScoreTable
    elapsed_seconds: float


def _condensed_norm(delta: np.ndarray, kind: NormKind) -> float:
    """Norm over ordered matrix pairs from the condensed upper-triangle |diff|."""
    if kind is NormKind.L_INF:
        return float(delta.max()) if delta.size else 0.0
    if kind is NormKind.L1:
        return 2.0 * float(delta.sum())
    if kind is NormKind.L2:
        return float(np.sqrt(2.0 * float((delta * delta).sum())))
    raise ValueError(f"unknown norm kind {kind!r}")


def _normalize_condensed(vec: np.ndarray) -> np.ndarray:
    peak = float(vec.max()) if vec.size else 0.0
    if peak == 0.0:
        return np.zeros_like(vec)
    return vec / peak


def score_subset(
    X: DataMatrix,
    F: FeatureSubset,
    row_subset,
    norm: NormKind,
    D_ref: DistanceMatrix,
) -> float:
    """Score of subset F on the given rows: the closer D_F tracks D, the higher.

    D_ref must be the normalized distance matrix of the same rows over all
    features.  The value is <= 0 and equals 0 when F keeps distances exact
    up to scale.
    """
    if not D_ref.normalized:
        raise ValueError("D_ref must be normalized")
    rows = X.take_rows(np.asarray(list(row_subset), dtype=np.int64))
    if D_ref.n != rows.n:
        raise ValueError(f"D_ref is {D_ref.n}x{D_ref.n} but row subset has {rows.n} rows")
    DF = normalize_max(pairwise_distances(rows, F))
    return -diff_norm(D_ref, DF, norm)


def select_top(final_scores: np.ndarray, counters: np.ndarray, d0: int) -> FeatureSubset:
    """Top-d0 features by final score, ties broken by ascending index.

    Features never drawn carry -inf and are not eligible; it is an error
    if fewer than d0 features were ever drawn.
    """
    d = len(final_scores)
    sampled = int(np.count_nonzero(counters > 0))
    if sampled < d0:
        raise ValueError(
            f"only {sampled} of {d} features were ever sampled but d0={d0}; "
            "increase k or d_tilde so every candidate feature gets scored"
        )
    # lexsort: last key is primary, so this is score-descending then index-ascending
    order = np.lexsort((np.arange(d), -final_scores))
    return FeatureSubset(tuple(int(i) for i in order[:d0]))


def _feature_sq_diffs(values: np.ndarray) -> np.ndarray:
    """(d, m) table: row f holds the condensed squared coordinate diffs of feature f."""
    n = values.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    diffs = values[iu] - values[ju]  # (m, d)
    return np.ascontiguousarray((diffs * diffs).T)


def _sample_subsets(d: int, d_tilde: int, k: int, root: RngHandle) -> np.ndarray:
    """One feature subset per iteration, each from its own derived stream."""
    out = np.empty((k, d_tilde), dtype=np.int64)
    for i in range(k):
        gen = root.derive("iteration", i).generator()
        out[i] = gen.choice(d, size=d_tilde, replace=False)
    return out


def _scores_from_table(
    P: np.ndarray, subsets: np.ndarray, ref_condensed: np.ndarray, kind: NormKind
) -> np.ndarray:
    """Vectorized per-iteration scores from the precomputed squared-diff table."""
    k, d_tilde = subsets.shape
    m = P.shape[1]
    scores = np.empty(k, dtype=np.float64)
    # accumulate one subset position at a time so the workspace stays at
    # two (chunk, m) buffers no matter how large d_tilde is
    chunk = max(1, min(k, (64 * 1024 * 1024) // max(1, 2 * m * 8)))
    for start in range(0, k, chunk):
        block = subsets[start : start + chunk]
        acc = P[block[:, 0]].copy()
        for t in range(1, d_tilde):
            acc += P[block[:, t]]
        dist = np.sqrt(acc, out=acc)  # (c, m)
        peak = dist.max(axis=1)
        peak[peak == 0.0] = 1.0
        dist /= peak[:, None]
        delta = np.abs(dist - ref_condensed[None, :])
        if kind is NormKind.L_INF:
            scores[start : start + chunk] = -delta.max(axis=1)
        elif kind is NormKind.L1:
            scores[start : start + chunk] = -2.0 * delta.sum(axis=1)
        elif kind is NormKind.L2:
            scores[start : start + chunk] = -np.sqrt(2.0 * (delta * delta).sum(axis=1))
        else:
            raise ValueError(f"unknown norm kind {kind!r}")
    return scores


def run_ivfs(X: DataMatrix, cfg: IvfsConfig, threads: int = 1) -> SelectionResult:
    """Run the full random-subset selection loop.

    Deterministic given cfg.master_seed at any thread count: every
    iteration owns a derived random stream, scores land in per-iteration
    slots, and accumulation happens in a sequential pass afterwards.
    """
    t0 = time.perf_counter()
    cfg.validate(X.n, X.d)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    n, d = X.n, X.d
    root = RngHandle(cfg.master_seed)
    subsets = _sample_subsets(d, cfg.d_tilde, cfg.k, root)

    m = n * (n - 1) // 2
    full_rows = cfg.n_tilde == n
    fast = full_rows and d * m * 8 <= _FAST_PATH_BUDGET_BYTES

    if fast:
        P = _feature_sq_diffs(X.values)
        ref = _normalize_condensed(np.sqrt(P.sum(axis=0)))
        scores = _scores_from_table(P, subsets, ref, cfg.norm)
    else:
        scores = np.empty(cfg.k, dtype=np.float64)
        ref_full = _normalize_condensed(pdist(X.values)) if full_rows else None

        def run_block(start: int, stop: int) -> None:
            for i in range(start, stop):
                if full_rows:
                    rows = X.values
                    ref = ref_full
                else:
                    gen = root.derive("iteration-rows", i).generator()
                    rows = X.values[gen.choice(n, size=cfg.n_tilde, replace=False)]
                    ref = _normalize_condensed(pdist(rows))
                sub = _normalize_condensed(pdist(rows[:, subsets[i]]))
                scores[i] = -_condensed_norm(np.abs(sub - ref), cfg.norm)

        if threads == 1:
            run_block(0, cfg.k)
        else:
            bounds = np.linspace(0, cfg.k, threads * 4 + 1).astype(int)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(run_block, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:])
                    if b > a
                ]
                for f in futures:
                    f.result()

    # sequential accumulation in iteration order
    cumulative = np.zeros(d, dtype=np.float64)
    counters = np.zeros(d, dtype=np.int64)
    flat = subsets.ravel()
    np.add.at(cumulative, flat, np.repeat(scores, cfg.d_tilde))
    np.add.at(counters, flat, 1)

    final = np.full(d, -np.inf, dtype=np.float64)
    drawn = counters > 0
    final[drawn] = cumulative[drawn] / counters[drawn]
    selected = select_top(final, counters, cfg.d0)
    elapsed = time.perf_counter() - t0
    return SelectionResult(selected, final, ScoreTable(counters, cumulative), elapsed)


def exact_inclusion_value(
    X: DataMatrix,
    d_tilde: int,
    norm: NormKind | None = None,
    score_fn=None,
) -> np.ndarray:
    """Exact per-feature inclusion value by enumerating every size-d_tilde subset.

    Uses all rows.  Each subset's score is credited to its members and the
    total is divided by C(d-1, d_tilde-1), the number of subsets containing
    any one feature.  ``score_fn(subset_tuple) -> real`` replaces the
    distance-norm score when given, which lets tests plug in analytic score
    functions.
    """
    n, d = X.n, X.d
    if not (1 <= d_tilde <= d):
        raise ValueError(f"d_tilde {d_tilde} out of range [1, {d}]")
    total = math.comb(d, d_tilde)
    if total > _ENUMERATION_GUARD:
        raise ValueError(
            f"C({d}, {d_tilde}) = {total} subsets exceeds the enumeration guard "
            f"of {_ENUMERATION_GUARD}"
        )
    if score_fn is None and norm is None:
        raise ValueError("provide a norm or a score_fn")

    iv = np.zeros(d, dtype=np.float64)
    denom = float(math.comb(d - 1, d_tilde - 1))

    if score_fn is not None:
        for F in itertools.combinations(range(d), d_tilde):
            s = float(score_fn(F))
            for f in F:
                iv[f] += s
        return iv / denom

    P = _feature_sq_diffs(X.values)
    ref = _normalize_condensed(np.sqrt(P.sum(axis=0)))
    combos = itertools.combinations(range(d), d_tilde)
    while True:
        block = np.array(list(itertools.islice(combos, 8192)), dtype=np.int64)
        if block.size == 0:
            break
        scores = _scores_from_table(P, block, ref, norm)
        np.add.at(iv, block.ravel(), np.repeat(scores, d_tilde))
    return iv / denom


def estimate_iv_spread(
    X: DataMatrix, cfg: IvfsConfig, repeats: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and sd of final scores over independent reruns.

    Each repeat derives a fresh master seed from cfg.master_seed, so the
    repeats are independent yet the whole estimate is reproducible.
    """
    if repeats < 2:
        raise ValueError("repeats must be >= 2")
    samples = np.empty((repeats, X.d), dtype=np.float64)
    for r in range(repeats):
        seed = derive_seed(cfg.master_seed, "spread-repeat", r)
        samples[r] = run_ivfs(X, replace(cfg, master_seed=seed)).final_scores
    return samples.mean(axis=0), samples.std(axis=0)
