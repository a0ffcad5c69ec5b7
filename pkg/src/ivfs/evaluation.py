"""Selection-quality metrics: KNN and k-means accuracy, NMI, diagram
distances, and distance-matrix norms, bundled into one report.

The classifier, the clustering loop, and NMI are written out in full here
because their tie-breaking rules are part of the determinism contract:
distance ties resolve to the lowest train index, vote and assignment ties
to the smallest id, and every random draw comes from a derived stream.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .data import DataMatrix, RngHandle, train_test_split
from .diagram_metrics import bottleneck_distance, wasserstein_distance
from .metricspace import NormKind, diff_norm, normalize_max, pairwise_distances
from .persistence import build_rips, compute_persistence, filter_noise
from .selection import FeatureSubset

__all__ = [
    "EvalConfig",
    "EvaluationReport",
    "knn_accuracy",
    "kmeans_accuracy",
    "nmi",
    "evaluate_selection",
    "timed",
]

METRIC_GROUPS = ("knn", "cluster", "diagrams", "norms")


@dataclass(frozen=True)
class EvalConfig:
    """Resolved evaluation parameters; defaults follow the reference protocol."""

    master_seed: int = 0
    alpha: float = 0.8
    epsilon: float = 0.1
    max_points: int = 128
    knn_grid: tuple = (1, 3, 5, 10)
    knn_repeats: int = 10
    test_fraction: float = 0.2
    kmeans_n_init: int = 10
    metrics: tuple = METRIC_GROUPS

    def __post_init__(self) -> None:
        unknown = set(self.metrics) - set(METRIC_GROUPS)
        if unknown:
            raise ValueError(f"unknown metric groups {sorted(unknown)}")


@dataclass
class EvaluationReport:
    """One selection's scorecard; label metrics are None when inapplicable."""

    knn_accuracy: float | None
    kmeans_accuracy: float | None
    nmi: float | None
    w1: float | None
    w_inf: float | None
    l_inf: float | None
    l1_over_n2: float | None
    l2: float | None
    elapsed_seconds: float
    parameters: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "knn_accuracy": self.knn_accuracy,
            "kmeans_accuracy": self.kmeans_accuracy,
            "nmi": self.nmi,
            "w1": self.w1,
            "w_inf": self.w_inf,
            "l_inf": self.l_inf,
            "l1_over_n2": self.l1_over_n2,
            "l2": self.l2,
            "elapsed_seconds": self.elapsed_seconds,
            "parameters": self.parameters,
        }


def timed(fn, *args, **kwargs):
    """(result, wall-clock seconds) of one invocation, monotonic clock."""
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    return result, time.perf_counter() - t0


def knn_accuracy(
    X: DataMatrix,
    F: FeatureSubset,
    k_grid=(1, 3, 5, 10),
    repeats: int = 10,
    test_fraction: float = 0.2,
    rng: RngHandle = RngHandle(0),
) -> float:
    """Best mean holdout accuracy of majority-vote KNN over the K grid.

    Each repeat draws its own split from a derived stream; the same splits
    serve every K.  Neighbor ties go to the lower train index, vote ties to
    the smaller class id.
    """
    if X.labels is None:
        raise ValueError("knn_accuracy requires labels")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    k_grid = [int(k) for k in k_grid]
    if any(k < 1 for k in k_grid) or not k_grid:
        raise ValueError("k_grid must hold positive counts")
    cols = np.asarray(list(F), dtype=np.int64)
    n_classes = X.n_classes
    accs = np.zeros((repeats, len(k_grid)), dtype=np.float64)
    for r in range(repeats):
        train, test = train_test_split(X, test_fraction, rng.derive("knn-split", r))
        if max(k_grid) > train.n:
            raise ValueError(
                f"K={max(k_grid)} exceeds the train size {train.n}; shrink the grid"
            )
        dist = cdist(test.values[:, cols], train.values[:, cols])
        # stable sort keeps ascending train index on distance ties
        neighbor_order = np.argsort(dist, axis=1, kind="stable")
        neighbor_labels = train.labels[neighbor_order]
        for ki, k in enumerate(k_grid):
            votes = neighbor_labels[:, :k]
            preds = np.empty(test.n, dtype=np.int64)
            for t in range(test.n):
                counts = np.bincount(votes[t], minlength=n_classes)
                preds[t] = int(np.argmax(counts))  # first max = smallest class id
            accs[r, ki] = float(np.mean(preds == test.labels))
    return float(accs.mean(axis=0).max())


def _lloyd_once(values: np.ndarray, n_clusters: int, gen: np.random.Generator):
    """One seeded k-means run; returns (labels, inertia)."""
    n = values.shape[0]
    centroids = values[gen.choice(n, size=n_clusters, replace=False)].copy()
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(300):
        dist = cdist(values, centroids)
        new_labels = np.argmin(dist, axis=1)  # first min = smallest cluster id
        # re-seed empty clusters to the points farthest from their centroid
        assigned_dist = dist[np.arange(n), new_labels].copy()
        for c in range(n_clusters):
            if not np.any(new_labels == c):
                far = int(np.argmax(assigned_dist))
                centroids[c] = values[far]
                new_labels[far] = c
                assigned_dist[far] = -1.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(n_clusters):
            members = values[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    dist = cdist(values, centroids)
    inertia = float((dist[np.arange(n), labels] ** 2).sum())
    return labels, inertia


def _kmeans_labels(
    values: np.ndarray, n_clusters: int, n_init: int, rng: RngHandle
) -> np.ndarray:
    """Best-inertia labels over n_init restarts, earlier restart wins ties."""
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    if not (1 <= n_clusters <= values.shape[0]):
        raise ValueError(f"n_clusters {n_clusters} out of range")
    best_labels, best_inertia = None, np.inf
    for i in range(n_init):
        labels, inertia = _lloyd_once(values, n_clusters, rng.derive("kmeans-init", i).generator())
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels


def _assignment_accuracy(true_labels: np.ndarray, cluster_labels: np.ndarray) -> float:
    """Fraction matched under the best cluster-to-class assignment."""
    n_classes = int(true_labels.max()) + 1
    n_clusters = int(cluster_labels.max()) + 1
    size = max(n_classes, n_clusters)
    confusion = np.zeros((size, size), dtype=np.int64)
    np.add.at(confusion, (true_labels, cluster_labels), 1)
    rows, cols = linear_sum_assignment(-confusion)
    return float(confusion[rows, cols].sum()) / len(true_labels)


def kmeans_accuracy(
    X: DataMatrix, F: FeatureSubset, n_init: int = 10, rng: RngHandle = RngHandle(0)
) -> float:
    """Clustering accuracy on the selected features, clusters = class count.

    Runs seeded Lloyd restarts, keeps the lowest inertia, and scores the
    best cluster-to-class assignment.
    """
    if X.labels is None:
        raise ValueError("kmeans_accuracy requires labels")
    if X.n_classes < 2:
        raise ValueError("kmeans_accuracy requires at least 2 classes")
    cols = np.asarray(list(F), dtype=np.int64)
    labels = _kmeans_labels(X.values[:, cols], X.n_classes, n_init, rng)
    return _assignment_accuracy(X.labels, labels)


def nmi(u, v) -> float:
    """Mutual information over the geometric mean of entropies, natural logs.

    Returns 0 when either labeling is constant; result clamped to [0, 1].
    """
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if u.shape != v.shape or u.ndim != 1 or len(u) < 1:
        raise ValueError("nmi needs two equal-length label vectors")
    n = len(u)
    joint = np.zeros((int(u.max()) + 1, int(v.max()) + 1), dtype=np.float64)
    np.add.at(joint, (u, v), 1.0)
    joint /= n
    pu = joint.sum(axis=1)
    pv = joint.sum(axis=0)
    hu = -float(np.sum(pu[pu > 0] * np.log(pu[pu > 0])))
    hv = -float(np.sum(pv[pv > 0] * np.log(pv[pv > 0])))
    if hu == 0.0 or hv == 0.0:
        return 0.0
    mask = joint > 0
    outer = np.outer(pu, pv)
    info = float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))
    return float(min(1.0, max(0.0, info / np.sqrt(hu * hv))))


def evaluate_selection(X: DataMatrix, F: FeatureSubset, cfg: EvalConfig) -> EvaluationReport:
    """Full scorecard for one feature selection.

    Distance norms compare own-max-normalized D and D_F on all rows; the
    two diagrams share one deterministic row subsample so they stay
    comparable; label metrics are skipped (None) when labels are absent or
    the metric group is filtered out.
    """
    if len(F) == 0:
        raise ValueError("feature subset is empty")
    cols = np.asarray(list(F), dtype=np.int64)
    if cols.max() >= X.d:
        raise ValueError(f"feature index {cols.max()} out of range [0, {X.d})")
    t0 = time.perf_counter()
    root = RngHandle(cfg.master_seed)
    groups = set(cfg.metrics)
    labeled = X.labels is not None

    l_inf = l1_over_n2 = l2 = None
    w1 = w_inf = None
    knn = km = mutual = None

    D = DF = None
    if "norms" in groups or "diagrams" in groups:
        D = normalize_max(pairwise_distances(X))
        DF = normalize_max(pairwise_distances(X, F))
    if "norms" in groups:
        l_inf = diff_norm(D, DF, NormKind.L_INF)
        l1_over_n2 = diff_norm(D, DF, NormKind.L1) / float(X.n) ** 2
        l2 = diff_norm(D, DF, NormKind.L2)
    if "diagrams" in groups:
        row_rng = root.derive("diagram-rows")
        diagrams = []
        for matrix in (D, DF):
            filt = build_rips(matrix, cfg.alpha, cfg.max_points, row_rng)
            _, h1 = compute_persistence(filt)
            diagrams.append(filter_noise(h1, cfg.epsilon))
        w1 = wasserstein_distance(diagrams[0], diagrams[1], q=1.0)
        w_inf = bottleneck_distance(diagrams[0], diagrams[1])
    if "knn" in groups and labeled:
        knn = knn_accuracy(
            X,
            F,
            cfg.knn_grid,
            cfg.knn_repeats,
            cfg.test_fraction,
            root.derive("knn"),
        )
    if "cluster" in groups and labeled and X.n_classes >= 2:
        cluster_labels = _kmeans_labels(
            X.values[:, cols], X.n_classes, cfg.kmeans_n_init, root.derive("kmeans")
        )
        km = _assignment_accuracy(X.labels, cluster_labels)
        mutual = nmi(X.labels, cluster_labels)

    elapsed = time.perf_counter() - t0
    parameters = {
        "n": X.n,
        "d": X.d,
        "n_selected": len(F),
        "master_seed": cfg.master_seed,
        "alpha": cfg.alpha,
        "epsilon": cfg.epsilon,
        "max_points": cfg.max_points,
        "knn_grid": list(cfg.knn_grid),
        "knn_repeats": cfg.knn_repeats,
        "test_fraction": cfg.test_fraction,
        "kmeans_n_init": cfg.kmeans_n_init,
        "metrics": list(cfg.metrics),
        "labeled": labeled,
    }
    return EvaluationReport(knn, km, mutual, w1, w_inf, l_inf, l1_over_n2, l2, elapsed, parameters)
