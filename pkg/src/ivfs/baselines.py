"""Comparison selectors: SPEC (second-type scoring) and MCFS.

Both ride on the same spectral machinery: a similarity graph, its
normalized Laplacian, and a symmetric eigensolver.  SPEC scores each
feature by its smoothness against the graph spectrum with the trivial
eigenvector projected out (lower is better).  MCFS embeds the graph into
its leading nontrivial eigenvectors and ranks features by the largest
absolute coefficient they earn across per-eigenvector L1-regularized
regressions (higher is better).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import Lasso

from .data import DataMatrix

__all__ = [
    "GraphKind",
    "SimilarityGraph",
    "FeatureRanking",
    "build_similarity",
    "eigensym",
    "spec_rank",
    "mcfs_rank",
]


class GraphKind(enum.Enum):
    RBF_FULL = "rbf"
    KNN_BINARY = "knn"


@dataclass(frozen=True)
class SimilarityGraph:
    """Symmetric nonnegative weights with zero diagonal and positive degrees."""

    weights: np.ndarray
    degree: np.ndarray


@dataclass(frozen=True)
class FeatureRanking:
    """Per-feature scores plus the induced order, best first.

    Ties are broken by ascending feature index regardless of direction.
    """

    scores: np.ndarray
    order: np.ndarray
    higher_is_better: bool

    @classmethod
    def from_scores(cls, scores: np.ndarray, higher_is_better: bool) -> "FeatureRanking":
        scores = np.asarray(scores, dtype=np.float64)
        key = -scores if higher_is_better else scores
        order = np.lexsort((np.arange(len(scores)), key))
        return cls(scores, order, higher_is_better)

    def top(self, count: int) -> np.ndarray:
        return self.order[:count].copy()


def build_similarity(
    X: DataMatrix, kind: GraphKind = GraphKind.RBF_FULL, k_neighbors: int = 5
) -> SimilarityGraph:
    """Similarity graph over rows.

    RBF_FULL: w_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)) with sigma the
    median nonzero pairwise distance.  KNN_BINARY: unit weight where either
    endpoint lists the other among its k nearest (mutual-or), ties in the
    neighbor cut broken by ascending row index.
    """
    n = X.n
    if n < 3:
        raise ValueError(f"similarity graph needs n >= 3, got {n}")
    dist = squareform(pdist(X.values))
    if kind is GraphKind.RBF_FULL:
        nonzero = dist[np.triu_indices(n, k=1)]
        nonzero = nonzero[nonzero > 0]
        sigma = float(np.median(nonzero)) if nonzero.size else 1.0
        weights = np.exp(-(dist**2) / (2.0 * sigma**2))
        np.fill_diagonal(weights, 0.0)
    elif kind is GraphKind.KNN_BINARY:
        if not (1 <= k_neighbors < n):
            raise ValueError(f"k_neighbors {k_neighbors} out of range [1, {n})")
        weights = np.zeros((n, n), dtype=np.float64)
        for i in range(n):
            ranked = np.lexsort((np.arange(n), dist[i]))
            neighbors = [j for j in ranked if j != i][:k_neighbors]
            weights[i, neighbors] = 1.0
        weights = np.maximum(weights, weights.T)  # mutual-or symmetrization
    else:
        raise ValueError(f"unknown graph kind {kind!r}")

    degree = weights.sum(axis=1)
    if np.any(degree <= 0):
        isolated = int(np.argmin(degree))
        raise ValueError(f"vertex {isolated} is isolated (zero degree)")
    return SimilarityGraph(weights, degree)


def eigensym(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix: ascending values, orthonormal vectors.

    Guarantees ||A v - lambda v|| <= 1e-7 per pair and V^T V = I within
    1e-7.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(A - A.T).max(initial=0.0) > 1e-9:
        raise ValueError("matrix is not symmetric within 1e-9")
    values, vectors = np.linalg.eigh((A + A.T) / 2.0)
    return values, vectors


def _normalized_laplacian(graph: SimilarityGraph) -> np.ndarray:
    d_isqrt = 1.0 / np.sqrt(graph.degree)
    W_norm = graph.weights * d_isqrt[:, None] * d_isqrt[None, :]
    L = np.eye(len(graph.degree)) - W_norm
    return (L + L.T) / 2.0


def spec_rank(X: DataMatrix, graph: SimilarityGraph) -> FeatureRanking:
    """Second-type SPEC scores: trivial-component-removed Laplacian smoothness.

    phi(f) = (fhat' L fhat) / (1 - (fhat' xi1)^2) with fhat the degree-
    weighted normalized feature and xi1 the trivial eigenvector; lower is
    better.  Features collinear with the trivial eigenvector (constants)
    score +inf and land last.
    """
    if X.n != len(graph.degree):
        raise ValueError("graph size does not match data")
    L = _normalized_laplacian(graph)
    d_sqrt = np.sqrt(graph.degree)
    xi1 = d_sqrt / np.linalg.norm(d_sqrt)
    scores = np.empty(X.d, dtype=np.float64)
    for f in range(X.d):
        weighted = d_sqrt * X.values[:, f]
        norm = np.linalg.norm(weighted)
        if norm == 0.0:
            scores[f] = np.inf
            continue
        fhat = weighted / norm
        smooth = float(fhat @ L @ fhat)
        align = float(fhat @ xi1)
        denom = 1.0 - align * align
        scores[f] = smooth / denom if denom > 1e-12 else np.inf
    return FeatureRanking.from_scores(scores, higher_is_better=False)


def _lasso_with_support(A: np.ndarray, y: np.ndarray, n_select: int) -> np.ndarray:
    """Descend a geometric alpha path until at least n_select coefficients are active."""
    n, d = A.shape
    target = min(n_select, d)
    alpha_max = float(np.abs(A.T @ y).max()) / n
    if alpha_max == 0.0:
        return np.zeros(d)
    model = Lasso(alpha=alpha_max, fit_intercept=False, warm_start=True, max_iter=5000)
    alpha = alpha_max
    coef = np.zeros(d)
    with warnings.catch_warnings():
        # tiny-alpha fits near the end of the path are allowed to stop early
        warnings.simplefilter("ignore", ConvergenceWarning)
        for _ in range(200):
            alpha *= 0.85
            model.set_params(alpha=alpha)
            model.fit(A, y)
            coef = model.coef_.copy()
            if np.count_nonzero(coef) >= target:
                break
    return coef


def mcfs_rank(
    X: DataMatrix, graph: SimilarityGraph, n_clusters: int, n_select: int
) -> FeatureRanking:
    """MCFS scores: max absolute lasso coefficient across spectral embeddings.

    The embedding uses the n_clusters smallest nontrivial solutions of the
    generalized problem L y = lambda D y.  Feature columns are scaled to
    unit norm before the regressions, so the ranking depends only on
    feature direction.
    """
    n = X.n
    if not (1 <= n_clusters < n):
        raise ValueError(f"n_clusters {n_clusters} out of range [1, {n})")
    if n_select < 1:
        raise ValueError("n_select must be >= 1")
    if X.n != len(graph.degree):
        raise ValueError("graph size does not match data")

    # Ly = lambda Dy via the symmetric form; y = D^{-1/2} z, skip the trivial pair
    values, vectors = eigensym(_normalized_laplacian(graph))
    d_isqrt = 1.0 / np.sqrt(graph.degree)
    embeddings = d_isqrt[:, None] * vectors[:, 1 : n_clusters + 1]

    norms = np.linalg.norm(X.values, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    A = X.values / safe

    scores = np.zeros(X.d, dtype=np.float64)
    for j in range(embeddings.shape[1]):
        y = embeddings[:, j]
        coef = _lasso_with_support(A, y, n_select)
        scores = np.maximum(scores, np.abs(coef))
    return FeatureRanking.from_scores(scores, higher_is_better=True)
