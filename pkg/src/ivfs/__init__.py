"""Topology-preserving unsupervised feature selection and evaluation toolkit.

Selection ranks features by Monte Carlo estimates of their inclusion value
under distance-matrix preservation scores; evaluation covers persistent
homology of the Rips filtration, diagram distances, matrix norms, and the
usual label-based clustering and classification metrics.
"""

__version__ = "0.1.0"

from .baselines import (
    FeatureRanking,
    GraphKind,
    SimilarityGraph,
    build_similarity,
    eigensym,
    mcfs_rank,
    spec_rank,
)
from .data import (
    DataMatrix,
    RngHandle,
    bootstrap,
    derive_seed,
    load_csv,
    standardize,
    subsample,
    synthesize,
    train_test_split,
)
from .diagram_metrics import (
    DIAGONAL,
    AugmentedMatching,
    bottleneck_distance,
    matching_oracle,
    wasserstein_distance,
)
from .evaluation import (
    EvalConfig,
    EvaluationReport,
    evaluate_selection,
    kmeans_accuracy,
    knn_accuracy,
    nmi,
    timed,
)
from .metricspace import (
    DistanceMatrix,
    NormKind,
    diff_norm,
    normalize_max,
    pairwise_distances,
)
from .persistence import (
    PersistenceDiagram,
    RipsFiltration,
    build_rips,
    compute_persistence,
    filter_noise,
)
from .selection import (
    FeatureSubset,
    IvfsConfig,
    ScoreTable,
    SelectionResult,
    estimate_iv_spread,
    exact_inclusion_value,
    run_ivfs,
    score_subset,
    select_top,
)

__all__ = [
    "__version__",
    "AugmentedMatching",
    "DIAGONAL",
    "DataMatrix",
    "DistanceMatrix",
    "EvalConfig",
    "EvaluationReport",
    "FeatureRanking",
    "FeatureSubset",
    "GraphKind",
    "IvfsConfig",
    "NormKind",
    "PersistenceDiagram",
    "RipsFiltration",
    "RngHandle",
    "ScoreTable",
    "SelectionResult",
    "SimilarityGraph",
    "bootstrap",
    "bottleneck_distance",
    "build_rips",
    "build_similarity",
    "compute_persistence",
    "derive_seed",
    "diff_norm",
    "eigensym",
    "estimate_iv_spread",
    "evaluate_selection",
    "exact_inclusion_value",
    "filter_noise",
    "kmeans_accuracy",
    "knn_accuracy",
    "load_csv",
    "matching_oracle",
    "mcfs_rank",
    "nmi",
    "normalize_max",
    "pairwise_distances",
    "run_ivfs",
    "score_subset",
    "select_top",
    "spec_rank",
    "standardize",
    "subsample",
    "synthesize",
    "timed",
    "train_test_split",
    "wasserstein_distance",
]
