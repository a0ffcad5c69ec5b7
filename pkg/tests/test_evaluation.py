import numpy as np
import pytest

from ivfs import (
    DataMatrix,
    EvalConfig,
    FeatureSubset,
    RngHandle,
    evaluate_selection,
    kmeans_accuracy,
    knn_accuracy,
    nmi,
    synthesize,
)
from ivfs.evaluation import timed


# ---------------------------------------------------------------------------
# nmi


def test_nmi_identical_labelings():
    u = np.array([0, 0, 1, 1, 2, 2])
    assert nmi(u, u) == pytest.approx(1.0)


def test_nmi_independent_labelings():
    # perfectly crossed 2x2 table has zero mutual information
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == 0.0


def test_nmi_constant_labeling_convention():
    assert nmi([0, 0, 0], [0, 1, 2]) == 0.0
    assert nmi([0, 1, 2], [5, 5, 5]) == 0.0


def test_nmi_symmetry_and_range():
    g = RngHandle(1).generator()
    for _ in range(10):
        u = g.integers(0, 3, size=30)
        v = g.integers(0, 4, size=30)
        a, b = nmi(u, v), nmi(v, u)
        assert a == pytest.approx(b, abs=1e-12)
        assert 0.0 <= a <= 1.0


def test_nmi_invariant_under_class_relabeling():
    g = RngHandle(2).generator()
    u = g.integers(0, 3, size=40)
    v = g.integers(0, 3, size=40)
    relabeled = np.array([2, 0, 1])[v]
    assert nmi(u, v) == pytest.approx(nmi(u, relabeled), abs=1e-12)


def test_nmi_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        nmi([0, 1], [0, 1, 2])


# ---------------------------------------------------------------------------
# knn_accuracy


def test_knn_perfect_on_separated_clusters(separated):
    acc = knn_accuracy(separated, FeatureSubset((0, 1, 2)), rng=RngHandle(3))
    assert acc == 1.0


def test_knn_needs_labels_and_feasible_k():
    X = DataMatrix(values=np.zeros((8, 2)))
    with pytest.raises(ValueError):
        knn_accuracy(X, FeatureSubset((0,)))
    Y = synthesize(8, 2, 1, 1.0, RngHandle(0))
    # train side has 6 or 7 rows; K=50 cannot fit
    with pytest.raises(ValueError):
        knn_accuracy(Y, FeatureSubset((0,)), k_grid=(50,))


def test_knn_is_deterministic_in_the_handle():
    X = synthesize(30, 4, 2, 1.0, RngHandle(5))
    F = FeatureSubset((0, 1))
    a = knn_accuracy(X, F, repeats=5, rng=RngHandle(7))
    b = knn_accuracy(X, F, repeats=5, rng=RngHandle(7))
    c = knn_accuracy(X, F, repeats=5, rng=RngHandle(8))
    assert a == b
    assert 0.0 <= a <= 1.0
    assert isinstance(c, float)


def test_knn_grid_takes_the_best_k():
    X = synthesize(40, 3, 2, 1.0, RngHandle(6))
    F = FeatureSubset((0, 1, 2))
    best = knn_accuracy(X, F, k_grid=(1, 3, 5), rng=RngHandle(1))
    singles = [knn_accuracy(X, F, k_grid=(k,), rng=RngHandle(1)) for k in (1, 3, 5)]
    assert best == pytest.approx(max(singles))


# ---------------------------------------------------------------------------
# kmeans_accuracy


def test_kmeans_perfect_on_separated_clusters(separated):
    acc = kmeans_accuracy(separated, FeatureSubset((0, 1, 2)), rng=RngHandle(4))
    assert acc == 1.0


def test_kmeans_accuracy_at_least_chance():
    X = synthesize(40, 4, 0, 1.0, RngHandle(8))  # no signal at all
    acc = kmeans_accuracy(X, FeatureSubset((0, 1)), rng=RngHandle(2))
    assert acc >= 0.5  # best assignment of 2 clusters to 2 balanced classes


def test_kmeans_invariant_under_class_relabeling(separated):
    flipped = DataMatrix(values=separated.values, labels=1 - separated.labels)
    a = kmeans_accuracy(separated, FeatureSubset((0, 1, 2)), rng=RngHandle(5))
    b = kmeans_accuracy(flipped, FeatureSubset((0, 1, 2)), rng=RngHandle(5))
    assert a == pytest.approx(b)


def test_kmeans_requires_labels_and_two_classes():
    X = DataMatrix(values=np.zeros((6, 2)))
    with pytest.raises(ValueError):
        kmeans_accuracy(X, FeatureSubset((0,)))
    Y = DataMatrix(values=np.zeros((6, 2)), labels=np.zeros(6, dtype=np.int64))
    with pytest.raises(ValueError):
        kmeans_accuracy(Y, FeatureSubset((0,)))


# ---------------------------------------------------------------------------
# timed


def test_timed_returns_result_and_elapsed():
    out, seconds = timed(sorted, [3, 1, 2])
    assert out == [1, 2, 3]
    assert seconds >= 0.0


# ---------------------------------------------------------------------------
# evaluate_selection


def test_eval_config_rejects_unknown_groups():
    with pytest.raises(ValueError):
        EvalConfig(metrics=("norms", "nope"))


def test_full_selection_gives_exact_zero_distances():
    X = synthesize(25, 6, 2, 1.0, RngHandle(10))
    report = evaluate_selection(X, FeatureSubset(tuple(range(6))), EvalConfig())
    assert report.l_inf == 0.0
    assert report.l1_over_n2 == 0.0
    assert report.l2 == 0.0
    assert report.w1 == 0.0
    assert report.w_inf == 0.0
    assert report.knn_accuracy is not None
    assert report.kmeans_accuracy is not None
    assert report.nmi is not None


def test_partial_selection_populates_positive_norms():
    X = synthesize(25, 6, 2, 1.0, RngHandle(11))
    report = evaluate_selection(X, FeatureSubset((0, 1, 2)), EvalConfig())
    for value in (report.l_inf, report.l1_over_n2, report.l2, report.w1, report.w_inf):
        assert value is not None and value >= 0.0
    assert report.l_inf > 0.0
    assert report.l2 >= report.l_inf  # Frobenius dominates the max


def test_unlabeled_data_skips_label_metrics():
    X = DataMatrix(values=RngHandle(12).generator().normal(size=(20, 5)))
    report = evaluate_selection(X, FeatureSubset((0, 1)), EvalConfig())
    assert report.knn_accuracy is None
    assert report.kmeans_accuracy is None
    assert report.nmi is None
    assert report.l2 is not None


def test_metric_group_filtering():
    X = synthesize(20, 5, 2, 1.0, RngHandle(13))
    report = evaluate_selection(X, FeatureSubset((0, 1)), EvalConfig(metrics=("norms",)))
    assert report.l2 is not None
    assert report.w1 is None and report.w_inf is None
    assert report.knn_accuracy is None and report.kmeans_accuracy is None


def test_evaluation_is_deterministic():
    X = synthesize(24, 6, 2, 1.0, RngHandle(14))
    cfg = EvalConfig(master_seed=3)
    a = evaluate_selection(X, FeatureSubset((0, 2, 4)), cfg).to_json_dict()
    b = evaluate_selection(X, FeatureSubset((0, 2, 4)), cfg).to_json_dict()
    # wall-clock is the one legitimately nondeterministic field
    a.pop("elapsed_seconds")
    b.pop("elapsed_seconds")
    assert a == b


def test_elapsed_is_measured():
    X = synthesize(20, 5, 1, 1.0, RngHandle(15))
    report = evaluate_selection(X, FeatureSubset((0, 1)), EvalConfig())
    assert report.elapsed_seconds > 0.0


def test_report_parameters_record_the_protocol():
    X = synthesize(20, 5, 1, 1.0, RngHandle(16))
    cfg = EvalConfig(alpha=0.7, epsilon=0.05)
    report = evaluate_selection(X, FeatureSubset((0, 1)), cfg)
    assert report.parameters["alpha"] == 0.7
    assert report.parameters["epsilon"] == 0.05
    assert report.parameters["n_selected"] == 2
    assert report.parameters["n"] == 20 and report.parameters["d"] == 5


def test_subset_indices_validated_against_data():
    X = synthesize(20, 5, 1, 1.0, RngHandle(17))
    with pytest.raises(ValueError):
        evaluate_selection(X, FeatureSubset((0, 7)), EvalConfig())
