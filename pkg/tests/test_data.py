import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivfs import (
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


# ---------------------------------------------------------------------------
# seeding


def test_derive_seed_is_deterministic_and_tag_sensitive():
    assert derive_seed(7, "alpha", 0) == derive_seed(7, "alpha", 0)
    assert derive_seed(7, "alpha", 0) != derive_seed(7, "alpha", 1)
    assert derive_seed(7, "alpha", 0) != derive_seed(7, "beta", 0)
    assert derive_seed(7, "alpha", 0) != derive_seed(8, "alpha", 0)


def test_derive_seed_stays_in_64_bit_range():
    for i in range(50):
        s = derive_seed(123, "range-check", i)
        assert 0 <= s < 2**64


def test_rng_handle_streams_are_independent():
    root = RngHandle(5)
    a = root.derive("stream", 0).generator().uniform(size=8)
    b = root.derive("stream", 1).generator().uniform(size=8)
    a2 = root.derive("stream", 0).generator().uniform(size=8)
    assert np.array_equal(a, a2)
    assert not np.array_equal(a, b)


def test_rng_handle_rejects_out_of_range_seeds():
    with pytest.raises(ValueError):
        RngHandle(-1)
    with pytest.raises(ValueError):
        RngHandle(2**64)


# ---------------------------------------------------------------------------
# DataMatrix


def test_data_matrix_validates_shapes_and_labels():
    with pytest.raises(ValueError):
        DataMatrix(values=np.array([1.0, 2.0]))  # 1-D
    with pytest.raises(ValueError):
        DataMatrix(values=np.array([[np.nan, 1.0]]))
    with pytest.raises(ValueError):
        DataMatrix(values=np.eye(3), labels=np.array([0, 1]))  # length mismatch
    with pytest.raises(ValueError):
        DataMatrix(values=np.eye(3), labels=np.array([0, -1, 1]))


def test_take_rows_keeps_labels_aligned():
    X = DataMatrix(values=np.arange(12.0).reshape(4, 3), labels=np.array([0, 1, 0, 1]))
    Y = X.take_rows(np.array([2, 0]))
    assert np.array_equal(Y.values, X.values[[2, 0]])
    assert np.array_equal(Y.labels, np.array([0, 0]))


# ---------------------------------------------------------------------------
# load_csv


def test_load_csv_roundtrip(tmp_path):
    from conftest import write_csv_dataset

    X = synthesize(12, 4, 2, 1.0, RngHandle(3))
    path = write_csv_dataset(tmp_path / "data.csv", X)
    Y = load_csv(str(path), label_column="label")
    assert np.allclose(Y.values, X.values)
    assert np.array_equal(Y.labels, X.labels)
    assert list(Y.feature_names) == [f"f{j}" for j in range(4)]


def test_load_csv_reports_one_based_positions(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1.0,2.0\n1.0,oops\n")
    # positions are 1-based over data rows (header excluded)
    with pytest.raises(ValueError, match=r"row 2.*column 2"):
        load_csv(str(path))


def test_load_csv_unknown_label_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    with pytest.raises(ValueError, match="label"):
        load_csv(str(path), label_column="missing")


def test_load_csv_needs_two_rows(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        load_csv(str(path))


def test_load_csv_remaps_labels_to_contiguous_ids(tmp_path):
    path = tmp_path / "lab.csv"
    path.write_text("a,y\n1,10\n2,30\n3,10\n4,20\n")
    X = load_csv(str(path), label_column="y")
    # numeric sort order: 10 -> 0, 20 -> 1, 30 -> 2
    assert np.array_equal(X.labels, np.array([0, 2, 0, 1]))


# ---------------------------------------------------------------------------
# standardize


def test_standardize_two_point_feature():
    X = DataMatrix(values=np.array([[1.0], [3.0]]))
    Z = standardize(X)
    assert np.allclose(Z.values, [[-1.0], [1.0]])


def test_standardize_zeroes_constant_features():
    X = DataMatrix(values=np.array([[2.0, 1.0], [2.0, 3.0], [2.0, 5.0]]))
    Z = standardize(X)
    assert np.all(Z.values[:, 0] == 0.0)
    assert abs(Z.values[:, 1].mean()) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_standardize_is_idempotent(seed):
    X = DataMatrix(values=RngHandle(seed).generator().normal(size=(6, 3)))
    once = standardize(X)
    twice = standardize(once)
    assert np.allclose(once.values, twice.values, atol=1e-12)


def test_standardize_population_moments():
    X = DataMatrix(values=RngHandle(0).generator().normal(2.0, 3.0, size=(50, 4)))
    Z = standardize(X)
    assert np.allclose(Z.values.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(Z.values.std(axis=0), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# resampling


def test_subsample_draws_distinct_rows():
    X = DataMatrix(values=np.arange(20.0).reshape(10, 2))
    Y = subsample(X, 6, RngHandle(4))
    assert Y.n == 6
    seen = {tuple(r) for r in Y.values}
    assert len(seen) == 6
    all_rows = {tuple(r) for r in X.values}
    assert seen <= all_rows


def test_subsample_size_bounds():
    X = DataMatrix(values=np.zeros((4, 2)))
    with pytest.raises(ValueError):
        subsample(X, 0, RngHandle(0))
    with pytest.raises(ValueError):
        subsample(X, 5, RngHandle(0))


def test_bootstrap_size_is_ceil_of_ratio():
    X = DataMatrix(values=np.arange(14.0).reshape(7, 2))
    assert bootstrap(X, 0.8, RngHandle(1)).n == 6  # ceil(5.6)
    assert bootstrap(X, 1.0, RngHandle(1)).n == 7


def test_bootstrap_rejects_bad_ratio():
    X = DataMatrix(values=np.zeros((5, 1)))
    for ratio in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            bootstrap(X, ratio, RngHandle(0))


def test_bootstrap_rows_come_from_original():
    X = DataMatrix(values=np.arange(16.0).reshape(8, 2), labels=np.arange(8) % 2)
    Y = bootstrap(X, 1.0, RngHandle(9))
    all_rows = {tuple(r) for r in X.values}
    assert {tuple(r) for r in Y.values} <= all_rows
    assert Y.labels is not None


# ---------------------------------------------------------------------------
# split


def test_split_partitions_rows():
    X = synthesize(20, 3, 1, 1.0, RngHandle(6))
    train, test = train_test_split(X, 0.25, RngHandle(0))
    assert train.n + test.n == X.n
    combined = np.vstack([train.values, test.values])
    # same multiset of rows
    assert np.allclose(np.sort(combined, axis=0), np.sort(X.values, axis=0))


def test_split_is_stratified_when_feasible():
    X = synthesize(40, 2, 1, 1.0, RngHandle(2))
    train, test = train_test_split(X, 0.2, RngHandle(1))
    # 20 per class, 20% -> 4 test rows from each class
    assert np.bincount(test.labels).tolist() == [4, 4]


def test_split_two_rows_one_class():
    X = DataMatrix(values=np.array([[0.0], [1.0]]), labels=np.array([0, 0]))
    train, test = train_test_split(X, 0.5, RngHandle(3))
    assert train.n == 1 and test.n == 1


def test_split_requires_labels_and_valid_fraction():
    X = DataMatrix(values=np.zeros((4, 2)))
    with pytest.raises(ValueError):
        train_test_split(X, 0.5, RngHandle(0))
    Y = DataMatrix(values=np.zeros((4, 2)), labels=np.zeros(4, dtype=np.int64))
    for frac in (0.0, 1.0):
        with pytest.raises(ValueError):
            train_test_split(Y, frac, RngHandle(0))


# ---------------------------------------------------------------------------
# synthesize


def test_synthesize_signal_lives_on_informative_coordinates():
    X = synthesize(400, 6, 2, 1.0, RngHandle(8))
    means = np.array([X.values[X.labels == c].mean(axis=0) for c in (0, 1)])
    gap = np.abs(means[1] - means[0])
    assert np.all(gap[:2] > 2.0)  # separation 3 with sd 1
    assert np.all(gap[2:] < 0.5)


def test_synthesize_is_deterministic():
    A = synthesize(30, 5, 2, 0.5, RngHandle(123))
    B = synthesize(30, 5, 2, 0.5, RngHandle(123))
    assert np.array_equal(A.values, B.values)
    assert np.array_equal(A.labels, B.labels)


def test_synthesize_balanced_labels():
    X = synthesize(31, 4, 0, 1.0, RngHandle(0))
    counts = np.bincount(X.labels)
    assert counts.tolist() == [15, 16]


def test_synthesize_rejects_bad_parameters():
    with pytest.raises(ValueError):
        synthesize(1, 4, 0, 1.0, RngHandle(0))
    with pytest.raises(ValueError):
        synthesize(10, 4, 5, 1.0, RngHandle(0))
    with pytest.raises(ValueError):
        synthesize(10, 4, 2, 0.0, RngHandle(0))
