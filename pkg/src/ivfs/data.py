"""Dataset ingestion, standardization, resampling, and synthetic generation.

All randomness in the package flows through :class:`RngHandle`, a small
value type wrapping a (master seed, stream id) pair.  Derived streams are
obtained by hashing a string tag plus an index, so concurrent work items
can each own an independent, reproducible stream regardless of execution
order.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DataMatrix",
    "RngHandle",
    "derive_seed",
    "load_csv",
    "standardize",
    "subsample",
    "bootstrap",
    "train_test_split",
    "synthesize",
]

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, tag: str, index: int = 0) -> int:
    """Stable 64-bit stream id from (seed, tag, index), identical on every platform."""
    payload = f"{seed}:{tag}:{index}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


@dataclass(frozen=True)
class RngHandle:
    """Value-semantic handle for a reproducible random stream.

    Identical (master_seed, stream_id) pairs produce identical sequences at
    any parallelism level; use :meth:`derive` to fork per-operation streams.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.master_seed <= _MASK64) or not (0 <= self.stream_id <= _MASK64):
            raise ValueError("seeds must be 64-bit unsigned integers")

    def derive(self, tag: str, index: int = 0) -> "RngHandle":
        return RngHandle(self.master_seed, derive_seed(self.stream_id, tag, index))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([self.master_seed, self.stream_id])
        return np.random.Generator(np.random.PCG64(seq))


@dataclass
class DataMatrix:
    """An n-by-d sample matrix with optional integer labels and feature names.

    Ingestion points (:func:`load_csv`, :func:`synthesize`) guarantee n >= 2
    and contiguous class ids 0..C-1.  Resampled views (subsample, bootstrap,
    splits) keep the original ids so parts stay comparable, which may leave
    gaps in the id range.
    """

    values: np.ndarray
    labels: np.ndarray | None = None
    feature_names: list[str] | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        n, d = self.values.shape
        if n < 1 or d < 1:
            raise ValueError(f"matrix must be at least 1x1, got {n}x{d}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values contain non-finite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise ValueError(f"labels length {self.labels.shape} does not match n={n}")
            if self.labels.min(initial=0) < 0:
                raise ValueError("labels must be non-negative integers")
        if self.feature_names is not None and len(self.feature_names) != d:
            raise ValueError("feature_names length does not match d")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            raise ValueError("data has no labels")
        return int(self.labels.max()) + 1

    def take_rows(self, indices: np.ndarray) -> "DataMatrix":
        """New DataMatrix holding the given rows (repeats allowed), labels subset along."""
        indices = np.asarray(indices, dtype=np.int64)
        labels = self.labels[indices] if self.labels is not None else None
        return DataMatrix(self.values[indices].copy(), labels, self.feature_names)


def load_csv(path: str, label_column: str | None = None) -> DataMatrix:
    """Load a UTF-8 comma-separated file with a header row into a DataMatrix.

    Every non-label cell must parse as a finite real.  When ``label_column``
    names a header, that column is extracted as labels and its values are
    remapped to contiguous class ids 0..C-1 in sorted order.

    Raises ValueError with the 1-based data row / column position for
    malformed rows, non-numeric cells, empty files, or an unknown label
    column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if label_column is not None and label_column not in header:
        raise ValueError(f"{path}: unknown label column {label_column!r} (header: {header})")
    label_idx = header.index(label_column) if label_column is not None else -1
    arity = len(header)

    raw_values: list[list[float]] = []
    raw_labels: list[str] = []
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != arity:
            raise ValueError(f"{path}: row {r} has {len(row)} cells, expected {arity}")
        vals = []
        for c, cell in enumerate(row):
            if c == label_idx:
                raw_labels.append(cell)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise ValueError(f"{path}: non-numeric cell at row {r} column {c + 1}") from None
            if not math.isfinite(v):
                raise ValueError(f"{path}: non-finite cell at row {r} column {c + 1}")
            vals.append(v)
        raw_values.append(vals)

    if not raw_values:
        raise ValueError(f"{path}: no data rows")
    values = np.asarray(raw_values, dtype=np.float64)
    if values.shape[0] < 2:
        raise ValueError(f"{path}: at least 2 data rows required, got {values.shape[0]}")
    if values.shape[1] < 1:
        raise ValueError(f"{path}: no feature columns left")

    labels = None
    if label_column is not None:
        # Remap label values to contiguous ids; numeric sort when possible.
        try:
            keys = sorted(set(raw_labels), key=float)
        except ValueError:
            keys = sorted(set(raw_labels))
        mapping = {k: i for i, k in enumerate(keys)}
        labels = np.asarray([mapping[v] for v in raw_labels], dtype=np.int64)

    names = [h for i, h in enumerate(header) if i != label_idx]
    return DataMatrix(values, labels, names)


def standardize(X: DataMatrix) -> DataMatrix:
    """Center each column to mean zero and scale to unit population variance.

    Columns with zero variance map to all-zero columns.  Idempotent up to
    1e-9.
    """
    if X.n < 2:
        raise ValueError("standardize requires at least 2 rows")
    mean = X.values.mean(axis=0)
    std = X.values.std(axis=0)  # population denominator n
    scale = np.where(std > 0.0, std, 1.0)
    out = (X.values - mean) / scale
    out[:, std == 0.0] = 0.0
    return DataMatrix(out, X.labels, X.feature_names)


def subsample(X: DataMatrix, m: int, rng: RngHandle) -> DataMatrix:
    """Draw m distinct rows uniformly without replacement, in draw order."""
    if not (1 <= m <= X.n):
        raise ValueError(f"subsample size {m} out of range [1, {X.n}]")
    idx = rng.generator().choice(X.n, size=m, replace=False)
    return X.take_rows(idx)


def bootstrap(X: DataMatrix, ratio: float, rng: RngHandle) -> DataMatrix:
    """Draw ceil(ratio * n) rows uniformly with replacement."""
    if not (0.0 < ratio <= 1.0):
        raise ValueError(f"bootstrap ratio {ratio} must lie in (0, 1]")
    m = math.ceil(ratio * X.n)
    if m < 2:
        raise ValueError(f"bootstrap would draw {m} rows; need at least 2")
    idx = rng.generator().integers(0, X.n, size=m)
    return X.take_rows(idx)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def train_test_split(
    X: DataMatrix, test_fraction: float, rng: RngHandle
) -> tuple[DataMatrix, DataMatrix]:
    """Disjoint train/test partition, stratified per class when feasible.

    Stratification is used when every class has at least 2 members and
    degrades to a plain random split otherwise.  Both parts are guaranteed
    nonempty; row order within each part is ascending by original index.
    """
    if X.labels is None:
        raise ValueError("train_test_split requires labels")
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction {test_fraction} must lie in (0, 1)")
    n = X.n
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    gen = rng.generator()
    classes, counts = np.unique(X.labels, return_counts=True)

    if np.all(counts >= 2):
        test_idx: list[int] = []
        per_class: list[np.ndarray] = []
        for c in classes:
            members = np.flatnonzero(X.labels == c)
            members = members[gen.permutation(len(members))]
            per_class.append(members)
            t_c = min(_round_half_up(test_fraction * len(members)), len(members) - 1)
            test_idx.extend(members[:t_c].tolist())
        if not test_idx:
            # force one test row from the largest class
            biggest = per_class[int(np.argmax(counts))]
            test_idx.append(int(biggest[0]))
        test = np.sort(np.asarray(test_idx, dtype=np.int64))
    else:
        n_test = min(max(_round_half_up(test_fraction * n), 1), n - 1)
        perm = gen.permutation(n)
        test = np.sort(perm[:n_test])

    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    train = np.flatnonzero(~mask)
    if len(train) == 0 or len(test) == 0:
        raise ValueError("degenerate split: a part is empty")
    return X.take_rows(train), X.take_rows(test)


def synthesize(
    n: int, d: int, n_informative: int, noise_sd: float, rng: RngHandle
) -> DataMatrix:
    """Two balanced Gaussian clusters separated on the first coordinates.

    Cluster means differ by 3 * noise_sd on each of coordinates
    0..n_informative-1; all other coordinates are pure noise.  Labels are
    attached and rows are shuffled deterministically.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    if not (0 <= n_informative <= d):
        raise ValueError(f"n_informative {n_informative} out of range [0, {d}]")
    if noise_sd <= 0:
        raise ValueError("noise_sd must be positive")
    gen = rng.generator()
    values = gen.normal(0.0, noise_sd, size=(n, d))
    labels = np.zeros(n, dtype=np.int64)
    labels[n // 2 :] = 1
    values[labels == 1, :n_informative] += 3.0 * noise_sd
    perm = gen.permutation(n)
    return DataMatrix(values[perm], labels[perm])
