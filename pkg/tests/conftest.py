import numpy as np
import pytest

from ivfs import DataMatrix, RngHandle

# one line per acceptance check, printed after the run (fd capture would
# swallow prints from passing tests)
SCORECARD = []


def record_criterion(number: int, status: str, detail: str) -> None:
    SCORECARD.append(f"[criterion {number:>2}] {status}: {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if SCORECARD:
        terminalreporter.section("acceptance scorecard")
        for line in SCORECARD:
            terminalreporter.write_line(line)


@pytest.fixture
def square_points():
    # unit square scaled to side 0.4; diagonal 0.4 * sqrt(2)
    pts = np.array([[0.0, 0.0], [0.4, 0.0], [0.4, 0.4], [0.0, 0.4]])
    return DataMatrix(values=pts)


@pytest.fixture
def separated():
    """Two tight clusters far apart; every sensible method scores 1.0."""
    g = RngHandle(99).generator()
    a = g.normal(0.0, 0.01, size=(10, 3))
    b = g.normal(0.0, 0.01, size=(10, 3)) + 25.0
    values = np.vstack([a, b])
    labels = np.array([0] * 10 + [1] * 10, dtype=np.int64)
    return DataMatrix(values=values, labels=labels)


def write_csv_dataset(path, X):
    """Dump a DataMatrix to the CSV layout load_csv expects."""
    cols = [f"f{j}" for j in range(X.d)]
    lines = []
    if X.labels is not None:
        lines.append(",".join(cols + ["label"]))
        for row, lab in zip(X.values, X.labels):
            lines.append(",".join(f"{v:.17g}" for v in row) + f",{int(lab)}")
    else:
        lines.append(",".join(cols))
        for row in X.values:
            lines.append(",".join(f"{v:.17g}" for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path
