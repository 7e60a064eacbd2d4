import numpy as np
import pytest

from splitkit.solver import make_rng

ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def write_csv_text(tmp_path):
    def _write(text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p
    return _write


@pytest.fixture
def acceptance():
    return record


@pytest.fixture
def gaussian2d(rng):
    return rng.standard_normal((200, 2))


def brute_objective(points, data):
    """Double-loop reference for the support-point criterion."""
    points = np.atleast_2d(points)
    data = np.atleast_2d(data)
    n, N = len(points), len(data)
    a = sum(np.linalg.norm(z - x) for z in points for x in data)
    b = sum(np.linalg.norm(z - w) for z in points for w in points)
    return 2.0 * a / (n * N) - b / (n * n)
