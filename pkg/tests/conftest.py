import numpy as np
import pytest

from allpass.realization import StateSpace

# Mixed 2-state example: A = diag(2, 1/2), C = I; with Q = diag(1/3, -4/3) it completes to B = diag(3, -3/4), D = diag(2, 1/2)
A3 = np.diag([2.0, 0.5])
B3 = np.diag([3.0, -0.75])
C3 = np.eye(2)
D3 = np.diag([2.0, 0.5])
P3 = np.diag([3.0, -0.75])
Q3 = np.diag([1 / 3, -4 / 3])


@pytest.fixture
def mixed2():
    return StateSpace(A3, B3, C3, D3)


@pytest.fixture
def delay():
    return StateSpace([[0.0]], [[1.0]], [[1.0]], [[0.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def e(i, n=2):
    v = np.zeros((n, 1))
    v[i] = 1.0
    return v


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
