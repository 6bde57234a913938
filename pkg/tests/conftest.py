import numpy as np
import pytest

from gbkp.solver import build_solution
from gbkp.theta import PeriodMatrix

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


N1_FREE = {"alpha": [1.0], "rho": [1.0], "k": [1.0], "u0": 0.0}
N2_FREE = {"alpha": [0.5, 0.3], "rho": [1.0, -0.7], "k": [0.4, 0.2]}
N2_IM = [[1.0, 0.25], [0.25, 1.2]]


@pytest.fixture(scope="session")
def sol1():
    return build_solution(1, N1_FREE, PeriodMatrix([[2.0]]))


@pytest.fixture(scope="session")
def sol2():
    return build_solution(2, N2_FREE, PeriodMatrix(N2_IM))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
