import numpy as np
import pytest

F_HAT = np.array([[0.2, 0.1], [0.1, 0.3]])

from acceptance_log import LINES as ACCEPTANCE_LINES


@pytest.fixture
def f_hat():
    return F_HAT.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
