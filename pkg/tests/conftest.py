import numpy as np
import pytest

from qvol.volstate import make_uniform_grid, max_entropy_state


@pytest.fixture(scope="session")
def grid31():
    """31 levels, 5% to 35% in 1% steps."""
    return make_uniform_grid(31, 0.05, 0.35)


@pytest.fixture(scope="session")
def state31(grid31):
    return max_entropy_state(grid31)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
