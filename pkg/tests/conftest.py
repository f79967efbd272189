import numpy as np
import pytest

from nlsthreshold.exponents import PhysParams, exponent_set
from nlsthreshold.grid import Field, Grid


@pytest.fixture(scope="session")
def params():
    return PhysParams(1, 4.0)


@pytest.fixture(scope="session")
def exps(params):
    return exponent_set(params)


@pytest.fixture(scope="session")
def grid():
    return Grid(1, 1024, 40.0)


def gaussian(grid, width=1.0, center=0.0):
    return Field.from_function(grid, lambda *xs: np.exp(-0.5 * sum((x - center) ** 2 for x in xs) / width ** 2))


@pytest.fixture(scope="session")
def G(grid):
    return gaussian(grid)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
