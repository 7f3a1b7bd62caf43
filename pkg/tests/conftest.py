import numpy as np
import pytest
from hypothesis import settings

from crmass.functionals import rng_for
from crmass.sphere import grid_for_degree

settings.register_profile("crmass", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("crmass")


@pytest.fixture(scope="session")
def grid8():
    return grid_for_degree(8)


@pytest.fixture(scope="session")
def grid16():
    return grid_for_degree(16)


@pytest.fixture(scope="session")
def grid32():
    return grid_for_degree(32)


@pytest.fixture
def rng():
    return rng_for(20240917, 0)


def pytest_configure(config):
    np.seterr(over="raise", invalid="raise")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
