import numpy as np
import pytest

from ecsbell import fock


@pytest.fixture(scope="session")
def trunc64():
    return fock.FockTruncation(64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
