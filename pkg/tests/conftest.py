import numpy as np
import pytest
from hypothesis import settings

from ruelle import shift as sh
from acceptance_log import LINES
from oracles import TEST_MATRICES

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def full2():
    return sh.full_shift(2)


@pytest.fixture
def golden():
    return sh.golden_mean()


@pytest.fixture(params=sorted(TEST_MATRICES))
def any_shift(request):
    return sh.TransitionStructure.from_rows(TEST_MATRICES[request.param])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
