import numpy as np
import pytest

ACCEPTANCE_LINES = []

from lrcd.duration_models import AcdSpec, IidRenewalSpec, InnovationSpec, LmsdSpec
from lrcd.gaussian_lm import LongMemoryGaussianSpec


@pytest.fixture(scope="session")
def g03():
    return LongMemoryGaussianSpec.with_variance(0.3, 0.5)


@pytest.fixture(scope="session")
def lmsd03(g03):
    return LmsdSpec(g03)


@pytest.fixture(scope="session")
def acd():
    return AcdSpec(omega=0.1, alpha=0.1, beta=0.8)


@pytest.fixture(scope="session")
def poisson():
    return IidRenewalSpec(InnovationSpec("exponential"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
