import pytest
from hypothesis import settings

from softgreen import calibration
from softgreen.workload import REFERENCE_N, LoopBound, PrimalityMode, profile


settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def ds():
    return calibration.load_dataset()


@pytest.fixture(scope="session")
def sqrt_profile():
    """The listing's own workload over [2, 10^6)."""
    return profile(REFERENCE_N, PrimalityMode.PAPER, bound=LoopBound.SQRT)


@pytest.fixture(scope="session")
def linear_profile():
    """The timing workload (loop bound i < v) over [2, 10^6)."""
    return profile(REFERENCE_N, PrimalityMode.PAPER, bound=LoopBound.LINEAR)
