import numpy as np
import pytest
from hypothesis import settings

from scheddelay.analytic import FixedPointParams, solve_meta_distribution
from scheddelay.channel import ChannelParams

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")

DELTA = 2 / 3.8


@pytest.fixture(scope="session")
def channel():
    return ChannelParams()


@pytest.fixture(scope="session")
def light_f():
    """Meta distribution at the light-traffic reference point (xi=0.05, K=3)."""
    return solve_meta_distribution(FixedPointParams(), DELTA, 1.0, 0.05, 3)


@pytest.fixture(scope="session")
def heavy_f():
    return solve_meta_distribution(FixedPointParams(), DELTA, 1.0, 0.20, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
