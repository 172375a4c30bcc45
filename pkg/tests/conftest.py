import numpy as np
import pytest

from hullcap import WalkConfig


@pytest.fixture
def cfg():
    return WalkConfig(seed=1234)


@pytest.fixture
def rng():
    return np.random.default_rng(99)
