import numpy as np
import pytest

from opmac.model import SystemParams


@pytest.fixture
def fig4_params():
    return SystemParams(lam=0.001, alpha=4, theta=1.0, d=2.0, beta=1e-11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
