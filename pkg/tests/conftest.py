import numpy as np
import pytest
from hypothesis import settings

from gcepc import derive_params

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def four_slot_params(c=5):
    """kA=kB=1, kp=4, delta_p=3: four-worker groups, weight-3 encoders."""
    return derive_params(1, 1, 4, 3, n_groups=c)


@pytest.fixture
def four_slot():
    return four_slot_params()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel_err(X, Y):
    X = X.to_dense() if hasattr(X, "to_dense") else np.asarray(X)
    Y = Y.to_dense() if hasattr(Y, "to_dense") else np.asarray(Y)
    return float(np.linalg.norm(X - Y) / np.linalg.norm(Y))
