import numpy as np
import pytest

from heavyrmt.ensembles import EnsembleSpec


@pytest.fixture
def er1():
    return EnsembleSpec.erdos_renyi(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
