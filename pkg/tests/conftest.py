import numpy as np
import pytest

from poisson_chaos.point_process import DiscreteControl


@pytest.fixture
def unit_jump():
    return DiscreteControl(values=(1.0,), weights=(1.0,))


@pytest.fixture
def symmetric_jump():
    return DiscreteControl(values=(1.0, -1.0), weights=(0.5, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(915235)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte Carlo runs")
