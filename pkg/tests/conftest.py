import math

import numpy as np
import pytest

from holodyn.reservoir import phi_circle, scenario_dark_state, scenario_static, scenario_tripod, theta_excursion


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: long gamma*T integrations')


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope='session')
def dark_state():
    return scenario_dark_state(math.pi / 4)


@pytest.fixture(scope='session')
def dark_state_pi6():
    return scenario_dark_state(math.pi / 6)


@pytest.fixture(scope='session')
def static():
    return scenario_static([np.diag([0.0, 1.0])])


@pytest.fixture(scope='session')
def tripod_circle():
    return scenario_tripod(phi_circle(math.pi / 4))


@pytest.fixture(scope='session')
def tripod_excursion():
    return scenario_tripod(theta_excursion(math.pi / 4))
