import logging

import numpy as np
import pytest

from cmhe.config import EstimatorConfig, RunConfig
from cmhe.kinematics import measurement, tip_position
from cmhe.models import NoiseLevels
from cmhe.motion import propagate


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def estimator_config():
    return EstimatorConfig(horizon=10)


@pytest.fixture
def small_run_config():
    return RunConfig(
        samples=40,
        estimator=EstimatorConfig(horizon=10),
        scenarios=[
            NoiseLevels(sigma_beta=0.022, sigma_gamma=-0.024),
            NoiseLevels(sigma_beta=0.010, sigma_gamma=0.021),
        ],
        horizons=[5, 10],
    )


@pytest.fixture
def euler_window():
    """Factory for windows whose states follow the Euler model exactly."""

    def make(N, dt=0.05, s=1.0, theta0=0.6, phi0=1.0, rates=(0.3, -0.2)):
        inputs = np.tile(np.asarray(rates, dtype=float), (N - 1, 1))
        states = np.empty((N, 5))
        states[0, :3] = tip_position(theta0, phi0, s)
        states[0, 3:] = theta0, phi0
        for k in range(N - 1):
            states[k + 1] = propagate(states[k], inputs[k], dt, s)
        return states, measurement(states[:, 3], states[:, 4]), inputs

    return make


@pytest.fixture
def restore_logging():
    """Drop handlers installed by CLI invocations once the test ends."""
    root = logging.getLogger()
    before = list(root.handlers)
    level = root.level
    yield
    for handler in list(root.handlers):
        if handler not in before:
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)
