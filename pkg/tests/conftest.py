"""Shared, session-scoped simulation and training results (each is expensive)."""

import pytest

from capsule.control import published_fourier
from capsule.model import NOMINAL, State
from capsule.neural import TrainConfig, build_dataset, fit, split_shuffle
from capsule.sim import simulate


@pytest.fixture(scope="session")
def open_loop_traj():
    return simulate(State(), published_fourier(), NOMINAL)


@pytest.fixture(scope="session")
def split_data(open_loop_traj):
    return split_shuffle(build_dataset(open_loop_traj), 0.8, 0)


@pytest.fixture(scope="session")
def default_model(split_data):
    """relu hidden layer, 50 neurons, linear output, default training config."""
    return fit(50, "relu", "linear", split_data, TrainConfig())
