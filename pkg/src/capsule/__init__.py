"""Pendulum-driven capsule: hybrid stick-slip simulation, neural controller distillation
and a friction robustness study."""

from .control import FourierControl, NeuralControl, published_fourier, zero_control
from .errors import (
    CapsuleError,
    ConfigError,
    ContractError,
    DegeneracyError,
    DivergenceError,
    LiftOffError,
    TrainingError,
)
from .model import NOMINAL, CapsuleParams, ContactMode, State
from .robustness import FrictionField, SweepRow, run_trial, sweep
from .sim import SimConfig, Trajectory, distance, simulate

__version__ = "0.1.0"

__all__ = [
    "FourierControl", "NeuralControl", "published_fourier", "zero_control",
    "CapsuleError", "ConfigError", "ContractError", "DegeneracyError", "DivergenceError",
    "LiftOffError", "TrainingError",
    "NOMINAL", "CapsuleParams", "ContactMode", "State",
    "FrictionField", "SweepRow", "run_trial", "sweep",
    "SimConfig", "Trajectory", "distance", "simulate",
]
