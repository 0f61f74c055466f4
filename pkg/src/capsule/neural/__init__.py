"""One-hidden-layer regression network, its training loop and the model grid."""

from .data import FEATURES, Dataset, build_dataset, split_shuffle
from .mlp import (
    HIDDEN_ACTIVATIONS,
    OUTPUT_ACTIVATIONS,
    AffineScaler,
    Mlp,
    activation,
    activation_deriv,
    backward,
    forward,
    mse,
    param_count,
    predict,
    r2,
)
from .optim import AdamConfig, AdamState, adam_step
from .training import (
    TOP_TIER,
    GridCell,
    GridRun,
    GridSpec,
    TrainConfig,
    TrainReport,
    fit,
    grid_run,
    top_cells,
    train,
)

__all__ = [
    "FEATURES", "Dataset", "build_dataset", "split_shuffle",
    "HIDDEN_ACTIVATIONS", "OUTPUT_ACTIVATIONS", "AffineScaler", "Mlp", "activation",
    "activation_deriv", "backward", "forward", "mse", "param_count", "predict", "r2",
    "AdamConfig", "AdamState", "adam_step",
    "TOP_TIER", "GridCell", "GridRun", "GridSpec", "TrainConfig", "TrainReport", "fit",
    "grid_run", "top_cells", "train",
]
