"""Mini-batch Adam training with early stopping, and the activation/size grid."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..errors import CapsuleError, ConfigError, TrainingError
from .data import Dataset
from .mlp import (
    HIDDEN_ACTIVATIONS,
    N_INPUTS,
    OUTPUT_ACTIVATIONS,
    AffineScaler,
    Mlp,
    backward,
    mse,
    predict,
    r2,
)
from .optim import AdamConfig, adam_step

U_RANGE = (-4.0, 4.0)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 1000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 32
    patience: int = 50
    min_delta: float = 1e-6
    seed: int = 0
    standardize_inputs: bool = True
    sigmoid_margin: float = 0.05
    restore_best: bool = True

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr <= 0 or self.eps <= 0:
            raise ConfigError("lr and eps must be > 0")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")

    @property
    def adam(self) -> AdamConfig:
        return AdamConfig(self.lr, self.beta1, self.beta2, self.eps)


@dataclass
class TrainReport:
    train_mse: list[float]
    test_mse: list[float]
    final_test_mse: float
    final_test_r2: float
    epochs_run: int
    best_epoch: int
    stopped_early: bool
    wall_time: float = field(default=0.0, compare=False)

    @property
    def final_test_mse_unit(self) -> float:
        """Test MSE with the target rescaled from [u_min, u_max] to [0, 1]."""
        return self.final_test_mse / (U_RANGE[1] - U_RANGE[0]) ** 2

    def to_dict(self, with_timing: bool = False) -> dict:
        d = asdict(self)
        d["final_test_mse_unit"] = self.final_test_mse_unit
        if not with_timing:
            del d["wall_time"]
        return d


def _target_scaler(output_act: str, margin: float) -> AffineScaler:
    if output_act == "linear":
        return AffineScaler.identity(1)
    return AffineScaler.onto_interval(U_RANGE[0], U_RANGE[1], margin)


def _r2_or_nan(pred, target) -> float:
    # R² is undefined for a constant test target; report NaN rather than fail the run
    return r2(pred, target) if np.ptp(target) > 0 else float("nan")


def train(net: Mlp, data: Dataset, cfg: TrainConfig = TrainConfig()) -> tuple[Mlp, TrainReport]:
    """Train ``net`` (its current weights are the starting point) on ``data``.

    Scalers are fitted on the training split only. After each epoch the test
    MSE (in control units) is checked; training stops once it has not improved
    by more than ``min_delta`` for ``patience`` epochs. With ``restore_best``
    the weights of the best epoch are returned.
    """
    if not data.is_split:
        raise ConfigError("dataset has no train/test split; call split_shuffle first")
    t0 = time.perf_counter()
    X_tr, y_tr = data.train()
    X_te, y_te = data.test()

    net = net.copy()
    net.input_scaler = AffineScaler.standardize(X_tr) if cfg.standardize_inputs else AffineScaler.identity(N_INPUTS)
    net.target_scaler = _target_scaler(net.output_act, cfg.sigmoid_margin)
    Xs = net.input_scaler.transform(X_tr)
    ys = net.target_scaler.transform(y_tr[:, None])[:, 0]

    rng = np.random.default_rng(cfg.seed)
    adam = cfg.adam
    m = np.zeros_like(net.params)
    v = np.zeros_like(net.params)
    step = 0
    n = len(ys)
    history_tr: list[float] = []
    history_te: list[float] = []
    best, best_params, best_epoch, wait = np.inf, net.params.copy(), 0, 0
    stopped_early = False

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            step += 1
            net.params, m, v = adam_step(net.params, backward(net, Xs[idx], ys[idx]), m, v, step, adam)
        tr = mse(predict(net, X_tr), y_tr)
        te = mse(predict(net, X_te), y_te)
        if not (np.isfinite(tr) and np.isfinite(te)):
            raise TrainingError("non-finite loss", epoch)
        history_tr.append(tr)
        history_te.append(te)
        if te < best - cfg.min_delta:
            best, best_params, best_epoch, wait = te, net.params.copy(), epoch, 0
        else:
            wait += 1
            if wait >= cfg.patience:
                stopped_early = True
                break

    if cfg.restore_best:
        net.params = best_params
    pred = predict(net, X_te)
    report = TrainReport(
        history_tr, history_te, mse(pred, y_te), _r2_or_nan(pred, y_te),
        len(history_tr), best_epoch, stopped_early, time.perf_counter() - t0,
    )
    net.meta = {"train_config": asdict(cfg), "split_seed": data.seed, "test_r2": report.final_test_r2,
                "test_mse": report.final_test_mse}
    return net, report


def fit(n_hidden: int, hidden_act: str, output_act: str, data: Dataset,
        cfg: TrainConfig = TrainConfig()) -> tuple[Mlp, TrainReport]:
    """Seeded initialization followed by :func:`train`."""
    return train(Mlp.init(n_hidden, hidden_act, output_act, cfg.seed), data, cfg)


# -- grid -----------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    hidden_acts: tuple[str, ...] = HIDDEN_ACTIVATIONS
    output_acts: tuple[str, ...] = OUTPUT_ACTIVATIONS
    neurons: tuple[int, ...] = (3, 10, 17, 30, 50)
    repeats: int = 3

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not set(self.hidden_acts) <= set(HIDDEN_ACTIVATIONS) or not set(self.output_acts) <= set(OUTPUT_ACTIVATIONS):
            raise ConfigError("unknown activation in grid spec")

    def cells(self) -> list[tuple[str, str, int]]:
        """``(hidden_act, output_act, neurons)`` in table order: hidden, then size, then output."""
        return [(h, o, n) for h in self.hidden_acts for n in self.neurons for o in self.output_acts]


# The nine configurations that tie for the top score in the reference grid.
TOP_TIER = (
    ("relu", "linear", 50),
    ("relu", "sigmoid", 50),
    ("sigmoid", "sigmoid", 17),
    ("sigmoid", "sigmoid", 30),
    ("sigmoid", "sigmoid", 50),
    ("tanh", "sigmoid", 10),
    ("tanh", "sigmoid", 17),
    ("tanh", "sigmoid", 30),
    ("tanh", "sigmoid", 50),
)


@dataclass
class GridRun:
    hidden_act: str
    output_act: str
    neurons: int
    repeat: int
    seed: int
    r2: float = float("nan")
    mse: float = float("nan")
    error: str | None = None
    net: Mlp | None = field(default=None, repr=False, compare=False)


@dataclass
class GridCell:
    hidden_act: str
    output_act: str
    neurons: int
    runs: list[GridRun]
    best: GridRun | None

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.hidden_act, self.output_act, self.neurons)


def _run_cell_repeat(args) -> GridRun:
    (h, o, n, rep, seed), data, cfg = args
    run = GridRun(h, o, n, rep, seed)
    try:
        net, report = fit(n, h, o, data, replace(cfg, seed=seed))
    except (CapsuleError, FloatingPointError, ValueError) as exc:
        run.error = str(exc)
        return run
    run.r2, run.mse, run.net = report.final_test_r2, report.final_test_mse, net
    return run


def _pick_best(runs: list[GridRun]) -> GridRun | None:
    ok = [r for r in runs if r.error is None and np.isfinite(r.r2)]
    if not ok:
        return None
    return min(ok, key=lambda r: (-r.r2, r.mse, r.repeat))


def grid_run(spec: GridSpec, data: Dataset, cfg: TrainConfig = TrainConfig(), jobs: int = 1,
             cells: list[tuple[str, str, int]] | None = None) -> list[GridCell]:
    """Train every cell ``spec.repeats`` times and keep the best repeat per cell.

    Repeat ``r`` uses seed ``cfg.seed + r``. Failed trainings are recorded on
    the run, never raised. Output follows ``spec.cells()`` order regardless of
    ``jobs``.
    """
    cells = spec.cells() if cells is None else list(cells)
    tasks = [((h, o, n, r, cfg.seed + r), data, cfg) for (h, o, n) in cells for r in range(spec.repeats)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_cell_repeat, tasks))
    else:
        runs = [_run_cell_repeat(t) for t in tasks]
    out = []
    for i, (h, o, n) in enumerate(cells):
        cell_runs = runs[i * spec.repeats : (i + 1) * spec.repeats]
        out.append(GridCell(h, o, n, cell_runs, _pick_best(cell_runs)))
    return out


def top_cells(cells: list[GridCell], k: int = 9) -> list[GridCell]:
    """The ``k`` cells with the highest selected R² (ties broken by MSE, then table order)."""
    ranked = sorted(
        (c for c in cells if c.best is not None),
        key=lambda c: (-c.best.r2, c.best.mse),
    )
    return ranked[:k]
