"""Single-hidden-layer regression network with 3 inputs and 1 output.

All weights and biases live in one flat ``params`` vector so that the optimizer
can update them in one shot; :class:`Mlp` exposes views into it. Layout
(row-major)::

    params = [ W_h (n x 3) | b_h (n) | w_out (n) | b_out (1) ]

Gradients returned by :func:`backward` use the same layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError

N_INPUTS = 3
HIDDEN_ACTIVATIONS = ("relu", "sigmoid", "tanh")
OUTPUT_ACTIVATIONS = ("linear", "sigmoid")
FORMAT_VERSION = 1


def _sigmoid(x):
    # logaddexp keeps large |x| from overflowing
    return np.exp(-np.logaddexp(0.0, -np.asarray(x, dtype=np.float64)))


def activation(kind: str, x):
    x = np.asarray(x, dtype=np.float64)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "sigmoid":
        return _sigmoid(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "linear":
        return x.copy()
    raise ConfigError(f"unknown activation {kind!r}")


def activation_deriv(kind: str, x):
    """Derivative of :func:`activation`. ReLU uses 0 at the kink."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "relu":
        return (x > 0).astype(np.float64)
    if kind == "sigmoid":
        s = _sigmoid(x)
        return s * (1.0 - s)
    if kind == "tanh":
        return 1.0 - np.tanh(x) ** 2
    if kind == "linear":
        return np.ones_like(x)
    raise ConfigError(f"unknown activation {kind!r}")


@dataclass(frozen=True)
class AffineScaler:
    """Feature-wise map ``x -> (x - offset) / scale``."""

    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "offset", np.atleast_1d(np.asarray(self.offset, dtype=np.float64)))
        object.__setattr__(self, "scale", np.atleast_1d(np.asarray(self.scale, dtype=np.float64)))
        if self.offset.shape != self.scale.shape:
            raise ConfigError("scaler offset and scale shapes differ")
        if not np.all(self.scale > 0):
            raise ConfigError("scaler scale components must be > 0")

    @classmethod
    def identity(cls, n: int) -> "AffineScaler":
        return cls(np.zeros(n), np.ones(n))

    @classmethod
    def standardize(cls, X: np.ndarray) -> "AffineScaler":
        """z-score per column; constant columns keep unit scale."""
        X = np.asarray(X, dtype=np.float64)
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    @classmethod
    def onto_interval(cls, lo: float, hi: float, margin: float) -> "AffineScaler":
        """Map ``[lo, hi]`` onto ``[margin, 1 - margin]``."""
        if not 0 <= margin < 0.5:
            raise ConfigError(f"margin must lie in [0, 0.5), got {margin!r}")
        scale = (hi - lo) / (1.0 - 2.0 * margin)
        return cls(np.array([lo - margin * scale]), np.array([scale]))

    def transform(self, x):
        return (np.asarray(x, dtype=np.float64) - self.offset) / self.scale

    def inverse(self, x):
        return np.asarray(x, dtype=np.float64) * self.scale + self.offset

    def to_dict(self) -> dict:
        return {"offset": self.offset.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "AffineScaler":
        return cls(np.array(d["offset"]), np.array(d["scale"]))


@dataclass
class Mlp:
    n_hidden: int
    hidden_act: str
    output_act: str
    params: np.ndarray
    input_scaler: AffineScaler | None = None
    target_scaler: AffineScaler | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hidden_act not in HIDDEN_ACTIVATIONS:
            raise ConfigError(f"hidden activation must be one of {HIDDEN_ACTIVATIONS}, got {self.hidden_act!r}")
        if self.output_act not in OUTPUT_ACTIVATIONS:
            raise ConfigError(f"output activation must be one of {OUTPUT_ACTIVATIONS}, got {self.output_act!r}")
        if self.n_hidden < 1:
            raise ConfigError("n_hidden must be >= 1")
        self.params = np.ascontiguousarray(self.params, dtype=np.float64)
        if self.params.shape != (param_count(self.n_hidden),):
            raise ConfigError(
                f"expected {param_count(self.n_hidden)} parameters for n={self.n_hidden}, got {self.params.shape}"
            )

    @classmethod
    def init(cls, n_hidden: int, hidden_act: str, output_act: str, seed: int) -> "Mlp":
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        params = np.zeros(param_count(n_hidden))
        lim_h = np.sqrt(6.0 / (N_INPUTS + n_hidden))
        lim_o = np.sqrt(6.0 / (n_hidden + 1))
        n3 = n_hidden * N_INPUTS
        params[:n3] = rng.uniform(-lim_h, lim_h, n3)
        params[n3 + n_hidden : n3 + 2 * n_hidden] = rng.uniform(-lim_o, lim_o, n_hidden)
        return cls(n_hidden, hidden_act, output_act, params)

    # views into params
    @property
    def w_hidden(self) -> np.ndarray:
        return self.params[: self.n_hidden * N_INPUTS].reshape(self.n_hidden, N_INPUTS)

    @property
    def b_hidden(self) -> np.ndarray:
        n3 = self.n_hidden * N_INPUTS
        return self.params[n3 : n3 + self.n_hidden]

    @property
    def w_out(self) -> np.ndarray:
        n3 = self.n_hidden * N_INPUTS
        return self.params[n3 + self.n_hidden : n3 + 2 * self.n_hidden]

    @property
    def b_out(self) -> float:
        return float(self.params[-1])

    def copy(self) -> "Mlp":
        return Mlp(
            self.n_hidden, self.hidden_act, self.output_act, self.params.copy(),
            self.input_scaler, self.target_scaler, dict(self.meta),
        )

    # persistence
    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "architecture": {"inputs": ["theta", "theta_dot", "z_dot"], "n_hidden": self.n_hidden, "outputs": ["u"]},
            "hidden_activation": self.hidden_act,
            "output_activation": self.output_act,
            "input_scaler": None if self.input_scaler is None else self.input_scaler.to_dict(),
            "target_scaler": None if self.target_scaler is None else self.target_scaler.to_dict(),
            "weights": {
                "hidden": self.w_hidden.tolist(),
                "hidden_bias": self.b_hidden.tolist(),
                "output": self.w_out.tolist(),
                "output_bias": self.b_out,
            },
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        if d.get("version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported model file version {d.get('version')!r}")
        w = d["weights"]
        n = int(d["architecture"]["n_hidden"])
        params = np.concatenate([
            np.asarray(w["hidden"], dtype=np.float64).reshape(-1),
            np.asarray(w["hidden_bias"], dtype=np.float64),
            np.asarray(w["output"], dtype=np.float64),
            [float(w["output_bias"])],
        ])
        return cls(
            n, d["hidden_activation"], d["output_activation"], params,
            None if d["input_scaler"] is None else AffineScaler.from_dict(d["input_scaler"]),
            None if d["target_scaler"] is None else AffineScaler.from_dict(d["target_scaler"]),
            dict(d.get("meta", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Mlp":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed model file {path}: {exc}") from exc


def param_count(n_hidden: int) -> int:
    return n_hidden * (N_INPUTS + 2) + 1


def forward(net: Mlp, x) -> np.ndarray | float:
    """Network output for already-scaled input(s); ``x`` is ``(3,)`` or ``(N, 3)``."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    a = activation(net.hidden_act, X @ net.w_hidden.T + net.b_hidden)
    out = activation(net.output_act, a @ net.w_out + net.b_out)
    return float(out[0]) if single else out


def predict(net: Mlp, X_raw) -> np.ndarray:
    """Control values for raw ``(theta, theta', z')`` rows (scalers applied)."""
    if net.input_scaler is None or net.target_scaler is None:
        raise ConfigError("network scalers are not populated")
    X = net.input_scaler.transform(np.atleast_2d(X_raw))
    return net.target_scaler.inverse(forward(net, X)[:, None])[:, 0]


def backward(net: Mlp, X, y) -> np.ndarray:
    """Gradient of ``mean((forward(net, X) - y)**2)`` w.r.t. ``net.params``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = net.n_hidden
    z_h = X @ net.w_hidden.T + net.b_hidden
    a = activation(net.hidden_act, z_h)
    z_o = a @ net.w_out + net.b_out
    out = activation(net.output_act, z_o)

    d_out = 2.0 * (out - y) / len(y)
    d_zo = d_out * activation_deriv(net.output_act, z_o)
    d_zh = np.outer(d_zo, net.w_out) * activation_deriv(net.hidden_act, z_h)

    grad = np.empty_like(net.params)
    n3 = n * N_INPUTS
    grad[:n3] = (d_zh.T @ X).reshape(-1)
    grad[n3 : n3 + n] = d_zh.sum(axis=0)
    grad[n3 + n : n3 + 2 * n] = a.T @ d_zo
    grad[-1] = d_zo.sum()
    return grad


def mse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.size < 2:
        raise ValueError("mse needs two equal-length arrays with at least 2 entries")
    return float(np.mean((pred - target) ** 2))


def r2(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape or pred.size < 2:
        raise ValueError("r2 needs two equal-length arrays with at least 2 entries")
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("r2 is undefined for a constant target")
    return 1.0 - float(np.sum((target - pred) ** 2)) / ss_tot
