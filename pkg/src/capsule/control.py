"""Control laws: the truncated Fourier open-loop signal and the neural closed-loop wrapper.

Both laws are immutable and callable as ``law(tau, state) -> u``. Both saturate
to ``[u_min, u_max]`` with a hard clamp so that they are compared on equal
terms.

Each law can also :meth:`pack` itself into plain arrays (:class:`ControlPack`)
that the compiled integrator evaluates at every Runge-Kutta stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol

import numpy as np

from .errors import ConfigError
from .model import State
from .neural import HIDDEN_ACTIVATIONS, OUTPUT_ACTIVATIONS, Mlp, predict

U_MIN = -4.0
U_MAX = 4.0

OPEN_LOOP = 0
CLOSED_LOOP = 1


class ControlLaw(Protocol):
    kind: int  # OPEN_LOOP or CLOSED_LOOP
    u_min: float
    u_max: float

    def __call__(self, tau: float, state: State) -> float: ...

    def pack(self) -> "ControlPack": ...


class ControlPack(NamedTuple):
    """Array form of a control law, consumed by :func:`capsule.sim.simulate`."""

    kind: int
    fourier: np.ndarray  # [offset, omega, a_1..a_K, b_1..b_K]
    n_harmonics: int
    w_hidden: np.ndarray  # (n, 3)
    b_hidden: np.ndarray  # (n,)
    w_out: np.ndarray  # (n,)
    b_out: float
    hidden_act: int
    output_act: int
    x_offset: np.ndarray  # (3,)
    x_scale: np.ndarray  # (3,)
    y_offset: float
    y_scale: float
    u_min: float
    u_max: float


_EMPTY_1 = np.zeros(1)
_EMPTY_3 = np.zeros(3)
_ONES_3 = np.ones(3)
_EMPTY_W = np.zeros((1, 3))


@dataclass(frozen=True)
class FourierControl:
    """Truncated Fourier series ``offset + sum a_k cos(k w t) + b_k sin(k w t)``, clamped.

    ``offset`` is ``a0 / 2`` when ``halve_a0`` is true (textbook convention)
    and ``a0`` otherwise.
    """

    a0: float
    omega: float
    a: tuple[float, ...]
    b: tuple[float, ...]
    u_min: float = U_MIN
    u_max: float = U_MAX
    halve_a0: bool = True
    kind: int = field(default=OPEN_LOOP, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if len(self.a) < 1 or len(self.a) != len(self.b):
            raise ConfigError("need K >= 1 harmonics with len(a) == len(b)")
        if not self.omega > 0:
            raise ConfigError(f"omega must be > 0, got {self.omega!r}")
        if not self.u_min < self.u_max:
            raise ConfigError(f"u_min must be < u_max, got ({self.u_min}, {self.u_max})")

    @property
    def n_harmonics(self) -> int:
        return len(self.a)

    @property
    def offset(self) -> float:
        return 0.5 * self.a0 if self.halve_a0 else self.a0

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def raw(self, tau: float) -> float:
        """Unclamped signal value."""
        total = self.offset
        for k, (ak, bk) in enumerate(zip(self.a, self.b), start=1):
            total += ak * math.cos(k * self.omega * tau) + bk * math.sin(k * self.omega * tau)
        return total

    def __call__(self, tau: float, state: State | None = None) -> float:
        return fourier_eval(self, tau)

    def pack(self) -> ControlPack:
        coeffs = np.array([self.offset, self.omega, *self.a, *self.b], dtype=np.float64)
        return ControlPack(
            OPEN_LOOP, coeffs, self.n_harmonics,
            _EMPTY_W, _EMPTY_1, _EMPTY_1, 0.0, 0, 0,
            _EMPTY_3, _ONES_3, 0.0, 1.0,
            float(self.u_min), float(self.u_max),
        )


def fourier_eval(fc: FourierControl, tau: float) -> float:
    return min(max(fc.raw(tau), fc.u_min), fc.u_max)


def clamp_fraction(fc: FourierControl, samples: int = 100_000) -> float:
    """Fraction of one period during which the clamp is active."""
    tau = np.linspace(0.0, fc.period, samples, endpoint=False)
    k = np.arange(1, fc.n_harmonics + 1)[:, None]
    raw = fc.offset + (
        np.asarray(fc.a)[:, None] * np.cos(k * fc.omega * tau)
        + np.asarray(fc.b)[:, None] * np.sin(k * fc.omega * tau)
    ).sum(axis=0)
    return float(np.mean((raw < fc.u_min) | (raw > fc.u_max)))


def zero_control() -> FourierControl:
    """``u == 0``; useful as a baseline."""
    return FourierControl(0.0, 1.0, (0.0,), (0.0,))


# Published five-harmonic open-loop optimum for gamma=10, rho=2.5, nu=1, mu=0.3.
PUBLISHED_A0 = 1.62506
PUBLISHED_OMEGA = 1.64722
PUBLISHED_A = (-3.43222, -1.95285, -0.68182, 0.38493, 0.17389)
PUBLISHED_B = (-0.41690, 0.12411, -0.10468, 0.13722, 0.27902)


def published_fourier(halve_a0: bool = False) -> FourierControl:
    """The published coefficient set.

    With ``halve_a0=False`` (the default) the constant term is ``a0`` itself;
    the signal then spans [-4.000004, 4.000004], i.e. it rides both saturation
    limits as an optimum under a [-4, 4] bound should. With the ``a0 / 2``
    convention the signal dips to -4.81 and the clamp is active over ~12 % of
    each period.
    """
    return FourierControl(PUBLISHED_A0, PUBLISHED_OMEGA, PUBLISHED_A, PUBLISHED_B, halve_a0=halve_a0)


@dataclass(frozen=True)
class NeuralControl:
    """Closed-loop law ``u = clamp(net(theta, theta', z'))``; ignores time and ``z``."""

    net: Mlp
    u_min: float = U_MIN
    u_max: float = U_MAX
    kind: int = field(default=CLOSED_LOOP, init=False, repr=False)

    def __post_init__(self):
        if not self.u_min < self.u_max:
            raise ConfigError(f"u_min must be < u_max, got ({self.u_min}, {self.u_max})")

    def __call__(self, tau: float, state: State) -> float:
        return neural_control(self.net, state, self.u_min, self.u_max)

    def pack(self) -> ControlPack:
        net = self.net
        _require_scalers(net)
        return ControlPack(
            CLOSED_LOOP, _EMPTY_1, 0,
            np.ascontiguousarray(net.w_hidden, dtype=np.float64),
            np.ascontiguousarray(net.b_hidden, dtype=np.float64),
            np.ascontiguousarray(net.w_out, dtype=np.float64),
            float(net.b_out),
            HIDDEN_ACTIVATIONS.index(net.hidden_act),
            OUTPUT_ACTIVATIONS.index(net.output_act),
            np.ascontiguousarray(net.input_scaler.offset, dtype=np.float64),
            np.ascontiguousarray(net.input_scaler.scale, dtype=np.float64),
            float(net.target_scaler.offset[0]),
            float(net.target_scaler.scale[0]),
            float(self.u_min), float(self.u_max),
        )


def _require_scalers(net: Mlp) -> None:
    if net.input_scaler is None or net.target_scaler is None:
        raise ConfigError("network scalers are not populated; train or load the model first")


def neural_control(net: Mlp, s: State, u_min: float = U_MIN, u_max: float = U_MAX) -> float:
    """Evaluate the network on ``(theta, theta', z')`` and clamp."""
    _require_scalers(net)
    x = np.array([[s.theta, s.theta_dot, s.z_dot]])
    u = float(predict(net, x)[0])
    return min(max(u, u_min), u_max)
