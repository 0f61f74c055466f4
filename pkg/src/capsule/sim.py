"""Event-driven integration of the hybrid stick/slip capsule model.

Within a contact mode the state is advanced with classical fixed-step RK4 on
the grid ``tau_k = k * dt``. Transitions:

* slip -> ?: a sign change of ``z'`` across a step is located by bisection on
  the step length (to ``event_tol``); ``z'`` is then set to exactly 0 and
  :func:`capsule.model.mode_decision` picks stick or reversed slip. The rest of
  the interrupted step is integrated in the new mode so the grid is kept.
* stick -> slip: checked at step boundaries; the capsule breaks loose at the
  first boundary with ``|r_z| >= mu_eff * r_y``.

After any transition further transitions are ignored for one ``dt``, which
keeps the automaton from chattering.

The hot loop is compiled with numba; controllers enter as
:class:`capsule.control.ControlPack` arrays.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from ._rng import counter_uniform
from .errors import ConfigError, DegeneracyError, DivergenceError, LiftOffError
from .model import (
    STICK_VEL_TOL,
    CapsuleParams,
    ContactMode,
    State,
    contact_force,
    horizontal_load,
    pendulum_rhs,
    slip_solve,
)

CSV_COLUMNS = ("tau", "theta", "theta_dot", "z", "z_dot", "u", "mode", "r_y", "r_z", "f_z")

_OK, _LIFTOFF, _DIVERGED, _CHATTER, _DEGENERATE = 0, 1, 2, 3, 4

#: What to do when the contact force r_y drops to zero or below.
#: ``raise``: LiftOffError. ``bilateral``: keep integrating with the friction law
#: as written (friction ~ mu * r_y even for r_y < 0). ``unilateral``: no friction
#: while r_y < 0; vertical flight is still not modelled.
CONTACT_POLICIES = ("raise", "bilateral", "unilateral")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    tau_end: float = 100.0
    event_tol: float = 1e-10
    record_stride: float = 0.01
    stick_vel_tol: float = STICK_VEL_TOL
    max_events: int = 100_000
    contact: str = "bilateral"

    def __post_init__(self):
        if self.contact not in CONTACT_POLICIES:
            raise ConfigError(f"contact must be one of {CONTACT_POLICIES}, got {self.contact!r}")
        if not self.dt > 0 or not self.tau_end > 0:
            raise ConfigError("dt and tau_end must be > 0")
        if not 0 < self.event_tol < self.dt:
            raise ConfigError("event_tol must lie in (0, dt)")
        if not self.record_stride >= self.dt:
            raise ConfigError("record_stride must be >= dt")
        if not _is_multiple(self.record_stride, self.dt):
            raise ConfigError("record_stride must be an integer multiple of dt")
        if not _is_multiple(self.tau_end, self.record_stride):
            raise ConfigError("tau_end must be an integer multiple of record_stride")

    @property
    def n_steps(self) -> int:
        return int(round(self.tau_end / self.dt))

    @property
    def stride_steps(self) -> int:
        return int(round(self.record_stride / self.dt))


def _is_multiple(a: float, b: float) -> bool:
    q = a / b
    return abs(q - round(q)) <= 1e-9 * max(1.0, abs(q))


@dataclass
class Trajectory:
    """Samples at every ``record_stride``; one array per column."""

    tau: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    z: np.ndarray
    z_dot: np.ndarray
    u: np.ndarray
    mode: np.ndarray  # int: 0 stick, +1 / -1 slip direction
    r_y: np.ndarray
    r_z: np.ndarray
    f_z: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_array(cls, rec: np.ndarray, meta: dict | None = None) -> "Trajectory":
        cols = {name: rec[:, i].copy() for i, name in enumerate(CSV_COLUMNS)}
        cols["mode"] = cols["mode"].astype(np.int8)
        return cls(**cols, meta=dict(meta or {}))

    def __len__(self) -> int:
        return len(self.tau)

    def state(self, i: int) -> State:
        return State(float(self.tau[i]), float(self.theta[i]), float(self.theta_dot[i]),
                     float(self.z[i]), float(self.z_dot[i]))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for i in range(len(self)):
                row = [repr(float(getattr(self, c)[i])) for c in CSV_COLUMNS]
                row[6] = ContactMode(int(self.mode[i])).label
                w.writerow(row)

    @classmethod
    def from_csv(cls, path: str | Path) -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != CSV_COLUMNS:
                raise ConfigError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
            rows = []
            for r in reader:
                r[6] = str(int(ContactMode.from_label(r[6])))
                rows.append([float(v) for v in r])
        if not rows:
            raise ConfigError(f"{path}: no samples")
        return cls.from_array(np.asarray(rows))


def distance(t: Trajectory) -> float:
    """Net displacement ``z(tau_end) - z(0)``."""
    if len(t) == 0:
        raise ConfigError("empty trajectory")
    return float(t.z[-1] - t.z[0])


# -- compiled kernel ------------------------------------------------------------


@njit(cache=True)
def _act(kind, x):
    if kind == 0:
        return x if x > 0.0 else 0.0
    if kind == 1:
        if x >= 0.0:
            return 1.0 / (1.0 + math.exp(-x))
        e = math.exp(x)
        return e / (1.0 + e)
    return math.tanh(x)


@njit(cache=True)
def _control(tau, theta, theta_dot, z_dot, c):
    if c.kind == 0:
        coef = c.fourier
        k_max = c.n_harmonics
        w = coef[1] * tau
        u = coef[0]
        for k in range(1, k_max + 1):
            u += coef[1 + k] * math.cos(k * w) + coef[1 + k_max + k] * math.sin(k * w)
    else:
        x0 = (theta - c.x_offset[0]) / c.x_scale[0]
        x1 = (theta_dot - c.x_offset[1]) / c.x_scale[1]
        x2 = (z_dot - c.x_offset[2]) / c.x_scale[2]
        acc = c.b_out
        for j in range(c.w_out.shape[0]):
            pre = c.w_hidden[j, 0] * x0 + c.w_hidden[j, 1] * x1 + c.w_hidden[j, 2] * x2 + c.b_hidden[j]
            acc += c.w_out[j] * _act(c.hidden_act, pre)
        if c.output_act == 1:
            acc = _act(1, acc)
        u = acc * c.y_scale + c.y_offset
    if u < c.u_min:
        return c.u_min
    if u > c.u_max:
        return c.u_max
    return u


@njit(cache=True)
def _mu_eff(z, fr):
    # fr = (has_field, mu, delta, seed, segment_len)
    if fr[0] == 0.0 or fr[2] == 0.0:
        return fr[1]
    idx = np.int64(math.floor(z / fr[4]))
    return fr[1] + fr[2] * (2.0 * counter_uniform(np.uint64(fr[3]), idx) - 1.0)


@njit(cache=True)
def _slip(th, thd, u, mode, mu, p):
    tdd, zdd, det = slip_solve(th, thd, u, float(mode), mu, p[0], p[1], p[2])
    if p[3] == 2.0 and contact_force(th, thd, tdd, p[0]) < 0.0:
        # unilateral contact: no normal force, hence no friction
        tdd, zdd, det = slip_solve(th, thd, u, float(mode), 0.0, p[0], p[1], p[2])
    return tdd, zdd, det


@njit(cache=True)
def _deriv(tau, th, thd, z, zd, mode, p, c, fr):
    u = _control(tau, th, thd, zd, c)
    if mode == 0:
        return thd, pendulum_rhs(th, thd, u, p[1], p[2]), 0.0, 0.0
    tdd, zdd, _ = _slip(th, thd, u, mode, _mu_eff(z, fr), p)
    return thd, tdd, zd, zdd


@njit(cache=True)
def _rk4(t, th, thd, z, zd, h, mode, p, c, fr):
    k1 = _deriv(t, th, thd, z, zd, mode, p, c, fr)
    h2 = 0.5 * h
    k2 = _deriv(t + h2, th + h2 * k1[0], thd + h2 * k1[1], z + h2 * k1[2], zd + h2 * k1[3], mode, p, c, fr)
    k3 = _deriv(t + h2, th + h2 * k2[0], thd + h2 * k2[1], z + h2 * k2[2], zd + h2 * k2[3], mode, p, c, fr)
    k4 = _deriv(t + h, th + h * k3[0], thd + h * k3[1], z + h * k3[2], zd + h * k3[3], mode, p, c, fr)
    h6 = h / 6.0
    return (
        th + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        thd + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        z + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        zd + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    )


@njit(cache=True)
def _kinetics(t, th, thd, z, zd, mode, p, c, fr):
    """(u, r_y, r_z, f_z, det) at a single point in the given mode."""
    u = _control(t, th, thd, zd, c)
    mu = _mu_eff(z, fr)
    if mode == 0:
        tdd = pendulum_rhs(th, thd, u, p[1], p[2])
        det = 1.0
    else:
        tdd, _, det = _slip(th, thd, u, mode, mu, p)
    ry = contact_force(th, thd, tdd, p[0])
    rz = horizontal_load(th, thd, tdd)
    if mode == 0:
        fz = rz
    elif p[3] == 2.0 and ry < 0.0:
        fz = 0.0
    else:
        fz = mu * mode * ry
    return u, ry, rz, fz, det


@njit(cache=True)
def _decide(t, th, thd, z, zd, p, c, fr, vtol):
    if abs(zd) > vtol:
        return 1 if zd > 0 else -1
    _, ry, rz, _, _ = _kinetics(t, th, thd, z, 0.0, 0, p, c, fr)
    if abs(rz) < _mu_eff(z, fr) * ry:
        return 0
    return 1 if rz >= 0 else -1


@njit(cache=True)
def _simulate(y0, t_start, n_steps, stride, dt, event_tol, vtol, max_events, p, c, fr):
    n_rec = n_steps // stride + 1
    rec = np.empty((n_rec, 10))
    th, thd, z, zd = y0[0], y0[1], y0[2], y0[3]
    t = t_start
    mode = _decide(t, th, thd, z, zd, p, c, fr, vtol)
    if mode == 0:
        zd = 0.0
    guard_until = -np.inf
    events = 0
    k = 0
    i_rec = 0
    status = 0
    while True:
        # bookkeeping at a grid boundary tau_k (or the start)
        u, ry, rz, fz, det = _kinetics(t, th, thd, z, zd, mode, p, c, fr)
        if not (math.isfinite(th) and math.isfinite(thd) and math.isfinite(z) and math.isfinite(zd)):
            status = 2
            break
        if not det > 0.0:
            status = 4
            break
        if p[3] == 0.0 and not ry > 0.0:
            status = 1
            break
        if mode == 0 and t >= guard_until and not abs(rz) < _mu_eff(z, fr) * ry:
            mode = 1 if rz >= 0 else -1
            events += 1
            guard_until = t + dt
            u, ry, rz, fz, det = _kinetics(t, th, thd, z, zd, mode, p, c, fr)
        if k % stride == 0:
            rec[i_rec, 0] = t
            rec[i_rec, 1] = th
            rec[i_rec, 2] = thd
            rec[i_rec, 3] = z
            rec[i_rec, 4] = zd
            rec[i_rec, 5] = u
            rec[i_rec, 6] = mode
            rec[i_rec, 7] = ry
            rec[i_rec, 8] = rz
            rec[i_rec, 9] = fz
            i_rec += 1
        if k == n_steps:
            break
        t_next = t_start + (k + 1) * dt
        while True:
            h = t_next - t
            nth, nthd, nz, nzd = _rk4(t, th, thd, z, zd, h, mode, p, c, fr)
            if mode != 0 and t >= guard_until and mode * nzd < 0.0:
                lo = 0.0
                hi = h
                while hi - lo > event_tol:
                    mid = 0.5 * (lo + hi)
                    if mode * _rk4(t, th, thd, z, zd, mid, mode, p, c, fr)[3] < 0.0:
                        hi = mid
                    else:
                        lo = mid
                th, thd, z, _ = _rk4(t, th, thd, z, zd, hi, mode, p, c, fr)
                zd = 0.0
                t = t + hi
                mode = _decide(t, th, thd, z, zd, p, c, fr, vtol)
                events += 1
                guard_until = t + dt
                if events > max_events:
                    status = 3
                    break
                continue
            th, thd, z, zd = nth, nthd, nz, nzd
            t = t_next
            break
        if status != 0:
            break
        k += 1
    return rec[:i_rec], status, t, events


@njit(cache=True)
def _integrate_fixed(y0, t0, n_steps, dt, mode, p, c, fr):
    th, thd, z, zd = y0[0], y0[1], y0[2], y0[3]
    for k in range(n_steps):
        th, thd, z, zd = _rk4(t0 + k * dt, th, thd, z, zd, dt, mode, p, c, fr)
    return np.array([th, thd, z, zd])


# -- Python entry points ----------------------------------------------------------


def _param_tuple(p: CapsuleParams, cfg: "SimConfig") -> tuple[float, float, float, float]:
    return (float(p.gamma), float(p.rho), float(p.nu), float(CONTACT_POLICIES.index(cfg.contact)))


def _field_tuple(p: CapsuleParams, field_) -> tuple[float, float, float, float, float]:
    if field_ is None:
        return (0.0, float(p.mu), 0.0, 0.0, 1.0)
    return (1.0, float(field_.mu), float(field_.delta), float(field_.seed), float(field_.segment_len))


def simulate(initial: State, controller, p: CapsuleParams, cfg: SimConfig = SimConfig(),
             field=None, controller_id: str | None = None) -> Trajectory:
    """Integrate from ``initial`` over ``[initial.tau, initial.tau + cfg.tau_end]``.

    ``controller`` is any object with a ``pack()`` method (see
    :mod:`capsule.control`). With a friction ``field`` (anything exposing
    ``mu``, ``delta``, ``seed`` and ``segment_len``, normally a
    :class:`capsule.robustness.FrictionField`) the friction coefficient is
    looked up at the current position, otherwise ``p.mu`` is used.
    """
    pack = controller.pack()
    y0 = np.array([initial.theta, initial.theta_dot, initial.z, initial.z_dot], dtype=np.float64)
    if field is not None and field.seed >= 2**53:
        raise ConfigError("friction field seed must be < 2**53")
    rec, status, t_fail, events = _simulate(
        y0, float(initial.tau), cfg.n_steps, cfg.stride_steps, cfg.dt, cfg.event_tol,
        cfg.stick_vel_tol, cfg.max_events, _param_tuple(p, cfg), pack, _field_tuple(p, field),
    )
    if status == _LIFTOFF:
        raise LiftOffError(f"contact force r_y <= 0 at tau={t_fail:.6g}")
    if status == _DIVERGED:
        raise DivergenceError(f"non-finite state at tau={t_fail:.6g}")
    if status == _CHATTER:
        raise DivergenceError(f"more than {cfg.max_events} mode switches by tau={t_fail:.6g}")
    if status == _DEGENERATE:
        raise DegeneracyError(f"slip matrix determinant <= 0 at tau={t_fail:.6g}")
    meta = {
        "params": asdict(p),
        "config": asdict(cfg),
        "controller": controller_id or type(controller).__name__,
        "field_seed": None if field is None else int(field.seed),
        "field_delta": None if field is None else float(field.delta),
        "events": int(events),
    }
    return Trajectory.from_array(rec, meta)


def integrate_fixed_mode(initial: State, controller, mode: ContactMode, p: CapsuleParams,
                         dt: float, tau_end: float, field=None, contact: str = "bilateral") -> np.ndarray:
    """Plain RK4 in one contact mode, no event handling; returns the final ``(theta, theta', z, z')``."""
    n = int(round(tau_end / dt))
    cfg = SimConfig(dt=dt, tau_end=tau_end, event_tol=dt / 2, record_stride=tau_end, contact=contact)
    if not _is_multiple(tau_end, dt):
        raise ConfigError("tau_end must be an integer multiple of dt")
    y0 = np.array([initial.theta, initial.theta_dot, initial.z, initial.z_dot], dtype=np.float64)
    return _integrate_fixed(y0, float(initial.tau), n, dt, int(mode), _param_tuple(p, cfg),
                            controller.pack(), _field_tuple(p, field))
