"""Dimensionless dynamics of the pendulum capsule drive.

The capsule (mass ``M``) rests on a rough surface and carries a pendulum
(mass ``m``, length ``l``) attached through a torsional spring ``k`` and
damper ``c``. A torque ``u`` drives the pendulum. In dimensionless form:

    [ 1        -cos(th) ] [th'']   [ sin(th) - rho*th - nu*th' + u ]
    [ -cos(th)  gamma+1 ] [z''  ] = [ -th'^2 sin(th) - f_z          ]

    r_y = (gamma + 1) - th'' sin(th) - th'^2 cos(th)     (contact force)
    r_z = th'' cos(th) - th'^2 sin(th)                     (horizontal load)

Friction ``f_z`` follows three-case Coulomb friction:

    slip  (z' != 0):                          f_z = mu * r_y * sgn(z')
    stick break (z' = 0, |r_z| >= mu * r_y):  f_z = mu * r_y * sgn(r_z)
    stick (z' = 0, |r_z| < mu * r_y):         f_z = r_z

During slip ``f_z`` depends on ``th''`` through ``r_y``. Moving that term to the
left-hand side gives the slip-modified system (``s`` = slip direction, ``c`` and
``sn`` = cos and sin of th)::

    [ 1                  -c      ] [th'']   [ sin(th) - rho*th - nu*th' + u                    ]
    [ -c - mu*s*sn     gamma + 1 ] [z''  ] = [ -th'^2 sn - mu*s*(gamma+1) + mu*s*th'^2 c       ]

with determinant ``(gamma + 1) - c**2 - mu*s*c*sn >= gamma - mu/2``.

The scalar kernels are compiled with numba so that the integrator in
:mod:`capsule.sim` can call them without Python overhead; the public
functions wrap them into :class:`Kinetics` records and raise on lift-off.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from numba import njit

from .errors import ConfigError, ContractError, DegeneracyError, LiftOffError

#: ``|z'|`` at or below this counts as "capsule at rest".
STICK_VEL_TOL = 1e-9


@dataclass(frozen=True)
class DimensionalParams:
    """Physical parameters in SI units."""

    M: float  # capsule mass [kg]
    m: float  # pendulum mass [kg]
    l: float  # pendulum length [m]  # noqa: E741
    k: float  # rotational stiffness [N m / rad]
    c: float  # rotational damping [N m s / rad]
    g: float = 9.81

    def __post_init__(self):
        for name in ("M", "m", "l", "k", "c", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class CapsuleParams:
    """Dimensionless parameters: mass ratio, stiffness, damping, friction."""

    gamma: float = 10.0
    rho: float = 2.5
    nu: float = 1.0
    mu: float = 0.3

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma!r}")
        if not self.rho >= 0:
            raise ConfigError(f"rho must be >= 0, got {self.rho!r}")
        if not self.nu >= 0:
            raise ConfigError(f"nu must be >= 0, got {self.nu!r}")
        if not 0 <= self.mu < 1:
            raise ConfigError(f"mu must lie in [0, 1), got {self.mu!r}")


NOMINAL = CapsuleParams()


@dataclass(frozen=True)
class State:
    tau: float = 0.0
    theta: float = 0.0
    theta_dot: float = 0.0
    z: float = 0.0
    z_dot: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.tau, self.theta, self.theta_dot, self.z, self.z_dot)):
            raise ConfigError(f"state must be finite: {self}")


class ContactMode(enum.IntEnum):
    """Contact regime. The integer value is the slip direction (0 for stick)."""

    STICK = 0
    SLIP_POS = 1
    SLIP_NEG = -1

    @classmethod
    def slip(cls, direction: float) -> "ContactMode":
        if direction > 0:
            return cls.SLIP_POS
        if direction < 0:
            return cls.SLIP_NEG
        raise ContractError("slip direction must be nonzero")

    @property
    def direction(self) -> int:
        return int(self.value)

    @property
    def label(self) -> str:
        return {0: "stick", 1: "slip+", -1: "slip-"}[int(self.value)]

    @classmethod
    def from_label(cls, label: str) -> "ContactMode":
        return {"stick": cls.STICK, "slip+": cls.SLIP_POS, "slip-": cls.SLIP_NEG}[label]


@dataclass(frozen=True)
class Kinetics:
    theta_ddot: float
    z_ddot: float
    r_y: float
    r_z: float
    f_z: float
    mode: ContactMode


# -- compiled scalar kernels -------------------------------------------------


@njit(cache=True)
def pendulum_rhs(theta, theta_dot, u, rho, nu):
    """Right-hand side of the pendulum row: gravity, spring, damper and drive torque."""
    return math.sin(theta) - rho * theta - nu * theta_dot + u


@njit(cache=True)
def contact_force(theta, theta_dot, theta_ddot, gamma):
    return (gamma + 1.0) - theta_ddot * math.sin(theta) - theta_dot * theta_dot * math.cos(theta)


@njit(cache=True)
def horizontal_load(theta, theta_dot, theta_ddot):
    return theta_ddot * math.cos(theta) - theta_dot * theta_dot * math.sin(theta)


@njit(cache=True)
def slip_solve(theta, theta_dot, u, direction, mu, gamma, rho, nu):
    """Solve the slip-modified 2x2 system; returns ``(theta_ddot, z_ddot, det)``."""
    sn = math.sin(theta)
    cs = math.cos(theta)
    ms = mu * direction
    w2 = theta_dot * theta_dot
    rhs1 = sn - rho * theta - nu * theta_dot + u
    rhs2 = -w2 * sn - ms * (gamma + 1.0) + ms * w2 * cs
    a21 = -cs - ms * sn
    det = (gamma + 1.0) + cs * a21
    theta_ddot = ((gamma + 1.0) * rhs1 + cs * rhs2) / det
    z_ddot = (rhs2 - a21 * rhs1) / det
    return theta_ddot, z_ddot, det


# -- public API ---------------------------------------------------------------


def nondimensionalize(dim: DimensionalParams) -> tuple[float, float, float, float]:
    """Return ``(gamma, rho, nu, Omega)`` for the given physical parameters.

    ``Omega = sqrt(g / l)`` is the time scale: ``tau = Omega * t`` and derivatives
    transform as ``dx/dt = Omega * x'`` and ``d2x/dt2 = Omega**2 * x''``. Friction
    is already dimensionless and is not touched here.
    """
    omega = math.sqrt(dim.g / dim.l)
    gamma = dim.M / dim.m
    rho = dim.k / (dim.m * omega**2 * dim.l**2)
    nu = dim.c / (dim.m * omega * dim.l**2)
    return gamma, rho, nu, omega


def _check_contact(r_y: float, s: State) -> None:
    if not r_y > 0:
        raise LiftOffError(f"contact force r_y={r_y:.6g} <= 0 at tau={s.tau:.6g}")


def stick_kinetics(s: State, u: float, p: CapsuleParams) -> Kinetics:
    """Kinetics with the capsule held at rest by static friction."""
    theta_ddot = pendulum_rhs(s.theta, s.theta_dot, u, p.rho, p.nu)
    r_y = contact_force(s.theta, s.theta_dot, theta_ddot, p.gamma)
    r_z = horizontal_load(s.theta, s.theta_dot, theta_ddot)
    _check_contact(r_y, s)
    return Kinetics(theta_ddot, 0.0, r_y, r_z, r_z, ContactMode.STICK)


def slip_kinetics(s: State, u: float, direction: int, mu_eff: float, p: CapsuleParams) -> Kinetics:
    """Kinetics while sliding in ``direction`` under kinetic friction ``mu_eff``."""
    if direction not in (-1, 1):
        raise ContractError(f"slip direction must be -1 or +1, got {direction!r}")
    if mu_eff < 0:
        raise ContractError(f"mu_eff must be >= 0, got {mu_eff!r}")
    theta_ddot, z_ddot, det = slip_solve(
        s.theta, s.theta_dot, u, float(direction), mu_eff, p.gamma, p.rho, p.nu
    )
    if not det > 0:
        raise DegeneracyError(f"slip matrix determinant {det:.6g} <= 0 at tau={s.tau:.6g}")
    r_y = contact_force(s.theta, s.theta_dot, theta_ddot, p.gamma)
    _check_contact(r_y, s)
    r_z = horizontal_load(s.theta, s.theta_dot, theta_ddot)
    return Kinetics(theta_ddot, z_ddot, r_y, r_z, mu_eff * direction * r_y, ContactMode.slip(direction))


def mode_decision(s: State, u: float, mu_eff: float, p: CapsuleParams) -> ContactMode:
    """Pick the contact mode for state ``s``.

    A moving capsule slips in its direction of motion. At rest it sticks while
    ``|r_z| < mu_eff * r_y``; the tie goes to slip.
    """
    if abs(s.z_dot) > STICK_VEL_TOL:
        return ContactMode.slip(s.z_dot)
    k = stick_kinetics(s, u, p)
    if abs(k.r_z) < mu_eff * k.r_y:
        return ContactMode.STICK
    return ContactMode.slip(1.0 if k.r_z >= 0 else -1.0)


def eval_dynamics(
    s: State, u: float, mode: ContactMode, mu_eff: float, p: CapsuleParams
) -> tuple[tuple[float, float, float, float], Kinetics]:
    """State derivative ``(theta', theta'', z', z'')`` in the given mode."""
    mode = ContactMode(mode)
    if mode is ContactMode.STICK:
        if abs(s.z_dot) > STICK_VEL_TOL:
            raise ContractError(f"Stick mode requested with z_dot={s.z_dot!r}")
        k = stick_kinetics(s, u, p)
        return (s.theta_dot, k.theta_ddot, 0.0, 0.0), k
    k = slip_kinetics(s, u, mode.direction, mu_eff, p)
    return (s.theta_dot, k.theta_ddot, s.z_dot, k.z_ddot), k
