import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capsule.errors import ConfigError, ContractError, LiftOffError
from capsule.model import (
    NOMINAL,
    CapsuleParams,
    ContactMode,
    DimensionalParams,
    State,
    eval_dynamics,
    mode_decision,
    nondimensionalize,
    slip_kinetics,
    stick_kinetics,
)

P = CapsuleParams(gamma=10.0, rho=2.5, nu=1.0, mu=0.3)
ZERO = State()


def residuals(s, u, k, p):
    """Both rows of the matrix equation plus the contact-force identity."""
    c, sn = math.cos(s.theta), math.sin(s.theta)
    row1 = k.theta_ddot - c * k.z_ddot - (sn - p.rho * s.theta - p.nu * s.theta_dot + u)
    row2 = -c * k.theta_ddot + (p.gamma + 1) * k.z_ddot - (-s.theta_dot**2 * sn - k.f_z)
    ry = k.r_y - ((p.gamma + 1) - k.theta_ddot * sn - s.theta_dot**2 * c)
    rz = k.r_z - (k.theta_ddot * c - s.theta_dot**2 * sn)
    return row1, row2, ry, rz


# -- hand oracles -----------------------------------------------------------------


def test_stick_at_rest_without_torque():
    k = stick_kinetics(ZERO, 0.0, P)
    assert (k.theta_ddot, k.r_z, k.r_y, k.f_z, k.z_ddot) == (0.0, 0.0, 11.0, 0.0, 0.0)


def test_stick_unit_torque():
    k = stick_kinetics(ZERO, 1.0, P)
    assert k.theta_ddot == 1.0 and k.r_z == 1.0 and k.r_y == 11.0


def test_stick_horizontal_pendulum():
    k = stick_kinetics(State(theta=math.pi / 2), 0.0, P)
    assert k.theta_ddot == pytest.approx(1 - 2.5 * math.pi / 2, abs=1e-12)
    assert k.r_y == pytest.approx(11 + 2.5 * math.pi / 2 - 1, abs=1e-12)
    assert k.r_z == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("direction, mu, tdd, zdd, fz", [
    (+1, 0.3, 4.07, 0.07, 3.3),
    (+1, 0.0, 4.4, 0.4, 0.0),
    (-1, 0.3, 4.73, 0.73, -3.3),
])
def test_slip_hand_solutions(direction, mu, tdd, zdd, fz):
    k = slip_kinetics(ZERO, 4.0, direction, mu, P)
    assert k.theta_ddot == pytest.approx(tdd, abs=1e-12)
    assert k.z_ddot == pytest.approx(zdd, abs=1e-12)
    assert k.f_z == pytest.approx(fz, abs=1e-12)
    assert k.r_y == pytest.approx(11.0, abs=1e-12)


def test_mode_decision_cases():
    assert mode_decision(State(z_dot=0.5), 0.0, 0.3, P) is ContactMode.SLIP_POS
    assert mode_decision(State(z_dot=-0.5), 0.0, 0.3, P) is ContactMode.SLIP_NEG
    assert mode_decision(ZERO, 1.0, 0.3, P) is ContactMode.STICK
    assert mode_decision(ZERO, 4.0, 0.3, P) is ContactMode.SLIP_POS
    assert mode_decision(ZERO, -4.0, 0.3, P) is ContactMode.SLIP_NEG


def test_mode_decision_tie_goes_to_slip():
    # |r_z| = u at rest; mu * r_y = 0.25 * 11 = 2.75 exactly in binary
    assert mode_decision(ZERO, 2.75, 0.25, P) is ContactMode.SLIP_POS
    assert mode_decision(ZERO, 2.75 - 1e-12, 0.25, P) is ContactMode.STICK


def test_mode_decision_velocity_tolerance():
    assert mode_decision(State(z_dot=1e-10), 1.0, 0.3, P) is ContactMode.STICK


def test_eval_dynamics_examples():
    d, _ = eval_dynamics(ZERO, 0.0, ContactMode.STICK, 0.3, P)
    assert d == (0.0, 0.0, 0.0, 0.0)
    d, _ = eval_dynamics(ZERO, 4.0, ContactMode.SLIP_POS, 0.3, P)
    assert d[0] == 0.0 and d[2] == 0.0
    assert d[1] == pytest.approx(4.07, abs=1e-12) and d[3] == pytest.approx(0.07, abs=1e-12)
    with pytest.raises(ContractError):
        eval_dynamics(State(z_dot=0.3), 0.0, ContactMode.STICK, 0.3, P)


def test_lift_off_raises():
    # fast spin with the pendulum above the pivot pulls the capsule off the ground
    with pytest.raises(LiftOffError):
        stick_kinetics(State(theta=0.0, theta_dot=4.0), 0.0, P)


def test_parameter_validation():
    with pytest.raises(ConfigError):
        CapsuleParams(gamma=0.0)
    with pytest.raises(ConfigError):
        CapsuleParams(mu=-0.1)
    with pytest.raises(ConfigError):
        State(theta=float("nan"))
    with pytest.raises(ConfigError):
        DimensionalParams(M=1.0, m=0.1, l=0.1, k=-1.0, c=0.01)


def test_nondimensionalize_round_numbers():
    # M/m = 10; k/(m g l) = 2.5; Omega = sqrt(g/l)
    dim = DimensionalParams(M=1.0, m=0.1, l=0.1, k=2.5 * 0.1 * 9.81 * 0.1, c=0.01, g=9.81)
    gamma, rho, nu, omega = nondimensionalize(dim)
    assert gamma == pytest.approx(10.0)
    assert rho == pytest.approx(2.5)
    assert omega == pytest.approx(math.sqrt(9.81 / 0.1))
    assert nu > 0


def test_contact_mode_labels_round_trip():
    for m in ContactMode:
        assert ContactMode.from_label(m.label) is m


# -- randomized properties --------------------------------------------------------


def test_residuals_over_random_samples():
    rng = np.random.default_rng(12345)
    n, worst, checked = 12_000, 0.0, 0
    for _ in range(n):
        s = State(theta=rng.uniform(-math.pi, math.pi), theta_dot=rng.uniform(-2.5, 2.5),
                  z_dot=0.0 if rng.random() < 1 / 3 else rng.uniform(-2, 2))
        u = rng.uniform(-4, 4)
        mu = rng.uniform(0, 0.5)
        mode = ContactMode.STICK if s.z_dot == 0 else ContactMode.slip(s.z_dot)
        try:
            _, k = eval_dynamics(s, u, mode, mu, P)
        except LiftOffError:
            continue
        worst = max(worst, *map(abs, residuals(s, u, k, P)))
        if mode is ContactMode.STICK:
            assert k.z_ddot == 0.0 and k.f_z == k.r_z
        else:
            assert k.f_z == mu * mode.direction * k.r_y
        checked += 1
    assert checked >= 10_000
    assert worst < 1e-10


@settings(max_examples=300, deadline=None)
@given(theta=st.floats(-math.pi, math.pi), mu=st.floats(0, 0.5), direction=st.sampled_from([-1, 1]))
def test_slip_determinant_positive(theta, mu, direction):
    from capsule.model import slip_solve

    _, _, det = slip_solve(theta, 0.0, 0.0, float(direction), mu, 10.0, 2.5, 1.0)
    assert det >= 10.0 - mu - 1e-12


@settings(max_examples=300, deadline=None)
@given(theta=st.floats(-3, 3), theta_dot=st.floats(-2, 2), u=st.floats(-4, 4),
       mu=st.floats(0, 0.5), direction=st.sampled_from([-1, 1]))
def test_slip_mirror_symmetry(theta, theta_dot, u, mu, direction):
    try:
        a = slip_kinetics(State(theta=theta, theta_dot=theta_dot), u, direction, mu, P)
        b = slip_kinetics(State(theta=-theta, theta_dot=-theta_dot), -u, -direction, mu, P)
    except LiftOffError:
        return
    for x, y in ((a.theta_ddot, b.theta_ddot), (a.z_ddot, b.z_ddot), (a.r_z, b.r_z), (a.f_z, b.f_z)):
        assert x == pytest.approx(-y, abs=1e-12)
    assert a.r_y == pytest.approx(b.r_y, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(theta=st.floats(-3, 3), theta_dot=st.floats(-2, 2), u=st.floats(-4, 4),
       mu=st.floats(0, 0.5), z_dot=st.floats(0.01, 2), direction=st.sampled_from([-1, 1]))
def test_friction_dissipates(theta, theta_dot, u, mu, z_dot, direction):
    s = State(theta=theta, theta_dot=theta_dot, z_dot=direction * z_dot)
    try:
        _, k = eval_dynamics(s, u, ContactMode.slip(direction), mu, P)
    except LiftOffError:
        return
    assert k.f_z * direction >= 0
    assert -k.f_z * s.z_dot <= 0


def test_nominal_is_reference_set():
    assert (NOMINAL.gamma, NOMINAL.rho, NOMINAL.nu, NOMINAL.mu) == (10.0, 2.5, 1.0, 0.3)
