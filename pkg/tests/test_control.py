import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capsule.control import (
    PUBLISHED_A,
    PUBLISHED_A0,
    PUBLISHED_B,
    FourierControl,
    NeuralControl,
    clamp_fraction,
    fourier_eval,
    neural_control,
    published_fourier,
    zero_control,
)
from capsule.errors import ConfigError
from capsule.model import State
from capsule.neural import AffineScaler, Mlp, activation, forward


def test_zero_coefficients_give_zero():
    fc = zero_control()
    assert all(fourier_eval(fc, t) == 0.0 for t in np.linspace(0, 50, 101))


def test_published_sum_at_zero_with_halved_offset():
    fc = published_fourier(halve_a0=True)
    expected = PUBLISHED_A0 / 2 + sum(PUBLISHED_A)
    assert expected == pytest.approx(-4.69554, abs=1e-9)
    assert fc.raw(0.0) == pytest.approx(expected, abs=1e-12)
    assert fourier_eval(fc, 0.0) == -4.0


def test_published_set_rides_both_limits_with_full_offset():
    fc = published_fourier()
    tau = np.linspace(0, fc.period, 200_001)
    raw = np.array([fc.raw(t) for t in tau[::10]])
    assert raw.min() == pytest.approx(-4.0, abs=1e-4)
    assert raw.max() == pytest.approx(4.0, abs=1e-4)
    assert clamp_fraction(fc) < 1e-3
    assert clamp_fraction(published_fourier(halve_a0=True)) > 0.05


@settings(max_examples=200, deadline=None)
@given(tau=st.floats(0, 200))
def test_fourier_periodic(tau):
    fc = published_fourier()
    assert fc.raw(tau + fc.period) == pytest.approx(fc.raw(tau), abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(tau=st.floats(0, 100), th=st.floats(-3, 3), thd=st.floats(-5, 5), zd=st.floats(-2, 2))
def test_open_loop_ignores_state_and_stays_in_limits(tau, th, thd, zd):
    fc = published_fourier(halve_a0=True)
    u = fc(tau, State(theta=th, theta_dot=thd, z_dot=zd))
    assert u == fc(tau, State())
    assert -4.0 <= u <= 4.0


def test_fourier_validation():
    with pytest.raises(ConfigError):
        FourierControl(0.0, 1.0, (1.0, 2.0), (1.0,))
    with pytest.raises(ConfigError):
        FourierControl(0.0, 0.0, (1.0,), (1.0,))
    with pytest.raises(ConfigError):
        FourierControl(0.0, 1.0, (1.0,), (1.0,), u_min=1.0, u_max=1.0)


def _bias_only_net(bias):
    params = np.zeros(5 * 2 + 1)
    params[-1] = bias
    return Mlp(2, "relu", "linear", params, AffineScaler.identity(3), AffineScaler.identity(1))


def test_neural_constant_output():
    net = _bias_only_net(0.7)
    for s in (State(), State(theta=1.0, theta_dot=-2.0, z_dot=0.4)):
        assert neural_control(net, s) == pytest.approx(0.7, abs=1e-15)


def test_neural_clamps():
    assert neural_control(_bias_only_net(5.2), State()) == 4.0
    assert neural_control(_bias_only_net(-5.2), State()) == -4.0


def test_neural_requires_scalers():
    net = Mlp.init(3, "tanh", "linear", 0)
    with pytest.raises(ConfigError):
        neural_control(net, State())
    with pytest.raises(ConfigError):
        NeuralControl(net).pack()


@pytest.mark.parametrize("h", ["relu", "sigmoid", "tanh"])
@pytest.mark.parametrize("o", ["linear", "sigmoid"])
def test_neural_composition(h, o):
    rng = np.random.default_rng(7)
    net = Mlp.init(6, h, o, 3)
    net.params = rng.normal(size=net.params.shape)
    net.input_scaler = AffineScaler(rng.normal(size=3), rng.uniform(0.5, 2, 3))
    net.target_scaler = AffineScaler.onto_interval(-4, 4, 0.05) if o == "sigmoid" else AffineScaler([0.3], [2.0])
    law = NeuralControl(net)
    for _ in range(50):
        s = State(theta=rng.uniform(-2, 2), theta_dot=rng.uniform(-3, 3), z_dot=rng.uniform(-1, 1))
        x = (np.array([s.theta, s.theta_dot, s.z_dot]) - net.input_scaler.offset) / net.input_scaler.scale
        hidden = activation(h, net.w_hidden @ x + net.b_hidden)
        y = float(activation(o, hidden @ net.w_out + net.b_out))
        expected = min(max(y * net.target_scaler.scale[0] + net.target_scaler.offset[0], -4), 4)
        assert law(123.0, s) == pytest.approx(expected, abs=1e-12)
        assert law(0.0, s) == law(55.5, s)  # time-shift invariant
        assert forward(net, x) == pytest.approx(y, abs=1e-12)


def test_published_constants():
    assert len(PUBLISHED_A) == len(PUBLISHED_B) == 5
    assert published_fourier().period == pytest.approx(2 * math.pi / 1.64722)
