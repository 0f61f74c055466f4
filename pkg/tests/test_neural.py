import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capsule.errors import ConfigError
from capsule.neural import (
    AdamConfig,
    AffineScaler,
    Dataset,
    GridSpec,
    Mlp,
    TrainConfig,
    activation,
    activation_deriv,
    adam_step,
    backward,
    build_dataset,
    fit,
    forward,
    mse,
    param_count,
    r2,
    split_shuffle,
    train,
)

PAIRS = [(h, o) for h in ("relu", "sigmoid", "tanh") for o in ("linear", "sigmoid")]


# -- activations ------------------------------------------------------------------


def test_activation_values():
    assert activation("relu", -1.0) == 0.0 and activation("relu", 2.0) == 2.0
    assert activation("sigmoid", 0.0) == 0.5 and activation("tanh", 0.0) == 0.0
    assert np.isfinite(activation("sigmoid", np.array([-1000.0, 1000.0]))).all()
    with pytest.raises(ConfigError):
        activation("softplus", 0.0)


@pytest.mark.parametrize("kind", ["relu", "sigmoid", "tanh", "linear"])
def test_activation_derivative_matches_finite_difference(kind):
    rng = np.random.default_rng(1)
    x = rng.uniform(-5, 5, 1000)
    if kind == "relu":
        x = x[np.abs(x) > 1e-3]  # away from the kink
    h = 1e-6
    fd = (activation(kind, x + h) - activation(kind, x - h)) / (2 * h)
    an = activation_deriv(kind, x)
    rel = np.abs(fd - an) / np.maximum(np.abs(an), 1e-3)
    assert rel.max() < 1e-6


# -- forward ----------------------------------------------------------------------


def test_forward_bias_only():
    params = np.zeros(param_count(4))
    params[-1] = 0.7
    net = Mlp(4, "tanh", "linear", params)
    assert forward(net, np.array([1.0, -2.0, 3.0])) == pytest.approx(0.7)


def test_forward_single_tanh_neuron():
    net = Mlp(1, "tanh", "linear", np.array([1.0, 0.0, 0.0, 0.0, 2.0, 0.5]))
    assert forward(net, np.array([0.5, 9.0, -9.0])) == pytest.approx(2 * math.tanh(0.5) + 0.5, abs=1e-12)
    assert forward(net, np.array([0.5, 0.0, 0.0])) == pytest.approx(1.424234, abs=1e-6)


@pytest.mark.parametrize("h, o", PAIRS)
def test_forward_matches_per_neuron_sum(h, o):
    rng = np.random.default_rng(2)
    net = Mlp(7, h, o, rng.normal(size=param_count(7)))
    X = rng.normal(size=(20, 3))
    batch = forward(net, X)
    for x, yb in zip(X, batch):
        acc = net.b_out
        for j in range(7):
            pre = sum(net.w_hidden[j, i] * x[i] for i in range(3)) + net.b_hidden[j]
            acc += net.w_out[j] * float(activation(h, pre))
        assert yb == pytest.approx(float(activation(o, acc)), abs=1e-12)


# -- backward ---------------------------------------------------------------------


def _loss(net, X, y):
    return float(np.mean((forward(net, X) - y) ** 2))


@pytest.mark.parametrize("h, o", PAIRS)
def test_backprop_matches_finite_differences(h, o):
    rng = np.random.default_rng(3)
    net = Mlp(5, h, o, rng.normal(scale=0.8, size=param_count(5)))
    X = rng.normal(size=(16, 3))
    y = rng.uniform(0.1, 0.9, 16)
    grad = backward(net, X, y)
    eps = 1e-5
    worst = 0.0
    for i in range(len(net.params)):
        p = net.params.copy()
        plus, minus = net.copy(), net.copy()
        plus.params = p.copy(); plus.params[i] += eps
        minus.params = p.copy(); minus.params[i] -= eps
        fd = (_loss(plus, X, y) - _loss(minus, X, y)) / (2 * eps)
        denom = max(abs(fd), abs(grad[i]), 1e-7)
        worst = max(worst, abs(fd - grad[i]) / denom)
    assert worst < 1e-5


def test_backprop_zero_error_gives_zero_gradient():
    rng = np.random.default_rng(4)
    net = Mlp(4, "tanh", "sigmoid", rng.normal(size=param_count(4)))
    X = rng.normal(size=(8, 3))
    assert np.all(backward(net, X, forward(net, X)) == 0.0)


def test_backprop_single_neuron_closed_form():
    # out = w2 * tanh(w.x + b) + b2, L = (out - y)^2
    w, b, w2, b2 = np.array([0.3, -0.2, 0.5]), 0.1, 1.5, -0.4
    x, y = np.array([1.0, 2.0, -1.0]), 0.25
    net = Mlp(1, "tanh", "linear", np.concatenate([w, [b, w2, b2]]))
    a = math.tanh(w @ x + b)
    e = 2 * (w2 * a + b2 - y)
    expected = np.concatenate([e * w2 * (1 - a * a) * x, [e * w2 * (1 - a * a), e * a, e]])
    np.testing.assert_allclose(backward(net, x[None, :], [y]), expected, rtol=1e-13, atol=1e-15)


# -- Adam -------------------------------------------------------------------------


def test_adam_first_step_scalar():
    p, m, v = adam_step(np.array([0.0]), np.array([1.0]), np.zeros(1), np.zeros(1), 1, AdamConfig(lr=1e-3))
    assert p[0] == pytest.approx(-1e-3 / (1 + 1e-8), abs=1e-15)
    assert p[0] == pytest.approx(-1e-3, abs=1e-9)
    assert m[0] == pytest.approx(0.1) and v[0] == pytest.approx(0.001)


def test_adam_zero_gradient_leaves_params():
    p0 = np.array([1.0, -2.0, 3.0])
    p, _, _ = adam_step(p0, np.zeros(3), np.zeros(3), np.zeros(3), 1)
    np.testing.assert_array_equal(p, p0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3).filter(lambda g: abs(g) > 1e-3), min_size=1, max_size=8))
def test_adam_first_step_moves_against_gradient(g):
    g = np.array(g)
    p, _, _ = adam_step(np.zeros_like(g), g, np.zeros_like(g), np.zeros_like(g), 1)
    assert np.all(np.sign(p) == -np.sign(g))


def test_adam_rejects_step_zero():
    with pytest.raises(ValueError):
        adam_step(np.zeros(1), np.zeros(1), np.zeros(1), np.zeros(1), 0)


# -- metrics ----------------------------------------------------------------------


def test_metrics():
    t = np.array([0.0, 1.0, 2.0, 5.0])
    assert mse(t, t) == 0.0 and r2(t, t) == 1.0
    assert r2(np.full(4, t.mean()), t) == pytest.approx(0.0, abs=1e-15)
    assert mse(np.array([1.0, 3.0]), np.array([0.0, 1.0])) == 2.5
    assert r2(np.array([1.0, 1.0]), np.array([0.0, 2.0])) == 0.0
    with pytest.raises(ValueError):
        r2(np.ones(3), np.ones(3))
    with pytest.raises(ValueError):
        mse(np.ones(1), np.ones(1))


# -- scalers ----------------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                min_size=2, max_size=30))
def test_scaler_round_trip(rows):
    X = np.array(rows)
    sc = AffineScaler.standardize(X)
    np.testing.assert_allclose(sc.inverse(sc.transform(X)), X, rtol=1e-12, atol=1e-9)


def test_target_scaler_maps_limits():
    sc = AffineScaler.onto_interval(-4, 4, 0.05)
    np.testing.assert_allclose(sc.transform(np.array([[-4.0], [4.0]]))[:, 0], [0.05, 0.95], atol=1e-15)
    np.testing.assert_allclose(sc.inverse(sc.transform(np.array([1.234]))), [1.234], atol=1e-12)


# -- dataset ----------------------------------------------------------------------


def test_dataset_from_trajectory(open_loop_traj):
    d = build_dataset(open_loop_traj)
    assert len(d) == 10001
    i = 1234
    np.testing.assert_array_equal(d.X[i], [open_loop_traj.theta[i], open_loop_traj.theta_dot[i],
                                           open_loop_traj.z_dot[i]])
    assert d.y[i] == open_loop_traj.u[i]


def test_dataset_from_resting_trajectory():
    from capsule.control import zero_control
    from capsule.model import NOMINAL, State
    from capsule.sim import SimConfig, simulate

    d = build_dataset(simulate(State(), zero_control(), NOMINAL, SimConfig(tau_end=1.0)))
    assert np.all(d.X == 0.0) and np.all(d.y == 0.0)


def test_split_partition_and_determinism():
    d = Dataset(np.zeros((10, 3)), np.arange(10.0))
    s = split_shuffle(d, 0.8, seed=5)
    assert len(s.train_idx) == 8 and len(s.test_idx) == 2
    assert sorted(np.concatenate([s.train_idx, s.test_idx]).tolist()) == list(range(10))
    s2 = split_shuffle(d, 0.8, seed=5)
    np.testing.assert_array_equal(s.train_idx, s2.train_idx)
    with pytest.raises(ConfigError):
        split_shuffle(Dataset(np.zeros((9, 3)), np.zeros(9)))


def test_dataset_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    d = Dataset(rng.normal(size=(20, 3)), rng.normal(size=20))
    d.to_csv(tmp_path / "d.csv")
    back = Dataset.from_csv(tmp_path / "d.csv")
    np.testing.assert_array_equal(back.X, d.X)
    np.testing.assert_array_equal(back.y, d.y)


# -- training ---------------------------------------------------------------------


def test_training_constant_target():
    rng = np.random.default_rng(0)
    d = split_shuffle(Dataset(rng.normal(size=(200, 3)), np.full(200, 1.7)), 0.8, 0)
    cfg = TrainConfig(max_epochs=2000, lr=1e-2, batch_size=160, patience=2000, min_delta=0.0)
    net, rep = fit(3, "relu", "linear", d, cfg)
    assert rep.final_test_mse < 1e-8
    assert math.isnan(rep.final_test_r2)
    from capsule.neural import predict

    assert predict(net, d.X[:3]) == pytest.approx([1.7] * 3, abs=1e-4)


def test_training_is_deterministic_and_trend_decreasing():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 3))
    d = split_shuffle(Dataset(X, np.sin(X[:, 0]) + 0.5 * X[:, 1]), 0.8, 0)
    cfg = TrainConfig(max_epochs=60, seed=3)
    a, ra = fit(8, "tanh", "linear", d, cfg)
    b, rb = fit(8, "tanh", "linear", d, cfg)
    np.testing.assert_array_equal(a.params, b.params)
    assert ra == rb
    hist = ra.train_mse
    assert int(np.argmin(hist)) >= 3 * len(hist) // 4


def test_training_requires_split():
    with pytest.raises(ConfigError):
        train(Mlp.init(3, "relu", "linear", 0), Dataset(np.zeros((20, 3)), np.zeros(20)))


def test_model_save_load(tmp_path, default_model):
    net, _ = default_model
    net.save(tmp_path / "m.json")
    back = Mlp.load(tmp_path / "m.json")
    np.testing.assert_array_equal(back.params, net.params)
    np.testing.assert_array_equal(back.input_scaler.offset, net.input_scaler.offset)
    assert (tmp_path / "m.json").read_text() == (back.save(tmp_path / "n.json") or (tmp_path / "n.json").read_text())


def test_default_model_quality(default_model):
    _, rep = default_model
    assert rep.final_test_r2 >= 0.995
    assert 0 <= rep.final_test_mse and rep.final_test_r2 <= 1


def test_grid_has_thirty_cells():
    assert len(GridSpec().cells()) == 30
    assert len(set(GridSpec().cells())) == 30


def test_grid_run_small(split_data):
    from capsule.neural import grid_run

    small = GridSpec(("tanh",), ("linear", "sigmoid"), (3,), repeats=2)
    cells = grid_run(small, split_data, TrainConfig(max_epochs=3))
    assert [c.key for c in cells] == [("tanh", "linear", 3), ("tanh", "sigmoid", 3)]
    for c in cells:
        assert len(c.runs) == 2 and [r.seed for r in c.runs] == [0, 1]
        assert 0 <= c.best.r2 <= 1 and c.best.mse >= 0
        assert c.best.r2 == max(r.r2 for r in c.runs)
