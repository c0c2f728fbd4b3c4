import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import expit
from valuecast import blob
from valuecast.hash import file_digest
from valuecast.errors import (
    CheckpointError,
    DegeneratePrices,
    DimensionMismatch,
    InvalidQuantile,
    ModelError,
    OutOfRange,
    ShapeMismatch,
)
from valuecast.forecaster import (
    AdamState,
    ForecastModel,
    adam_step,
    backward,
    forward,
    load_model,
    model_to_dict,
    model_from_dict,
    mse_loss,
    mse_loss_grad,
    nominal_level,
    pinball_loss,
    pinball_loss_grad,
    save_model,
    value_loss,
    value_loss_grad,
)


def test_default_architecture():
    model = ForecastModel()
    assert model.layer_sizes == (4, 256, 256, 1)
    assert model.n_params == 4 * 256 + 256 + 256 * 256 + 256 + 256 + 1
    assert [p.shape for p in model.params[:2]] == [(4, 256), (256,)]
    linear = ForecastModel(architecture="linear", hidden=(8,))
    assert linear.layer_sizes == (4, 1)
    assert linear.n_params == 5
    with pytest.raises(ModelError):
        ForecastModel(architecture="transformer")


def test_zero_parameters_give_half_capacity():
    model = ForecastModel(hidden=(8, 8), wind_cap=40)
    model.params = [np.zeros_like(p) for p in model.params]
    assert forward(model, np.ones(4)) == pytest.approx(20)


def test_output_saturates_at_capacity():
    model = ForecastModel(architecture="linear", wind_cap=40)
    model.params = [np.full((4, 1), 1e3), np.zeros(1)]
    high = forward(model, np.ones(4))
    assert high <= 40
    assert high == pytest.approx(40)
    assert forward(model, -np.ones(4)) >= 0


@pytest.mark.parametrize("s1", [-1.0, 0.0, 2.0])
def test_linear_identity_map(s1):
    model = ForecastModel(architecture="linear", wind_cap=40)
    model.params = [np.array([[1.0], [0.0], [0.0], [0.0]]), np.zeros(1)]
    assert forward(model, [s1, 5.0, -3.0, 7.0]) == pytest.approx(40 / (1 + np.exp(-s1)))


def test_standardization_applied():
    model = ForecastModel(
        architecture="linear", wind_cap=40, feature_mean=[1, 1, 1, 1], feature_std=[2, 2, 2, 2]
    )
    model.params = [np.array([[1.0], [0.0], [0.0], [0.0]]), np.zeros(1)]
    assert forward(model, [5.0, 0, 0, 0]) == pytest.approx(40 * expit(2.0))


def test_batch_forward_and_dimension():
    model = ForecastModel(hidden=(6,), seed=3)
    batch = np.random.default_rng(0).normal(size=(5, 4))
    out = forward(model, batch)
    assert out.shape == (5,)
    assert out[2] == pytest.approx(forward(model, batch[2]))
    with pytest.raises(DimensionMismatch):
        forward(model, np.ones(3))
    with pytest.raises(DimensionMismatch):
        forward(model, np.ones((2, 5)))


def test_output_bounded():
    rng = np.random.default_rng(1)
    for seed in range(100):
        model = ForecastModel(hidden=(8, 8), wind_cap=40, seed=seed)
        scale = rng.choice([1.0, 10.0, 100.0])
        model.params = [scale * p for p in model.params]
        out = forward(model, rng.normal(scale=scale, size=(1000, 4)))
        assert (out >= 0).all() and (out <= 40).all()


def test_seeded_initialization():
    a, b = ForecastModel(hidden=(8,), seed=5), ForecastModel(hidden=(8,), seed=5)
    assert all(np.array_equal(p, q) for p, q in zip(a.params, b.params))
    c = ForecastModel(hidden=(8,), seed=6)
    assert not np.array_equal(a.params[0], c.params[0])


def _numeric_gradient(model, s, upstream, h=1e-6):
    grads = []
    for k, p in enumerate(model.params):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            original = p[idx]
            p[idx] = original + h
            up = upstream @ np.atleast_1d(forward(model, s))
            p[idx] = original - h
            down = upstream @ np.atleast_1d(forward(model, s))
            p[idx] = original
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


@pytest.mark.parametrize("architecture", ["mlp", "linear"])
def test_backward_matches_finite_differences(architecture):
    rng = np.random.default_rng(2)
    for seed in range(10):
        model = ForecastModel(hidden=(8,), wind_cap=40, architecture=architecture, seed=seed)
        s = rng.normal(size=(3, 4))
        upstream = rng.normal(size=3)
        analytic = backward(model, s, upstream)
        numeric = _numeric_gradient(model, s, upstream)
        for a, n in zip(analytic, numeric):
            assert a.shape == n.shape
            assert_allclose(a, n, rtol=1e-5, atol=1e-7)


def test_backward_single_sample():
    model = ForecastModel(hidden=(4,), seed=1)
    grads = backward(model, np.ones(4), 1.0)
    assert [g.shape for g in grads] == [p.shape for p in model.params]
    with pytest.raises(ShapeMismatch):
        backward(model, np.ones((3, 4)), [1.0, 2.0])


def test_adam_zero_gradient():
    params = [np.ones((2, 2)), np.zeros(2)]
    state = AdamState(params)
    updated = adam_step(params, [np.zeros((2, 2)), np.zeros(2)], state)
    assert all(np.array_equal(p, q) for p, q in zip(params, updated))
    assert state.step == 1


def test_adam_first_step_moves_by_learning_rate():
    params = [np.zeros(5)]
    grads = [np.array([3.0, -2.0, 0.5, -1e-3, 100.0])]
    state = AdamState(params, lr=1e-3)
    (updated,) = adam_step(params, grads, state)
    assert_allclose(updated, -1e-3 * np.sign(grads[0]), rtol=1e-4)
    assert (np.abs(updated) <= 1e-3).all()


def test_adam_shapes():
    params = [np.zeros(3)]
    with pytest.raises(ShapeMismatch):
        adam_step(params, [np.zeros(4)], AdamState(params))
    with pytest.raises(ShapeMismatch):
        adam_step(params, [], AdamState(params))
    with pytest.raises(ModelError):
        AdamState(params, lr=0)


@pytest.mark.parametrize(
    "forecast, realization, lam, nu, loss, grad",
    [(10, 8, 30, 100, -100, 70), (10, 13, 30, 10, -330, -20)],
)
def test_value_loss(forecast, realization, lam, nu, loss, grad):
    assert value_loss(forecast, realization, lam, nu) == pytest.approx(loss)
    assert value_loss_grad(forecast, realization, lam, nu) == pytest.approx(grad)


def test_value_loss_equal_prices():
    assert value_loss(5, 12, 30, 30) == pytest.approx(-30 * 12)
    assert value_loss(25, 12, 30, 30) == pytest.approx(-30 * 12)
    assert value_loss_grad(25, 12, 30, 30) == 0


def test_value_loss_is_affine():
    rng = np.random.default_rng(3)
    forecast, realization, delta = rng.uniform(0, 40, (3, 100))
    lam, nu = rng.uniform(0, 100, (2, 100))
    shift = value_loss(forecast + delta, realization, lam, nu) - value_loss(
        forecast, realization, lam, nu
    )
    assert_allclose(shift, (nu - lam) * delta)
    assert_allclose(
        value_loss(forecast, realization, lam, nu),
        -lam * realization + (lam - nu) * (realization - forecast),
    )
    assert value_loss_grad(forecast, realization, lam, nu).shape == (100,)


def test_quality_losses():
    assert mse_loss(10, 10) == 0
    assert pinball_loss(10, 10, 0.3) == 0
    assert mse_loss(10, 13) == pytest.approx(9)
    assert mse_loss_grad(10, 13) == pytest.approx(-6)
    assert pinball_loss(10, 19, 2 / 9) == pytest.approx(2)
    assert pinball_loss(10, 1, 2 / 9) == pytest.approx(7)


def test_pinball_gradient():
    tau = 2 / 9
    assert pinball_loss_grad(10, 19, tau) == pytest.approx(-tau)
    assert pinball_loss_grad(10, 1, tau) == pytest.approx(1 - tau)
    assert pinball_loss_grad(10, 10, tau) == pytest.approx(-tau)


@pytest.mark.parametrize("quantile", [0.0, 1.0, -0.2, 1.5])
def test_invalid_quantile(quantile):
    with pytest.raises(InvalidQuantile):
        pinball_loss(1, 2, quantile)
    with pytest.raises(InvalidQuantile):
        pinball_loss_grad(1, 2, quantile)


def test_nominal_level():
    assert nominal_level(30, 100, 10) == pytest.approx(2 / 9)
    assert nominal_level(10, 100, 10) == 0
    assert nominal_level(100, 100, 10) == 1
    with pytest.raises(DegeneratePrices):
        nominal_level(30, 50, 50)
    with pytest.raises(DegeneratePrices):
        nominal_level(30, 10, 100)
    with pytest.raises(OutOfRange):
        nominal_level(120, 100, 10)


def test_checkpoint_roundtrip(tmp_path):
    model = ForecastModel(hidden=(8, 4), wind_cap=60, seed=9, feature_mean=[1, 2, 3, 4])
    digest = save_model(model, tmp_path / "model.vcm")
    assert digest == file_digest(tmp_path / "model.vcm")
    loaded = load_model(tmp_path / "model.vcm")
    assert loaded.descriptor() == model.descriptor()
    assert all(np.array_equal(p, q) for p, q in zip(loaded.params, model.params))
    s = np.random.default_rng(0).normal(size=(6, 4))
    assert_allclose(forward(loaded, s), forward(model, s))
    assert not list(tmp_path.glob("*.saving"))


def test_checkpoint_errors(tmp_path):
    with pytest.raises(CheckpointError):
        load_model(tmp_path / "missing.vcm")
    (tmp_path / "junk.vcm").write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        load_model(tmp_path / "junk.vcm")
    d = model_to_dict(ForecastModel(hidden=(8,)))
    d["descriptor"]["hidden"] = [16]
    with pytest.raises(CheckpointError):
        model_from_dict(d)
    with pytest.raises(CheckpointError):
        model_from_dict(dict(d, format="something-else"))
    del d["params"]
    with pytest.raises(CheckpointError):
        model_from_dict(d)
    (tmp_path / "other.vcm").write_bytes(blob.pack({"format": "table"}))
    with pytest.raises(CheckpointError):
        load_model(tmp_path / "other.vcm")


def test_copy_is_independent():
    model = ForecastModel(hidden=(4,))
    other = model.copy()
    other.params[0][0, 0] += 1.0
    assert other.params[0][0, 0] != model.params[0][0, 0]
    assert "mlp 4x4x1" in repr(model)
