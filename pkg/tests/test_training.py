import json
import numpy as np
import pytest
from numpy.testing import assert_allclose
from valuecast.errors import CapacityAuditFailed, ConfigError, EmptyDataset, TrainingError
from valuecast.forecaster import (
    ForecastModel,
    forward,
    load_model,
    nominal_level,
    save_model,
    value_loss,
)
from valuecast.training import (
    TRACE_COLUMNS,
    TrainingConfig,
    TrainingTrace,
    capacity_audit,
    load_run,
    lower_level_prices,
    quality_batch,
    save_run,
    train,
    train_quality,
    train_value_oriented,
    value_batch,
)
from .samples import make_samples

LINEAR = dict(architecture="linear", lr=0.01, log_every=0)


def _constant_forecast(model):
    return forward(model, np.ones(4))


def test_config_defaults_and_validation():
    config = TrainingConfig()
    assert (config.epochs, config.batch_size, config.lr) == (300, 8, 1e-3)
    assert config.hidden == (256, 256)
    assert TrainingConfig.from_dict(config.to_dict()) == config
    assert config.replace(epochs=5).epochs == 5
    for bad in (
        dict(batch_size=0),
        dict(epochs=-1),
        dict(lr=0),
        dict(loss="huber"),
        dict(loss="pinball", quantile=1.5),
        dict(architecture="cnn"),
        dict(dispatch="dc"),
        dict(hidden=(8, 0)),
        dict(steps_per_epoch=1.5),
        dict(momentum=0.9),
    ):
        with pytest.raises(ConfigError):
            TrainingConfig(**bad)


def test_zero_epochs_returns_initial_model(toy_ample):
    dataset = make_samples([10.0, 12.0])
    config = TrainingConfig(epochs=0, hidden=(8,), seed=3)
    model, trace = train_value_oriented(dataset, toy_ample, config)
    fresh = ForecastModel(hidden=(8,), seed=3)
    assert all(np.array_equal(p, q) for p, q in zip(model.params, fresh.params))
    assert len(trace) == 0


def test_value_training_single_realization(toy_ample):
    """the value gradient is +70 above 10 and -20 below"""
    config = TrainingConfig(epochs=1500, batch_size=1, **LINEAR)
    model, trace = train_value_oriented(make_samples([10.0]), toy_ample, config)
    assert _constant_forecast(model) == pytest.approx(10, abs=0.5)
    assert len(trace) <= 1500
    assert trace.frame["mean_lambda"].iloc[-1] == pytest.approx(30)


def test_value_training_two_realizations(toy_ample):
    """between 8 and 12 the mean gradient (70 - 20) / 2 pushes down, below 8 it pushes up"""
    config = TrainingConfig(epochs=1500, batch_size=2, **LINEAR)
    model, _ = train_value_oriented(make_samples([8.0, 12.0]), toy_ample, config)
    assert _constant_forecast(model) == pytest.approx(8, abs=0.5)


def test_value_training_is_deterministic(toy_ample):
    dataset = make_samples([8.0, 12.0, 9.0, 11.0])
    config = TrainingConfig(epochs=6, batch_size=2, hidden=(4,), log_every=2, seed=1)
    _, a = train_value_oriented(dataset, toy_ample, config)
    _, b = train_value_oriented(dataset, toy_ample, config)
    assert np.array_equal(a.losses, b.losses)
    assert list(a.frame.columns) == list(TRACE_COLUMNS)
    assert len(a) == 6


def test_value_training_requires_capacity(toy_a):
    dataset = make_samples(np.linspace(0, 36, 5))
    with pytest.raises(CapacityAuditFailed) as info:
        train_value_oriented(dataset, toy_a, TrainingConfig(epochs=1))
    assert not info.value.report.ok
    with pytest.raises(EmptyDataset):
        train_value_oriented(make_samples([]), toy_a, TrainingConfig(epochs=1))


def test_capacity_audit(toy_a):
    dataset = make_samples(np.linspace(0, 36, 5))
    report = capacity_audit(dataset, toy_a)
    assert not report.ok
    assert report.n_checked == 5
    first = report.violations[0]
    assert (first["record"], first["kind"]) == (0, "shortage")
    assert first["required"] == pytest.approx(40)
    assert first["available"] == pytest.approx(20)
    ample = toy_a.replace(up_cap=[40], down_cap=[40])
    assert capacity_audit(dataset, ample).ok
    empty = capacity_audit(make_samples([]), toy_a)
    assert empty.ok and empty.n_checked == 0


def test_capacity_audit_day_ahead_checks(toy_ample):
    low_load = make_samples([5.0], load=30.0)
    kinds = {v["kind"] for v in capacity_audit(low_load, toy_ample).violations}
    assert kinds == {"day_ahead_wind"}
    high_load = make_samples([5.0], load=120.0)
    kinds = {v["kind"] for v in capacity_audit(high_load, toy_ample).violations}
    assert kinds == {"day_ahead_thermal"}


def test_lower_level_prices(toy_ample):
    lam, nu = lower_level_prices(
        toy_ample, np.array([[10.0], [10.0]]), np.array([[8.0], [13.0]]), np.array([[56.0], [56.0]])
    )
    assert lam.shape == nu.shape == (2, 1)
    assert_allclose(lam, [[30], [30]])
    assert_allclose(nu, [[100], [10]])


def test_lower_level_prices_relaxed_uc(toy_uc):
    lam, nu = lower_level_prices(
        toy_uc, np.array([[0.0]]), np.array([[0.0]]), np.array([[30.0]]), dispatch="uc"
    )
    # relaxed commitment prices generator 0 at 10 + 200 / 50
    assert lam[0, 0] == pytest.approx(14)


def test_value_batch_gradient_with_frozen_prices():
    rng = np.random.default_rng(0)
    model = ForecastModel(hidden=(6,), wind_cap=40, seed=2)
    features = rng.normal(size=(5, 4))
    realization = rng.uniform(0, 40, 5)
    lam, nu = rng.uniform(10, 30, 5), rng.choice([10.0, 100.0], 5)
    loss, grads = value_batch(model, features, realization, lam, nu)
    assert loss == pytest.approx(value_loss(forward(model, features), realization, lam, nu).mean())
    h = 1e-6
    for p, g in zip(model.params, grads):
        numeric = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            original = p[idx]
            p[idx] = original + h
            up = value_loss(forward(model, features), realization, lam, nu).mean()
            p[idx] = original - h
            down = value_loss(forward(model, features), realization, lam, nu).mean()
            p[idx] = original
            numeric[idx] = (up - down) / (2 * h)
        assert_allclose(g, numeric, rtol=1e-5, atol=1e-7)


def test_quality_batch_rejects_value_loss():
    model = ForecastModel(hidden=(4,))
    with pytest.raises(ConfigError):
        quality_batch(model, np.ones((1, 4)), [1.0], loss="value")


def test_mse_training_reaches_constant_target():
    config = TrainingConfig(loss="mse", epochs=2000, batch_size=1, **LINEAR)
    model, trace = train_quality(make_samples(np.full(24, 10.0)), config)
    assert _constant_forecast(model) == pytest.approx(10, abs=1e-2)
    assert np.isnan(trace.frame["mean_lambda"]).all()


def test_pinball_median_of_two_values():
    config = TrainingConfig(loss="pinball", quantile=0.5, epochs=800, batch_size=2, **LINEAR)
    model, _ = train_quality(make_samples([8.0, 12.0]), config, horizon=1)
    assert 8 - 0.1 <= _constant_forecast(model) <= 12 + 0.1


def test_pinball_quantile_of_uniform_draws():
    rng = np.random.default_rng(5)
    dataset = make_samples(rng.uniform(0, 36, 1000), features=rng.normal(size=(1000, 4)))
    config = TrainingConfig(
        loss="pinball", quantile=2 / 9, epochs=1500, batch_size=1000, **LINEAR
    )
    model, _ = train_quality(dataset, config, horizon=1)
    assert forward(model, dataset.features()).mean() == pytest.approx(8, abs=1)


def test_quality_training_needs_quality_loss():
    with pytest.raises(ConfigError):
        train_quality(make_samples([1.0]), TrainingConfig(), horizon=1)
    with pytest.raises(EmptyDataset):
        train_quality(make_samples([1.0]), TrainingConfig(loss="mse"), horizon=24)


def test_early_stop():
    config = TrainingConfig(
        loss="mse", epochs=100, batch_size=1, early_stop_window=3, early_stop_tol=1e3, **LINEAR
    )
    _, trace = train_quality(make_samples([10.0]), config, horizon=1)
    assert len(trace) == 4


def test_train_dispatches_on_loss(toy_ample, tmp_path):
    dataset = make_samples([10.0, 11.0])
    config = TrainingConfig(loss="mse", epochs=4, batch_size=1, checkpoint_every=2, **LINEAR)
    model, trace = train(dataset, toy_ample, config, run_dir=tmp_path)
    assert model.wind_cap == toy_ample.wind_cap
    assert sorted(p.name for p in tmp_path.glob("checkpoint_*.vcm")) == [
        "checkpoint_2.vcm",
        "checkpoint_4.vcm",
    ]
    _, trace = train(dataset, toy_ample, config.replace(loss="value", checkpoint_every=0))
    assert not np.isnan(trace.frame["mean_nu"]).any()


def test_relaxed_uc_lower_level(toy_uc):
    config = TrainingConfig(epochs=3, batch_size=1, dispatch="uc", **LINEAR)
    _, trace = train_value_oriented(make_samples([10.0], load=56.0), toy_uc, config)
    assert len(trace) == 3
    assert np.isfinite(trace.losses).all()


def test_save_and_load_run(tmp_path, toy_ample):
    config = TrainingConfig(epochs=2, batch_size=1, **LINEAR)
    model, trace = train_value_oriented(make_samples([10.0]), toy_ample, config)
    experiment = dict(training=config.to_dict(), market=toy_ample.to_dict())
    record = save_run(tmp_path / "run", model, trace, experiment)
    assert {p.name for p in (tmp_path / "run").iterdir()} == {
        "config.json",
        "trace.csv",
        "model.vcm",
        "run.json",
    }
    loaded_experiment, loaded_record = load_run(tmp_path / "run")
    assert loaded_experiment == json.loads(json.dumps(experiment))
    assert loaded_record == record
    assert record["epochs"] == 2
    assert record["final_loss"] == pytest.approx(trace.losses[-1])
    assert len(record["config_hash"]) == 32
    reloaded = TrainingTrace.from_csv(tmp_path / "run" / "trace.csv")
    assert_allclose(reloaded.losses, trace.losses)
    assert _constant_forecast(load_model(tmp_path / "run" / "model.vcm")) == pytest.approx(
        _constant_forecast(model)
    )


def test_load_run_errors(tmp_path):
    with pytest.raises(TrainingError):
        load_run(tmp_path / "nothing")
    (tmp_path / "trace.csv").write_text("a,b\n1,2\n")
    with pytest.raises(TrainingError):
        TrainingTrace.from_csv(tmp_path / "trace.csv")


def test_load_run_detects_replaced_checkpoint(tmp_path, toy_ample):
    config = TrainingConfig(epochs=1, batch_size=1, **LINEAR)
    model, trace = train_value_oriented(make_samples([10.0]), toy_ample, config)
    save_run(tmp_path, model, trace, dict(training=config.to_dict()))
    save_model(ForecastModel(architecture="linear", seed=9), tmp_path / "model.vcm")
    with pytest.raises(TrainingError):
        load_run(tmp_path)


@pytest.mark.slow
def test_value_training_matches_newsvendor_quantile(toy_ample):
    """with one marginal generator and ample flexibility, value training learns the
    quantile at the nominal level of the prices"""
    rng = np.random.default_rng(11)
    dataset = make_samples(rng.uniform(0, 36, 2000), load=80.0)
    level = nominal_level(30, 100, 10)
    value_model, _ = train_value_oriented(
        dataset, toy_ample, TrainingConfig(epochs=800, batch_size=32, **dict(LINEAR, lr=0.005))
    )
    pinball_model, _ = train_quality(
        dataset,
        TrainingConfig(
            loss="pinball", quantile=level, epochs=800, batch_size=32, **dict(LINEAR, lr=0.005)
        ),
        horizon=1,
    )
    y = dataset.wind()
    coverage = [np.mean(y <= _constant_forecast(m)) for m in (value_model, pinball_model)]
    assert abs(coverage[0] - coverage[1]) <= 0.05
    assert coverage[1] == pytest.approx(level, abs=0.05)
