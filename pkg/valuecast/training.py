"""
Training loops of the forecasting models.

Value-oriented training alternates between the upper level (the forecast model) and
the lower level (the day-ahead and real-time dispatch). Each step forecasts a batch of
days, solves the dispatch problems at those forecasts to obtain the day-ahead prices
lam and real-time prices nu, and takes one Adam step on the batch loss
(1/BT) sum(-lam * forecast - nu * (realization - forecast)) with the prices frozen.
Quality-oriented training fits the same models under MSE or pinball loss.
"""

import json
import logging
import time
from collections import namedtuple
from pathlib import Path
import numpy as np
import pandas as pd
from .errors import (
    ConfigError,
    EmptyDataset,
    CapacityAuditFailed,
    TrainingError,
)
from .forecaster import (
    ARCHITECTURES,
    ForecastModel,
    AdamState,
    adam_step,
    backward,
    forward,
    mse_loss,
    mse_loss_grad,
    pinball_loss,
    pinball_loss_grad,
    value_loss,
    save_model,
)
from .hash import file_digest, key_hash
from .jobs import map_jobs
from .market_models import solve_day_ahead, solve_real_time_day, solve_relaxed_uc
from .utils import safe_write_json, safe_write_text, to_builtin
from .version import __version__

logger = logging.getLogger(__name__.split(".")[0])

LOSSES = ("value", "mse", "pinball")
DISPATCH_MODELS = ("ed", "uc")
TRACE_COLUMNS = ("epoch", "mean_loss", "mean_lambda", "mean_nu", "seconds")
TOL_AUDIT = 1e-9


class TrainingConfig:
    """
    Hyperparameters of a training run.

    :param epochs: number of epochs; each epoch takes steps_per_epoch Adam steps
    :param batch_size: days per batch
    :param lr: Adam learning rate
    :param seed: seeds the weight initialization and the batch sampling
    :param loss: "value", "mse" or "pinball"
    :param quantile: quantile level of the pinball loss
    :param architecture: "mlp" or "linear"
    :param hidden: hidden layer sizes of the MLP
    :param log_every: epochs between progress messages, 0 to log only the summary
    :param steps_per_epoch: batches drawn per epoch
    :param checkpoint_every: epochs between checkpoints in the run directory, 0 for none
    :param dispatch: lower level of value-oriented training, "ed" for economic dispatch or
        "uc" for the relaxed unit commitment
    :param early_stop_tol: stop when the epoch loss moved less than this over the window
    :param early_stop_window: epochs in the early-stop window, 0 to disable
    """

    _defaults = dict(
        epochs=300,
        batch_size=8,
        lr=1e-3,
        seed=0,
        loss="value",
        quantile=0.5,
        architecture="mlp",
        hidden=(256, 256),
        log_every=10,
        steps_per_epoch=1,
        checkpoint_every=0,
        dispatch="ed",
        early_stop_tol=1e-6,
        early_stop_window=20,
    )

    def __init__(self, **fields):
        unknown = set(fields) - set(self._defaults)
        if unknown:
            raise ConfigError("Unknown training fields: %s" % ", ".join(sorted(unknown)))
        for name, value in self._defaults.items():
            setattr(self, name, fields.get(name, value))
        self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self):
        for name in ("epochs", "log_every", "checkpoint_every", "early_stop_window"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 0:
                raise ConfigError("%s must be a non-negative integer" % name)
        for name in ("batch_size", "steps_per_epoch"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ConfigError("%s must be a positive integer" % name)
        if not self.lr > 0:
            raise ConfigError("The learning rate must be positive")
        if self.loss not in LOSSES:
            raise ConfigError("Unknown loss %r, use one of %s" % (self.loss, LOSSES))
        if self.loss == "pinball" and not 0.0 < self.quantile < 1.0:
            raise ConfigError("Quantile level %r outside (0, 1)" % self.quantile)
        if self.architecture not in ARCHITECTURES:
            raise ConfigError("Unknown architecture %r" % self.architecture)
        if self.dispatch not in DISPATCH_MODELS:
            raise ConfigError(
                "Unknown dispatch model %r, use one of %s" % (self.dispatch, DISPATCH_MODELS)
            )
        if any(h < 1 for h in self.hidden):
            raise ConfigError("Hidden layer sizes must be positive")

    def to_dict(self):
        d = {name: getattr(self, name) for name in self._defaults}
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def replace(self, **fields):
        d = self.to_dict()
        d.update(fields)
        return TrainingConfig(**d)

    def __eq__(self, other):
        return isinstance(other, TrainingConfig) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "TrainingConfig(%s)" % ", ".join(
            "%s=%r" % (k, v) for k, v in self.to_dict().items()
        )


class TrainingTrace:
    """
    Per-epoch record of a training run: mean batch loss, mean day-ahead and real-time
    prices of the batch (NaN for quality-oriented runs) and wall-clock seconds.
    """

    def __init__(self, records=None):
        self._records = list(records or [])

    def append(self, epoch, mean_loss, mean_lambda, mean_nu, seconds):
        self._records.append(
            (int(epoch), float(mean_loss), float(mean_lambda), float(mean_nu), float(seconds))
        )

    def __len__(self):
        return len(self._records)

    @property
    def losses(self):
        return np.array([r[1] for r in self._records])

    @property
    def seconds(self):
        return float(sum(r[4] for r in self._records))

    @property
    def frame(self):
        return pd.DataFrame(self._records, columns=list(TRACE_COLUMNS))

    def to_csv(self, path):
        safe_write_text(Path(path), self.frame.to_csv(index=False))

    @classmethod
    def from_csv(cls, path):
        frame = pd.read_csv(path)
        if tuple(frame.columns) != TRACE_COLUMNS:
            raise TrainingError("%s is not a training trace" % path)
        return cls(frame.itertuples(index=False, name=None))

    def __repr__(self):
        if not self._records:
            return "TrainingTrace(empty)"
        return "TrainingTrace(%d epochs, final loss %.6g)" % (len(self), self._records[-1][1])


# --- capacity audit ---


class CapacityReport(namedtuple("_CapacityReport", ("violations", "n_checked"))):
    """
    violations: list of dicts (record, kind, forecast, realization, load, required, available)
    n_checked: number of records audited
    """

    __slots__ = ()

    @property
    def ok(self):
        return not self.violations


def capacity_audit(dataset, spec):
    """
    Check that every record can be dispatched for any forecast in [0, wind_cap]: the worst
    shortage (forecast = wind_cap) and the worst surplus (forecast = 0) must fit the flexible
    capacities, and the day-ahead balance must be servable at both forecast extremes.
    Report only; nothing is raised.

    :return: CapacityReport
    """
    wind, load = dataset.wind(), dataset.load()
    up, down = float(spec.up_cap.sum()), float(spec.down_cap.sum())
    thermal = float(spec.gen_cap.sum())
    violations = []
    for record, (y, l) in enumerate(zip(wind, load)):
        checks = (
            ("shortage", spec.wind_cap, spec.wind_cap - y, up),
            ("surplus", 0.0, y, down),
            ("day_ahead_wind", spec.wind_cap, spec.wind_cap, l),
            ("day_ahead_thermal", 0.0, l, thermal),
        )
        for kind, forecast, required, available in checks:
            if required > available + TOL_AUDIT:
                violations.append(
                    dict(
                        record=record,
                        kind=kind,
                        forecast=float(forecast),
                        realization=float(y),
                        load=float(l),
                        required=float(required),
                        available=available,
                    )
                )
    return CapacityReport(violations=violations, n_checked=len(wind))


def _require_capacity(dataset, spec):
    report = capacity_audit(dataset, spec)
    if not report.ok:
        first = report.violations[0]
        raise CapacityAuditFailed(
            "%d records cannot be dispatched for every forecast in [0, %g] kW; "
            "first: record %d needs %g kW of %s capacity, %g kW available"
            % (
                len(report.violations),
                spec.wind_cap,
                first["record"],
                first["required"],
                first["kind"],
                first["available"],
            ),
            report=report,
        )


# --- batch losses and gradients ---


def value_batch(model, features, realization, lam, nu):
    """
    Mean value loss of a batch with frozen prices and its gradient in the parameters:
    (1/N) sum (nu - lam) * d forecast / d params.

    :param features: N x input_dim
    :param realization, lam, nu: length-N arrays
    :return: (mean loss, list of gradients)
    """
    forecast = forward(model, features)
    n = forecast.size
    loss = value_loss(forecast, realization, lam, nu).mean()
    grads = backward(model, features, (np.asarray(nu) - np.asarray(lam)) / n)
    return float(loss), grads


def quality_batch(model, features, realization, loss="mse", quantile=0.5):
    """
    Mean MSE or pinball loss of a batch and its gradient in the parameters.
    """
    forecast = forward(model, features)
    n = forecast.size
    if loss == "mse":
        value = mse_loss(forecast, realization).mean()
        upstream = mse_loss_grad(forecast, realization) / n
    elif loss == "pinball":
        value = pinball_loss(forecast, realization, quantile).mean()
        upstream = pinball_loss_grad(forecast, realization, quantile) / n
    else:
        raise ConfigError("Quality-oriented training takes mse or pinball, not %r" % loss)
    return float(value), backward(model, features, upstream)


# --- lower level ---


def _dispatch_prices(context, key):
    """
    Day-ahead and real-time prices of one day at the given forecast. Runs in a worker.
    """
    spec, dispatch = context
    day, forecast, realization, load = key
    if dispatch == "uc":
        day_ahead = solve_relaxed_uc(spec, forecast, load)
    else:
        day_ahead = solve_day_ahead(spec, forecast, load)
    real_time = solve_real_time_day(spec, forecast, realization, day=day)
    return day_ahead.balance_duals, np.array([rt.price for rt in real_time])


def lower_level_prices(spec, forecasts, realizations, loads, days=None, dispatch="ed"):
    """
    Solve the day-ahead dispatch per day and the real-time balancing per hour.

    :param forecasts, realizations, loads: B x T arrays
    :param days: day indices used in error messages
    :return: (lam, nu) as B x T arrays
    """
    if days is None:
        days = range(len(forecasts))
    keys = list(zip(days, forecasts, realizations, loads))
    results, _ = map_jobs(
        _dispatch_prices, keys, (spec, dispatch), desc="Dispatch"
    )
    lam = np.array([r[0] for r in results]).reshape(len(keys), spec.horizon)
    nu = np.array([r[1] for r in results]).reshape(len(keys), spec.horizon)
    return lam, nu


# --- training loops ---


def _initial_model(dataset, config, wind_cap):
    mean, std = dataset.standardization()
    return ForecastModel(
        input_dim=dataset.features().shape[1],
        hidden=config.hidden,
        wind_cap=wind_cap,
        architecture=config.architecture,
        seed=config.seed,
        feature_mean=mean,
        feature_std=std,
    )


def _sample_days(rng, n_days, batch_size):
    return np.sort(rng.choice(n_days, size=batch_size, replace=batch_size > n_days))


def _converged(losses, config):
    window = config.early_stop_window
    if not window or len(losses) <= window:
        return False
    recent = losses[-window - 1 :]
    return max(recent) - min(recent) < config.early_stop_tol


def _log_epoch(config, epoch, trace):
    if config.log_every and (epoch + 1) % config.log_every == 0:
        _, mean_loss, mean_lambda, mean_nu, seconds = trace._records[-1]
        logger.info(
            "Epoch %d/%d: loss %.6g, mean lambda %.4g, mean nu %.4g (%.2fs)"
            % (epoch + 1, config.epochs, mean_loss, mean_lambda, mean_nu, seconds)
        )


def _checkpoint(run_dir, config, epoch, model):
    if run_dir is not None and config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
        save_model(model, Path(run_dir) / ("checkpoint_%d.vcm" % (epoch + 1)))


def train_value_oriented(dataset, spec, config, run_dir=None):
    """
    Train a forecast model against the dispatch cost it causes.

    :param dataset: training SampleSet
    :param spec: MarketSpec of the lower-level dispatch
    :param config: TrainingConfig
    :param run_dir: optional folder receiving periodic checkpoints
    :return: (ForecastModel, TrainingTrace)
    :raises CapacityAuditFailed: some record cannot be balanced for every forecast
    """
    features, wind, load = dataset.days(spec.horizon)
    n_days = features.shape[0]
    if not n_days:
        raise EmptyDataset("Value-oriented training needs at least one whole day")
    _require_capacity(dataset, spec)
    model = _initial_model(dataset, config, spec.wind_cap)
    state = AdamState(model.params, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    trace = TrainingTrace()
    logger.info(
        "Value-oriented training of %r on %d days for %d epochs"
        % (model, n_days, config.epochs)
    )
    for epoch in range(config.epochs):
        tic = time.perf_counter()
        losses, lams, nus = [], [], []
        for _ in range(config.steps_per_epoch):
            days = _sample_days(rng, n_days, config.batch_size)
            s = features[days].reshape(-1, features.shape[2])
            forecasts = forward(model, s).reshape(len(days), spec.horizon)
            lam, nu = lower_level_prices(
                spec, forecasts, wind[days], load[days], days=days, dispatch=config.dispatch
            )
            loss, grads = value_batch(model, s, wind[days].ravel(), lam.ravel(), nu.ravel())
            model.params = adam_step(model.params, grads, state)
            losses.append(loss)
            lams.append(lam.mean())
            nus.append(nu.mean())
        trace.append(
            epoch, np.mean(losses), np.mean(lams), np.mean(nus), time.perf_counter() - tic
        )
        _log_epoch(config, epoch, trace)
        _checkpoint(run_dir, config, epoch, model)
        if _converged(trace.losses, config):
            logger.warning(
                "Early stop after epoch %d: loss changed less than %g over %d epochs"
                % (epoch + 1, config.early_stop_tol, config.early_stop_window)
            )
            break
    return model, trace


def train_quality(dataset, config, horizon=24, wind_cap=None, run_dir=None):
    """
    Train a forecast model under the MSE or pinball loss of config.loss.

    :param dataset: training SampleSet
    :param horizon: hours per day of the batches
    :param wind_cap: output scale, default dataset.wind_cap
    :return: (ForecastModel, TrainingTrace)
    """
    if config.loss == "value":
        raise ConfigError("Value-oriented training needs a market, use train_value_oriented")
    features, wind, _ = dataset.days(horizon)
    n_days = features.shape[0]
    if not n_days:
        raise EmptyDataset("Training needs at least one whole day")
    model = _initial_model(
        dataset, config, dataset.wind_cap if wind_cap is None else wind_cap
    )
    state = AdamState(model.params, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    trace = TrainingTrace()
    logger.info(
        "%s training of %r on %d days for %d epochs"
        % (config.loss.upper(), model, n_days, config.epochs)
    )
    for epoch in range(config.epochs):
        tic = time.perf_counter()
        losses = []
        for _ in range(config.steps_per_epoch):
            days = _sample_days(rng, n_days, config.batch_size)
            loss, grads = quality_batch(
                model,
                features[days].reshape(-1, features.shape[2]),
                wind[days].ravel(),
                config.loss,
                config.quantile,
            )
            model.params = adam_step(model.params, grads, state)
            losses.append(loss)
        trace.append(epoch, np.mean(losses), np.nan, np.nan, time.perf_counter() - tic)
        _log_epoch(config, epoch, trace)
        _checkpoint(run_dir, config, epoch, model)
        if _converged(trace.losses, config):
            logger.warning(
                "Early stop after epoch %d: loss changed less than %g over %d epochs"
                % (epoch + 1, config.early_stop_tol, config.early_stop_window)
            )
            break
    return model, trace


def train(dataset, spec, config, run_dir=None):
    """
    Dispatch to the training loop selected by config.loss.
    """
    if config.loss == "value":
        return train_value_oriented(dataset, spec, config, run_dir=run_dir)
    return train_quality(
        dataset, config, horizon=spec.horizon, wind_cap=spec.wind_cap, run_dir=run_dir
    )


# --- run directory ---


def save_run(run_dir, model, trace, experiment):
    """
    Write a training run: config.json, trace.csv, model.vcm and run.json.

    :param experiment: JSON-compatible description of the run (config sections)
    :return: the run record written to run.json
    """
    run_dir = Path(run_dir)
    safe_write_json(run_dir / "config.json", experiment)
    trace.to_csv(run_dir / "trace.csv")
    digest = save_model(model, run_dir / "model.vcm")
    record = dict(
        config_hash=key_hash(to_builtin(experiment)),
        checkpoint="model.vcm",
        checkpoint_digest=digest,
        version=__version__,
        epochs=len(trace),
        final_loss=float(trace.losses[-1]) if len(trace) else None,
        training_seconds=trace.seconds,
    )
    safe_write_json(run_dir / "run.json", record)
    logger.info("Wrote training run to %s" % run_dir)
    return record


def load_run(run_dir):
    """
    :return: (experiment config dict, run record dict)
    """
    run_dir = Path(run_dir)
    try:
        experiment = json.loads((run_dir / "config.json").read_text())
        record = json.loads((run_dir / "run.json").read_text())
    except (OSError, ValueError) as e:
        raise TrainingError("Cannot read training run %s: %s" % (run_dir, e))
    checkpoint = run_dir / record.get("checkpoint", "model.vcm")
    if checkpoint.is_file() and file_digest(checkpoint) != record.get("checkpoint_digest"):
        raise TrainingError("Checkpoint %s does not match its run record" % checkpoint)
    return experiment, record
