"""
Operational-phase simulation and the comparisons built on it.

A forecast is issued for every test day, the day-ahead stage is dispatched at that
forecast and every hour is settled in the real-time stage against the realized wind.
Reports carry one record per (day, hour) and the aggregate cost and accuracy metrics.
"""

import logging
import time
from pathlib import Path
import numpy as np
import pandas as pd
from .errors import (
    ConfigError,
    DispatchInfeasible,
    EmptyDataset,
    EvaluationError,
    GridMismatch,
    InfeasibleProblem,
    NodeBudgetExceeded,
)
from .data import knn_scenarios, scale_wind, split
from .forecaster import ForecastModel, forward, nominal_level
from .jobs import map_jobs
from .lp_core import solve_milp
from .market_models import (
    build_uc,
    milp_to_uc_result,
    solve_day_ahead,
    solve_real_time_day,
    solve_stochastic,
)
from .training import TrainingConfig, train_quality, train_value_oriented
from .utils import safe_write_json, safe_write_text

logger = logging.getLogger(__name__.split(".")[0])

HOURLY_COLUMNS = (
    "approach",
    "day",
    "hour",
    "y",
    "forecast",
    "lambda",
    "nu",
    "da_cost",
    "rt_cost",
)
APPROACHES = ("proposed", "qua-e", "qua-q", "per-f", "sto-opt", "linear-ablation")
METRICS = ("avg_cost", "avg_da_cost", "avg_rt_cost", "rmse", "bias", "coverage")
# run on the market without ramp limits, apart from the main comparison
RAMP_FREE_APPROACHES = ("proposed", "qua-e", "linear-ablation")


class EvaluationReport:
    """
    Per-hour operating records of one approach and their aggregates.

    :param approach: name of the forecasting approach
    :param hourly: DataFrame with the HOURLY_COLUMNS
    :param seconds: wall-clock seconds of the operational simulation
    :param extras: additional deterministic metrics, e.g. node counts of unit commitment
    """

    def __init__(self, approach, hourly, seconds=0.0, extras=None):
        self.approach = approach
        self.hourly = hourly.loc[:, list(HOURLY_COLUMNS)].reset_index(drop=True)
        self.seconds = float(seconds)
        self.extras = dict(extras or {})

    def __len__(self):
        return len(self.hourly)

    @property
    def operating_cost(self):
        return self.hourly["da_cost"] + self.hourly["rt_cost"]

    @property
    def avg_cost(self):
        return float(self.operating_cost.mean())

    @property
    def avg_da_cost(self):
        return float(self.hourly["da_cost"].mean())

    @property
    def avg_rt_cost(self):
        return float(self.hourly["rt_cost"].mean())

    @property
    def rmse(self):
        error = self.hourly["forecast"] - self.hourly["y"]
        return float(np.sqrt(np.mean(np.square(error))))

    @property
    def bias(self):
        return float((self.hourly["forecast"] - self.hourly["y"]).mean())

    @property
    def coverage(self):
        """empirical P(y <= forecast)"""
        return float((self.hourly["y"] <= self.hourly["forecast"]).mean())

    def metrics(self):
        """
        :return: aggregate metrics; wall-clock time is kept out so equal runs give equal metrics
        """
        d = {name: getattr(self, name) for name in METRICS}
        d.update(hours=len(self), days=int(self.hourly["day"].nunique()))
        d.update(self.extras)
        return d

    def __repr__(self):
        return "EvaluationReport(%s: %d hours, avg cost %.6g $/h, RMSE %.4g kW)" % (
            self.approach,
            len(self),
            self.avg_cost,
            self.rmse,
        )


# --- operation of single days ---


def _settle(spec, day, forecast, realization, lam, da_cost):
    real_time = solve_real_time_day(spec, forecast, realization, day=day)
    return dict(
        day=np.full(spec.horizon, day),
        hour=np.arange(spec.horizon),
        y=np.asarray(realization, dtype=float),
        forecast=np.asarray(forecast, dtype=float),
        lam=np.asarray(lam, dtype=float),
        nu=np.array([rt.price for rt in real_time]),
        da_cost=np.asarray(da_cost, dtype=float),
        rt_cost=np.array([rt.cost for rt in real_time]),
    )


def _operate_uc(spec, forecast, load):
    """
    Unit commitment by branch and bound; an exhausted node budget keeps the incumbent.
    :return: (UnitCommitmentResult, whether the node budget ran out)
    """
    lp, binaries = build_uc(spec, forecast, load)
    try:
        return milp_to_uc_result(spec, lp, solve_milp(lp, binaries)), False
    except NodeBudgetExceeded as e:
        if e.solution is None:
            raise
        logger.warning("%s; continuing with the incumbent" % e.args[0])
        return milp_to_uc_result(spec, lp, e.solution), True
    except InfeasibleProblem:
        raise DispatchInfeasible("Unit commitment has no feasible commitment")


def _operate_day(context, key):
    spec, dispatch = context
    day, forecast, realization, load = key
    extras = {}
    if dispatch == "uc":
        uc, exceeded = _operate_uc(spec, forecast, load)
        day_ahead = uc.day_ahead
        da_cost = day_ahead.schedule @ spec.gen_cost + day_ahead.commitment @ spec.commit_cost
        extras = dict(node_count=uc.node_count, gap=uc.gap, budget_exceeded=exceeded)
    else:
        day_ahead = solve_day_ahead(spec, forecast, load)
        da_cost = day_ahead.schedule @ spec.gen_cost
    return _settle(spec, day, forecast, realization, day_ahead.balance_duals, da_cost), extras


def _stochastic_day(context, key):
    spec, settlement = context
    day, scenarios, probs, realization, load = key
    result = solve_stochastic(spec, load, scenarios, probs)
    forecast = np.clip(result.forecast, 0.0, spec.wind_cap)
    record = _settle(
        settlement,
        day,
        forecast,
        realization,
        result.balance_duals,
        result.schedule @ spec.gen_cost,
    )
    return record, {}


def _report(approach, outputs, seconds):
    records = [r for r, _ in outputs]
    hourly = pd.DataFrame(
        {
            column: np.concatenate([r[key] for r in records])
            for column, key in zip(
                HOURLY_COLUMNS[1:],
                ("day", "hour", "y", "forecast", "lam", "nu", "da_cost", "rt_cost"),
            )
        }
    )
    hourly.insert(0, "approach", approach)
    extras = {}
    per_day = [e for _, e in outputs if e]
    if per_day:
        extras = dict(
            node_count=int(sum(e["node_count"] for e in per_day)),
            max_gap=float(max(e["gap"] for e in per_day)),
            budget_exceeded_days=int(sum(e["budget_exceeded"] for e in per_day)),
        )
    return EvaluationReport(approach, hourly, seconds=seconds, extras=extras)


def issue_forecasts(model_or_forecasts, dataset, horizon):
    """
    :param model_or_forecasts: a ForecastModel, or forecasts for every whole-day hour
    :return: D x T forecasts
    """
    features, wind, _ = dataset.days(horizon)
    if isinstance(model_or_forecasts, ForecastModel):
        if not features.shape[0]:
            return np.zeros((0, horizon))
        return forward(model_or_forecasts, features.reshape(-1, features.shape[2])).reshape(
            -1, horizon
        )
    forecasts = np.asarray(model_or_forecasts, dtype=float)
    if forecasts.size != wind.size:
        raise EvaluationError(
            "%d forecasts for %d test hours" % (forecasts.size, wind.size)
        )
    return forecasts.reshape(-1, horizon)


def simulate_operation(model_or_forecasts, dataset_test, spec, approach="proposed", dispatch="ed"):
    """
    Run the operational phase on the test days: day-ahead dispatch at the issued forecast,
    then real-time settlement of every hour.

    :param model_or_forecasts: ForecastModel or an array of forecasts per test hour
    :param dispatch: "ed" for economic dispatch, "uc" for unit commitment by branch and bound
    :return: EvaluationReport
    :raises EmptyDataset: no whole test day
    :raises BalancingInfeasible: with the offending day and hour
    """
    _, wind, load = dataset_test.days(spec.horizon)
    if not wind.shape[0]:
        raise EmptyDataset("The test set holds no whole day")
    tic = time.perf_counter()
    forecasts = issue_forecasts(model_or_forecasts, dataset_test, spec.horizon)
    keys = list(zip(range(len(wind)), forecasts, wind, load))
    outputs, _ = map_jobs(_operate_day, keys, (spec, dispatch), desc="Operation")
    report = _report(approach, outputs, time.perf_counter() - tic)
    logger.info("Operated %s: %r" % (approach, report))
    return report


def perfect_forecasts(dataset_test, spec):
    """The realized wind, issued as forecast"""
    return dataset_test.days(spec.horizon)[1]


def evaluate_sto_opt_with(
    scenarios, probs, dataset_test, spec, approach="sto-opt", operating_spec=None
):
    """
    Stochastic dispatch with given scenarios: the first-stage schedule and wind forecast of
    the extensive form are kept and every hour is settled against the realization.

    :param scenarios: per test day an S x T array
    :param probs: per test day S probabilities
    :param operating_spec: market of the real-time settlement, default spec
    """
    _, wind, load = dataset_test.days(spec.horizon)
    if not wind.shape[0]:
        raise EmptyDataset("The test set holds no whole day")
    if len(scenarios) != len(wind) or len(probs) != len(wind):
        raise EvaluationError(
            "Scenario sets for %d days, test set has %d days" % (len(scenarios), len(wind))
        )
    tic = time.perf_counter()
    keys = list(zip(range(len(wind)), scenarios, probs, wind, load))
    outputs, _ = map_jobs(
        _stochastic_day, keys, (spec, operating_spec or spec), desc="Stochastic dispatch"
    )
    report = _report(approach, outputs, time.perf_counter() - tic)
    logger.info("Operated %s: %r" % (approach, report))
    return report


def evaluate_sto_opt(
    dataset_test, train_set, spec, k=50, n_scenarios=50, seed=0, operating_spec=None
):
    """
    Two-stage stochastic benchmark: per test day, wind scenarios from the realizations of
    the k nearest training neighbors of every hour, then evaluate_sto_opt_with.
    The extensive form is planned on spec and settled on operating_spec.
    Scenario sampling is included in the wall-clock time.
    """
    features, wind, _ = dataset_test.days(spec.horizon)
    if not wind.shape[0]:
        raise EmptyDataset("The test set holds no whole day")
    tic = time.perf_counter()
    draws = [
        knn_scenarios(train_set, features[d], k=k, n_scenarios=n_scenarios, seed=seed + d)
        for d in range(features.shape[0])
    ]
    sampling = time.perf_counter() - tic
    report = evaluate_sto_opt_with(
        [scenarios for scenarios, _ in draws],
        [probs for _, probs in draws],
        dataset_test,
        spec,
        operating_spec=operating_spec,
    )
    report.seconds += sampling
    report.extras.update(k=int(k), scenarios=int(n_scenarios))
    return report


def evaluate_uc(model_or_forecasts, dataset_test, spec, approach="proposed"):
    """
    Day-ahead stage with binary commitment solved by branch and bound, real-time settlement
    unchanged. Days whose node budget ran out keep the incumbent and are counted.
    """
    return simulate_operation(
        model_or_forecasts, dataset_test, spec, approach=approach, dispatch="uc"
    )


def evaluate_with_override(
    model_or_forecasts, dataset_test, spec, up_cost=None, down_utility=None, approach="proposed"
):
    """
    Operate with substituted real-time prices; the model is unchanged.
    """
    override = spec.with_rt_override(up_cost=up_cost, down_utility=down_utility)
    return simulate_operation(model_or_forecasts, dataset_test, override, approach=approach)


# --- analyses ---


def cost_reduction_by_dual_gap(report_proposed, report_baseline, bins=4):
    """
    Mean hourly cost reduction of the proposed approach over a baseline, with hours
    grouped into equally populated bins of the price gap lambda - nu under the proposed
    forecasts.

    :return: DataFrame with columns bin, gap_low, gap_high, hours, mean_reduction
    :raises GridMismatch: the reports do not cover the same (day, hour) grid
    """
    grid = ["day", "hour"]
    if not report_proposed.hourly[grid].equals(report_baseline.hourly[grid]):
        raise GridMismatch("Reports cover different (day, hour) grids")
    if not 1 <= bins <= len(report_proposed):
        raise EvaluationError(
            "Cannot form %d bins from %d hours" % (bins, len(report_proposed))
        )
    gap = report_proposed.hourly["lambda"] - report_proposed.hourly["nu"]
    frame = pd.DataFrame(
        dict(
            bin=pd.qcut(gap.rank(method="first"), bins, labels=False),
            gap=gap,
            reduction=report_baseline.operating_cost - report_proposed.operating_cost,
        )
    )
    table = frame.groupby("bin").agg(
        gap_low=("gap", "min"),
        gap_high=("gap", "max"),
        hours=("gap", "size"),
        mean_reduction=("reduction", "mean"),
    )
    return table.reset_index()


def market_nominal_level(spec, dataset):
    """
    Critical fractile of the market: the day-ahead price of the generator that is marginal
    at the median load of the dataset, the cheapest up resource and the most valuable down
    resource. The wind column does not enter, so the level is fixed before any forecast.
    """
    if not len(dataset):
        raise EmptyDataset("The nominal level needs data")
    median_load = float(np.median(dataset.load()))
    order = np.argsort(spec.gen_cost, kind="stable")
    covered = np.cumsum(spec.gen_cap[order])
    marginal = order[min(np.searchsorted(covered, median_load), len(order) - 1)]
    return nominal_level(
        spec.gen_cost[marginal], float(spec.up_cost.min()), float(spec.down_utility.max())
    )


def run_approach(
    approach,
    train_set,
    test_set,
    spec,
    training_config=None,
    k=50,
    n_scenarios=50,
    seed=0,
    dispatch="ed",
    operating_spec=None,
):
    """
    Train (where needed) on spec and operate one forecasting approach.

    :param approach: one of APPROACHES. linear-ablation is the value-oriented loop with a
        linear model, on the market it is given like every other approach
    :param dispatch: "uc" trains the value-oriented approaches on the relaxed commitment and
        operates with binary commitment
    :param operating_spec: market of the operational phase, e.g. with substituted real-time
        prices; default spec. The stochastic benchmark plans on spec and settles on
        operating_spec.
    :return: (EvaluationReport, trained ForecastModel or None)
    """
    if approach not in APPROACHES:
        raise ConfigError("Unknown approach %r, use one of %s" % (approach, APPROACHES))
    config = training_config or TrainingConfig()
    operate = evaluate_uc if dispatch == "uc" else simulate_operation
    if operating_spec is None:
        operating_spec = spec
    model = None
    if approach == "per-f":
        forecasts = perfect_forecasts(test_set, spec)
        return operate(forecasts, test_set, operating_spec, approach=approach), None
    if approach == "sto-opt":
        if dispatch == "uc":
            raise ConfigError("The stochastic benchmark runs with economic dispatch only")
        report = evaluate_sto_opt(
            test_set,
            train_set,
            spec,
            k=k,
            n_scenarios=n_scenarios,
            seed=seed,
            operating_spec=operating_spec,
        )
        return report, None
    if approach == "proposed":
        model, _ = train_value_oriented(
            train_set, spec, config.replace(loss="value", dispatch=dispatch)
        )
    elif approach == "linear-ablation":
        model, _ = train_value_oriented(
            train_set, spec, config.replace(loss="value", architecture="linear", dispatch=dispatch)
        )
    elif approach == "qua-e":
        model, _ = train_quality(
            train_set, config.replace(loss="mse"), horizon=spec.horizon, wind_cap=spec.wind_cap
        )
    else:
        level = market_nominal_level(spec, train_set)
        logger.info("Pinball training at nominal level %.6g" % level)
        model, _ = train_quality(
            train_set,
            config.replace(loss="pinball", quantile=level),
            horizon=spec.horizon,
            wind_cap=spec.wind_cap,
        )
    return operate(model, test_set, operating_spec, approach=approach), model


def ramp_free_comparison(
    train_set,
    test_set,
    spec,
    training_config=None,
    approaches=RAMP_FREE_APPROACHES,
    operating_spec=None,
    **options
):
    """
    The linear model of the value-oriented loop against the MLP approaches on the market
    without ramp limits. Every approach of this comparison is trained and operated without
    ramps, so its reports belong in a table of their own.

    :param options: passed to run_approach (k, n_scenarios, seed, dispatch)
    :return: list of EvaluationReports
    """
    free = spec.without_ramps()
    operating = None if operating_spec is None else operating_spec.without_ramps()
    logger.info("Ramp-free comparison of %s" % ", ".join(approaches))
    return [
        run_approach(
            approach,
            train_set,
            test_set,
            free,
            training_config,
            operating_spec=operating,
            **options
        )[0]
        for approach in approaches
    ]


def comparison_table(reports):
    """
    :param reports: EvaluationReports of several approaches
    :return: DataFrame with one row of metrics per approach
    """
    return pd.DataFrame(
        [dict(approach=r.approach, **{m: getattr(r, m) for m in METRICS}) for r in reports],
        columns=["approach"] + list(METRICS),
    )


def capacity_sweep(
    dataset,
    spec,
    capacities,
    approaches=("per-f", "proposed", "qua-e"),
    training_config=None,
    train_frac=0.8,
    up_cost=None,
    down_utility=None,
    **options
):
    """
    Rescale the wind to every capacity, split, retrain and operate each approach.

    :param capacities: wind capacities (kW)
    :param up_cost: real-time up prices of the operational phase, as in with_rt_override
    :param down_utility: real-time down utilities of the operational phase
    :param options: passed to run_approach (k, n_scenarios, seed, dispatch)
    :return: DataFrame with columns approach, capacity and the aggregate metrics
    """
    rows = []
    for capacity in capacities:
        if capacity < 0:
            raise ConfigError("Wind capacity must be non-negative")
        multiplier = capacity / dataset.wind_cap if dataset.wind_cap > 0 else 0.0
        scaled = scale_wind(dataset, multiplier)
        spec_c = spec.replace(wind_cap=float(capacity))
        operating = spec_c.with_rt_override(up_cost=up_cost, down_utility=down_utility)
        train_set, test_set = split(scaled, train_frac, spec.horizon)
        for approach in approaches:
            report, _ = run_approach(
                approach,
                train_set,
                test_set,
                spec_c,
                training_config,
                operating_spec=operating,
                **options
            )
            rows.append(
                dict(
                    approach=approach,
                    capacity=float(capacity),
                    **{m: getattr(report, m) for m in METRICS}
                )
            )
        logger.info("Capacity %g kW done" % capacity)
    return pd.DataFrame(rows, columns=["approach", "capacity"] + list(METRICS))


# --- output ---


def write_report(reports, out_dir, extra=None):
    """
    Write metrics.json (aggregates per approach), timing.json (wall-clock seconds) and
    hourly.csv (all hourly records).

    :param reports: an EvaluationReport or a list of them
    :param extra: additional JSON-compatible entries of metrics.json
    """
    if isinstance(reports, EvaluationReport):
        reports = [reports]
    out_dir = Path(out_dir)
    metrics = dict(extra or {})
    metrics["approaches"] = {r.approach: r.metrics() for r in reports}
    safe_write_json(out_dir / "metrics.json", metrics)
    safe_write_json(out_dir / "timing.json", {r.approach: r.seconds for r in reports})
    hourly = pd.concat([r.hourly for r in reports], ignore_index=True)
    safe_write_text(out_dir / "hourly.csv", hourly.to_csv(index=False))
    logger.info("Wrote %d reports to %s" % (len(reports), out_dir))
    return metrics
