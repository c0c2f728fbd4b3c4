"""
Dispatch models of a single-node virtual power plant expressed as LinearPrograms.

Day-ahead stage: thermal schedule x (T x n_gen) serving load net of the wind forecast.
Real-time stage: flexible up/down resources balancing the forecast deviation of one hour.
Also the extensive form of the two-stage stochastic dispatch, unit commitment and its
LP relaxation, and the dual decomposition linking the two stages to the forecast.

Variables are flattened hour-major: x[t, i] sits at index t * n_gen + i.
"""

import logging
from collections import namedtuple
import numpy as np
from .errors import (
    ConfigError,
    InfeasibleByConstruction,
    DispatchInfeasible,
    BalancingInfeasible,
    IdentityViolation,
    ScaleExceeded,
    InfeasibleProblem,
)
from .lp_core import LinearProgram, LpStatus, solve_lp, solve_milp, TOL_GAP
from .settings import config

logger = logging.getLogger(__name__.split(".")[0])

TOL_INPUT = 1e-9

_spec_fields = (
    "gen_cost",
    "gen_cap",
    "ramp",
    "up_cost",
    "up_cap",
    "down_utility",
    "down_cap",
    "wind_cap",
    "horizon",
    "commit_cost",
)


class MarketSpec:
    """
    Physical and economic parameters of the dispatch problems.

    :param gen_cost: generator marginal costs rho ($/kW)
    :param gen_cap: generator capacities (kW)
    :param ramp: ramp limits (kW/h), inf or None for no limit
    :param up_cost: flexible-up costs ($/kW)
    :param up_cap: flexible-up capacities (kW)
    :param down_utility: flexible-down utilities ($/kW)
    :param down_cap: flexible-down capacities (kW)
    :param wind_cap: wind capacity (kW)
    :param horizon: hours per day T
    :param commit_cost: hourly commitment costs of the unit commitment models ($)
    """

    def __init__(
        self,
        gen_cost,
        gen_cap,
        up_cost,
        up_cap,
        down_utility,
        down_cap,
        wind_cap,
        horizon=24,
        ramp=None,
        commit_cost=None,
    ):
        self.gen_cost = np.asarray(gen_cost, dtype=float).ravel()
        n_gen = self.gen_cost.size
        self.gen_cap = np.asarray(gen_cap, dtype=float).ravel()
        if ramp is None:
            ramp = np.full(n_gen, np.inf)
        self.ramp = np.array(
            [np.inf if r is None else r for r in np.atleast_1d(ramp)], dtype=float
        )
        self.up_cost = np.asarray(up_cost, dtype=float).ravel()
        self.up_cap = np.asarray(up_cap, dtype=float).ravel()
        self.down_utility = np.asarray(down_utility, dtype=float).ravel()
        self.down_cap = np.asarray(down_cap, dtype=float).ravel()
        self.wind_cap = float(wind_cap)
        self.horizon = int(horizon)
        self.commit_cost = (
            np.zeros(n_gen)
            if commit_cost is None
            else np.asarray(commit_cost, dtype=float).ravel()
        )
        self.validate()

    @property
    def n_gen(self):
        return self.gen_cost.size

    @property
    def n_up(self):
        return self.up_cost.size

    @property
    def n_down(self):
        return self.down_utility.size

    def validate(self):
        n_gen = self.n_gen
        if n_gen == 0:
            raise ConfigError("A market needs at least one generator")
        for name in ("gen_cap", "ramp", "commit_cost"):
            if getattr(self, name).shape != (n_gen,):
                raise ConfigError("%s must hold one value per generator" % name)
        if self.up_cap.shape != self.up_cost.shape:
            raise ConfigError("up_cap must hold one value per flexible-up resource")
        if self.down_cap.shape != self.down_utility.shape:
            raise ConfigError("down_cap must hold one value per flexible-down resource")
        if self.horizon < 1:
            raise ConfigError("The horizon must span at least one hour")
        for name in _spec_fields:
            value = np.atleast_1d(getattr(self, name))
            if np.isnan(value).any() or (value < 0).any():
                raise ConfigError("%s must be non-negative" % name)
        for name in ("gen_cost", "gen_cap", "up_cost", "up_cap", "down_utility"):
            if not np.isfinite(getattr(self, name)).all():
                raise ConfigError("%s must be finite" % name)
        if not np.isfinite(self.wind_cap):
            raise ConfigError("wind_cap must be finite")

    def to_dict(self):
        """
        :return: JSON-compatible dict; unlimited ramps are written as None
        """
        d = {name: getattr(self, name) for name in _spec_fields}
        d = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}
        d["ramp"] = [None if np.isinf(r) else r for r in self.ramp]
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(_spec_fields)
        if unknown:
            raise ConfigError("Unknown market fields: %s" % ", ".join(sorted(unknown)))
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError("Incomplete market section: %s" % e)

    def replace(self, **fields):
        """
        :return: a copy of this spec with the given fields replaced
        """
        d = self.to_dict()
        d.update(fields)
        return MarketSpec.from_dict(d)

    def without_ramps(self):
        return self.replace(ramp=[None] * self.n_gen)

    def with_rt_override(self, up_cost=None, down_utility=None):
        """
        Spec with substituted real-time prices. A single value applies to every resource,
        a list of values is spread evenly over the resources from its minimum to its maximum
        (a single resource takes the midpoint).
        """
        fields = {}
        if up_cost is not None:
            fields["up_cost"] = _spread(up_cost, self.n_up)
        if down_utility is not None:
            fields["down_utility"] = _spread(down_utility, self.n_down)
        return self.replace(**fields)

    def __eq__(self, other):
        return isinstance(other, MarketSpec) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "MarketSpec(%d generators, %d up, %d down, wind %g kW, T=%d)" % (
            self.n_gen,
            self.n_up,
            self.n_down,
            self.wind_cap,
            self.horizon,
        )


def _spread(values, n):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size == n:
        return values.tolist()
    if n == 1:
        return [float(values.mean())]
    return np.linspace(values.min(), values.max(), n).tolist()


# --- presets ---


def toy_a():
    """Single-hour market with one marginal generator and one resource per direction"""
    return MarketSpec(
        gen_cost=[10, 30],
        gen_cap=[40, 60],
        up_cost=[100],
        up_cap=[20],
        down_utility=[10],
        down_cap=[20],
        wind_cap=40,
        horizon=1,
    )


def toy_uc():
    """Single-hour unit commitment market"""
    return MarketSpec(
        gen_cost=[10, 5],
        gen_cap=[50, 50],
        up_cost=[100],
        up_cap=[50],
        down_utility=[10],
        down_cap=[50],
        wind_cap=40,
        horizon=1,
        commit_cost=[200, 1000],
    )


def synth_market(wind_cap=40.0):
    """The 24-hour market of the synthetic benchmark"""
    return MarketSpec(
        gen_cost=[10, 30],
        gen_cap=[30, 60],
        ramp=[25, 25],
        up_cost=[100],
        up_cap=[40],
        down_utility=[10],
        down_cap=[40],
        wind_cap=wind_cap,
        horizon=24,
        commit_cost=[50, 100],
    )


def multi_resource_market(wind_cap=40.0):
    """Synthetic market with a larger real-time stage of ten resources per direction"""
    return synth_market(wind_cap).replace(
        up_cost=np.linspace(90, 120, 10).tolist(),
        up_cap=[6.0] * 10,
        down_utility=np.linspace(10, 20, 10).tolist(),
        down_cap=[6.0] * 10,
    )


presets = dict(
    toy_a=toy_a, toy_uc=toy_uc, synth=synth_market, multi_resource=multi_resource_market
)


# --- result types ---


DayAheadResult = namedtuple(
    "DayAheadResult",
    (
        "schedule",  # T x n_gen kW
        "cost",  # $
        "balance_duals",  # lambda, T
        "capacity_duals",  # T x n_gen
        "ramp_up_duals",  # (T-1) x n_gen
        "ramp_down_duals",  # (T-1) x n_gen
        "dual_remainder",  # dual objective terms other than the balance rows
        "commitment",  # T x n_gen or None
    ),
)

RealTimeResult = namedtuple(
    "RealTimeResult",
    ("up", "down", "cost", "price", "up_duals", "down_duals", "dual_remainder"),
)

StochasticResult = namedtuple(
    "StochasticResult",
    ("schedule", "forecast", "cost", "day_ahead_cost", "expected_recourse", "balance_duals"),
)

UnitCommitmentResult = namedtuple(
    "UnitCommitmentResult",
    ("day_ahead", "node_count", "relaxation_bound", "gap"),
)


class DualBundle(namedtuple("_DualBundle", ("lam", "nu", "psi_da", "psi_rt"))):
    """
    Day-ahead prices lam (T), real-time prices nu (T) and the forecast-independent
    dual remainders psi_da ($) and psi_rt (T, $).
    """

    __slots__ = ()

    def parts(self, forecast, realization):
        """
        :return: (-lam'forecast, -nu'(realization - forecast), psi_da, sum psi_rt)
        """
        forecast = np.asarray(forecast, dtype=float)
        realization = np.asarray(realization, dtype=float)
        return (
            float(-self.lam @ forecast),
            float(-self.nu @ (realization - forecast)),
            float(self.psi_da),
            float(np.sum(self.psi_rt)),
        )

    def total(self, forecast, realization):
        return sum(self.parts(forecast, realization))


# --- helpers ---


def _vector(values, horizon, name):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.shape != (horizon,):
        raise InfeasibleByConstruction(
            "%s must hold %d hourly values, got %d" % (name, horizon, values.size)
        )
    return values


def _remainder(lp, solution):
    return solution.dual_objective(lp) - float(lp.b_eq @ solution.eq_duals)


def _ramp_rows(spec, horizon, n_cols, offset=0):
    """
    Rows x[t+1] - x[t] <= r and x[t] - x[t+1] <= r for generators with finite ramps.
    :return: (A_up, A_down, rhs, gens) with one row per (t, limited generator) in each block
    """
    gens = np.flatnonzero(np.isfinite(spec.ramp))
    n_rows = (horizon - 1) * gens.size
    A_up = np.zeros((n_rows, n_cols))
    k = 0
    for t in range(horizon - 1):
        for i in gens:
            A_up[k, offset + (t + 1) * spec.n_gen + i] = 1.0
            A_up[k, offset + t * spec.n_gen + i] = -1.0
            k += 1
    rhs = np.tile(spec.ramp[gens], horizon - 1)
    return A_up, -A_up, rhs, gens


def _check_day_ahead_inputs(spec, forecast, load):
    horizon = spec.horizon
    forecast = _vector(forecast, horizon, "forecast")
    load = _vector(load, horizon, "load")
    if (forecast < -TOL_INPUT).any() or (forecast > spec.wind_cap + TOL_INPUT).any():
        raise InfeasibleByConstruction(
            "Wind forecast outside [0, %g] kW" % spec.wind_cap
        )
    if (load <= 0).any():
        raise InfeasibleByConstruction("Load must be positive")
    over = np.flatnonzero(forecast > load + TOL_INPUT)
    if over.size:
        raise InfeasibleByConstruction(
            "Wind forecast %g kW exceeds load %g kW at hour %d"
            % (forecast[over[0]], load[over[0]], over[0])
        )
    short = np.flatnonzero(spec.gen_cap.sum() + forecast < load - TOL_INPUT)
    if short.size:
        raise InfeasibleByConstruction(
            "Thermal capacity %g kW plus wind %g kW cannot serve load %g kW at hour %d"
            % (spec.gen_cap.sum(), forecast[short[0]], load[short[0]], short[0])
        )
    return np.clip(forecast, 0.0, spec.wind_cap), load


def _x_names(spec, horizon, prefix="x"):
    return ["%s[%d,%d]" % (prefix, t, i) for t in range(horizon) for i in range(spec.n_gen)]


# --- day-ahead stage ---


def build_day_ahead(spec, forecast, load):
    """
    Day-ahead dispatch LP: min sum rho'x[t] s.t. sum_i x[t, i] = load[t] - forecast[t],
    0 <= x <= gen_cap and ramp rows. The equality dual of hour t is the day-ahead price.

    :raises InfeasibleByConstruction: forecast or load reject the instance before building
    """
    forecast, load = _check_day_ahead_inputs(spec, forecast, load)
    horizon, n_gen = spec.horizon, spec.n_gen
    n = horizon * n_gen
    A_eq = np.kron(np.eye(horizon), np.ones((1, n_gen)))
    A_up, A_down, rhs, _ = _ramp_rows(spec, horizon, n)
    return LinearProgram(
        c=np.tile(spec.gen_cost, horizon),
        A_eq=A_eq,
        b_eq=load - forecast,
        A_ub=np.vstack([A_up, A_down]),
        b_ub=np.concatenate([rhs, rhs]),
        lower=np.zeros(n),
        upper=np.tile(spec.gen_cap, horizon),
        names=_x_names(spec, horizon),
    )


def solve_day_ahead(spec, forecast, load):
    """
    :return: DayAheadResult
    :raises DispatchInfeasible: no schedule satisfies balance, capacity and ramp rows
    """
    lp = build_day_ahead(spec, forecast, load)
    solution = solve_lp(lp)
    if solution.status is not LpStatus.OPTIMAL:
        raise DispatchInfeasible(
            "Day-ahead dispatch is %s for load %s"
            % (solution.status.value.lower(), np.array2string(np.asarray(load), precision=3))
        )
    horizon, n_gen = spec.horizon, spec.n_gen
    n_ramp = lp.A_ub.shape[0] // 2
    gens = np.flatnonzero(np.isfinite(spec.ramp))
    ramp_up = np.zeros((max(horizon - 1, 0), n_gen))
    ramp_down = np.zeros((max(horizon - 1, 0), n_gen))
    if gens.size:
        ramp_up[:, gens] = solution.ineq_duals[:n_ramp].reshape(horizon - 1, gens.size)
        ramp_down[:, gens] = solution.ineq_duals[n_ramp:].reshape(horizon - 1, gens.size)
    return DayAheadResult(
        schedule=solution.x.reshape(horizon, n_gen),
        cost=solution.objective,
        balance_duals=solution.eq_duals.copy(),
        capacity_duals=solution.upper_duals.reshape(horizon, n_gen),
        ramp_up_duals=ramp_up,
        ramp_down_duals=ramp_down,
        dual_remainder=_remainder(lp, solution),
        commitment=None,
    )


# --- real-time stage ---


def build_real_time(spec, forecast, realization):
    """
    Real-time balancing LP of one hour: min up_cost'z_up - down_utility'z_down
    s.t. sum z_up - sum z_down = forecast - realization, 0 <= z <= caps.
    The equality dual is the real-time price: the marginal up cost under shortage,
    the marginal down utility under surplus.

    :raises BalancingInfeasible: the deviation exceeds the flexible capacity
    """
    forecast, realization = float(forecast), float(realization)
    if forecast < -TOL_INPUT or realization < -TOL_INPUT:
        raise BalancingInfeasible("Forecast and realization must be non-negative")
    deviation = forecast - realization
    if deviation > spec.up_cap.sum() + TOL_INPUT:
        deficit = deviation - spec.up_cap.sum()
        raise BalancingInfeasible(
            "Shortage of %g kW exceeds the flexible-up capacity by %g kW"
            % (deviation, deficit),
            deficit=deficit,
        )
    if -deviation > spec.down_cap.sum() + TOL_INPUT:
        deficit = -deviation - spec.down_cap.sum()
        raise BalancingInfeasible(
            "Surplus of %g kW exceeds the flexible-down capacity by %g kW"
            % (-deviation, deficit),
            deficit=deficit,
        )
    return LinearProgram(
        c=np.concatenate([spec.up_cost, -spec.down_utility]),
        A_eq=np.concatenate([np.ones(spec.n_up), -np.ones(spec.n_down)])[None, :],
        b_eq=[deviation],
        lower=np.zeros(spec.n_up + spec.n_down),
        upper=np.concatenate([spec.up_cap, spec.down_cap]),
        names=["up[%d]" % k for k in range(spec.n_up)]
        + ["down[%d]" % k for k in range(spec.n_down)],
    )


def solve_real_time(spec, forecast, realization):
    """
    :return: RealTimeResult
    """
    lp = build_real_time(spec, forecast, realization)
    solution = solve_lp(lp)
    if solution.status is not LpStatus.OPTIMAL:
        raise BalancingInfeasible(
            "Real-time balancing is %s" % solution.status.value.lower(),
            deficit=abs(float(forecast) - float(realization)),
        )
    n_up = spec.n_up
    return RealTimeResult(
        up=solution.x[:n_up],
        down=solution.x[n_up:],
        cost=solution.objective,
        price=float(solution.eq_duals[0]),
        up_duals=solution.upper_duals[:n_up],
        down_duals=solution.upper_duals[n_up:],
        dual_remainder=_remainder(lp, solution),
    )


def solve_real_time_day(spec, forecast, realization, day=None):
    """
    Settle every hour of a day; BalancingInfeasible carries the offending day and hour.
    :return: list of RealTimeResult
    """
    results = []
    for hour, (f, y) in enumerate(zip(forecast, realization)):
        try:
            results.append(solve_real_time(spec, f, y))
        except BalancingInfeasible as e:
            error = e.suggest("day %s, hour %d" % (day, hour))
            error.day, error.hour = day, hour
            raise error
    return results


# --- dual decomposition ---


def dual_decomposition(day_ahead, real_time, forecast, realization, spec, load):
    """
    Split the optimal day-ahead plus real-time cost into forecast-dependent dual terms
    and forecast-independent remainders:

        cost = -lam'forecast - nu'(realization - forecast) + psi_da + sum psi_rt

    :param day_ahead: DayAheadResult for (spec, forecast, load)
    :param real_time: RealTimeResult per hour for (forecast, realization)
    :return: DualBundle
    :raises IdentityViolation: the reconstruction misses the primal cost
    """
    forecast = _vector(forecast, spec.horizon, "forecast")
    realization = _vector(realization, spec.horizon, "realization")
    load = _vector(load, spec.horizon, "load")
    if len(real_time) != spec.horizon:
        raise IdentityViolation(
            "Expected %d real-time results, got %d" % (spec.horizon, len(real_time))
        )
    lam = np.asarray(day_ahead.balance_duals, dtype=float)
    bundle = DualBundle(
        lam=lam,
        nu=np.array([rt.price for rt in real_time]),
        psi_da=float(lam @ load + day_ahead.dual_remainder),
        psi_rt=np.array([rt.dual_remainder for rt in real_time]),
    )
    cost = day_ahead.cost + sum(rt.cost for rt in real_time)
    reconstructed = bundle.total(forecast, realization)
    if abs(reconstructed - cost) > TOL_GAP * (1 + abs(cost)):
        raise IdentityViolation(
            "Dual reconstruction %.12g differs from operating cost %.12g"
            % (reconstructed, cost)
        )
    return bundle


# --- two-stage stochastic dispatch ---


def build_stochastic(spec, load, scenarios, probs):
    """
    Extensive form of the two-stage dispatch with the wind forecast as a first-stage
    decision. Variables: x (T x n_gen), forecast (T) in [0, wind_cap], then per scenario
    z_up (T x n_up) and z_down (T x n_down) with probability-weighted costs.

    :param scenarios: S x T wind realizations
    :param probs: S scenario probabilities
    :raises ScaleExceeded: the instance is beyond the dense solver's capability
    """
    horizon, n_gen, n_up, n_down = spec.horizon, spec.n_gen, spec.n_up, spec.n_down
    load = _vector(load, horizon, "load")
    scenarios = np.atleast_2d(np.asarray(scenarios, dtype=float))
    probs = np.atleast_1d(np.asarray(probs, dtype=float))
    n_scen = scenarios.shape[0]
    if n_scen < 1 or scenarios.shape != (n_scen, horizon) or probs.shape != (n_scen,):
        raise InfeasibleByConstruction(
            "Scenarios must be S x %d with S matching probabilities" % horizon
        )
    if (probs < 0).any() or abs(probs.sum() - 1) > 1e-9:
        raise InfeasibleByConstruction("Scenario probabilities must be a distribution")
    if (load <= 0).any():
        raise InfeasibleByConstruction("Load must be positive")
    short = np.flatnonzero(spec.gen_cap.sum() + spec.wind_cap < load - TOL_INPUT)
    if short.size:
        raise InfeasibleByConstruction(
            "Thermal and wind capacity cannot serve load %g kW at hour %d"
            % (load[short[0]], short[0])
        )

    n_first = horizon * n_gen + horizon
    n_rec = horizon * (n_up + n_down)
    n = n_first + n_scen * n_rec
    n_ramp = 2 * (horizon - 1) * int(np.isfinite(spec.ramp).sum())
    n_rows = horizon + n_scen * horizon + n_ramp
    if n > config["scale.max_variables"] or n_rows > config["scale.max_rows"]:
        raise ScaleExceeded(
            "Extensive form with %d scenarios needs %d variables and %d rows; "
            "limits are %d and %d" % (
                n_scen, n, n_rows, config["scale.max_variables"], config["scale.max_rows"]
            )
        )

    wind = horizon * n_gen  # offset of the forecast variables
    c = np.zeros(n)
    c[:wind] = np.tile(spec.gen_cost, horizon)
    recourse_cost = np.tile(np.concatenate([spec.up_cost, -spec.down_utility]), horizon)
    for s in range(n_scen):
        start = n_first + s * n_rec
        c[start : start + n_rec] = probs[s] * recourse_cost

    A_eq = np.zeros((horizon + n_scen * horizon, n))
    b_eq = np.zeros(horizon + n_scen * horizon)
    block = np.concatenate([np.ones(n_up), -np.ones(n_down)])
    for t in range(horizon):
        A_eq[t, t * n_gen : (t + 1) * n_gen] = 1.0
        A_eq[t, wind + t] = 1.0
        b_eq[t] = load[t]
        for s in range(n_scen):
            row = horizon + s * horizon + t
            start = n_first + s * n_rec + t * (n_up + n_down)
            A_eq[row, start : start + n_up + n_down] = block
            A_eq[row, wind + t] = -1.0
            b_eq[row] = -scenarios[s, t]
    A_up, A_down, rhs, _ = _ramp_rows(spec, horizon, n)
    lower = np.zeros(n)
    upper = np.concatenate(
        [
            np.tile(spec.gen_cap, horizon),
            np.full(horizon, spec.wind_cap),
            np.tile(np.concatenate([spec.up_cap, spec.down_cap]), horizon * n_scen),
        ]
    )
    return LinearProgram(
        c=c,
        A_eq=A_eq,
        b_eq=b_eq,
        A_ub=np.vstack([A_up, A_down]),
        b_ub=np.concatenate([rhs, rhs]),
        lower=lower,
        upper=upper,
    )


def solve_stochastic(spec, load, scenarios, probs):
    """
    :return: StochasticResult with the first-stage schedule and forecast, the expected cost
        and its split into day-ahead cost and expected recourse
    :raises DispatchInfeasible: some scenario cannot be balanced
    """
    lp = build_stochastic(spec, load, scenarios, probs)
    solution = solve_lp(lp)
    if solution.status is not LpStatus.OPTIMAL:
        raise DispatchInfeasible(
            "Stochastic dispatch is %s" % solution.status.value.lower()
        )
    horizon, n_gen = spec.horizon, spec.n_gen
    wind = horizon * n_gen
    schedule = solution.x[:wind].reshape(horizon, n_gen)
    day_ahead_cost = float(np.tile(spec.gen_cost, horizon) @ solution.x[:wind])
    logger.debug(
        "Stochastic dispatch with %d scenarios solved in %d iterations"
        % (np.atleast_2d(scenarios).shape[0], solution.iterations)
    )
    return StochasticResult(
        schedule=schedule,
        forecast=solution.x[wind : wind + horizon].copy(),
        cost=solution.objective,
        day_ahead_cost=day_ahead_cost,
        expected_recourse=solution.objective - day_ahead_cost,
        balance_duals=solution.eq_duals[:horizon].copy(),
    )


# --- unit commitment ---


def _uc_capacity_scale(spec):
    """largest coefficient of each x <= gen_cap * u row, hour-major"""
    return np.maximum(1.0, np.tile(spec.gen_cap, spec.horizon))


def build_uc(spec, forecast, load):
    """
    Unit commitment: variables x (T x n_gen) then on/off status u (T x n_gen), cost
    rho'x + commit_cost'u per hour, rows x <= gen_cap * u, ramp rows gated by u and the
    day-ahead balance. Every inequality row is divided by its largest coefficient.

    :return: (LinearProgram with u in [0, 1], indices of the binary variables)
    """
    forecast, load = _check_day_ahead_inputs(spec, forecast, load)
    horizon, n_gen = spec.horizon, spec.n_gen
    n_x = horizon * n_gen
    n = 2 * n_x
    A_eq = np.hstack([np.kron(np.eye(horizon), np.ones((1, n_gen))), np.zeros((horizon, n_x))])
    capacity = np.hstack([np.eye(n_x), -np.diag(np.tile(spec.gen_cap, horizon))])
    capacity /= _uc_capacity_scale(spec)[:, None]
    gens = np.flatnonzero(np.isfinite(spec.ramp))
    ramp_rows = []
    for t in range(horizon - 1):
        for i in gens:
            now, nxt = t * n_gen + i, (t + 1) * n_gen + i
            scale = max(1.0, spec.ramp[i])
            up = np.zeros(n)
            up[nxt], up[now], up[n_x + nxt] = 1.0, -1.0, -spec.ramp[i]
            down = np.zeros(n)
            down[now], down[nxt], down[n_x + now] = 1.0, -1.0, -spec.ramp[i]
            ramp_rows += [up / scale, down / scale]
    A_ub = np.vstack([capacity] + ramp_rows) if ramp_rows else capacity
    lp = LinearProgram(
        c=np.concatenate([np.tile(spec.gen_cost, horizon), np.tile(spec.commit_cost, horizon)]),
        A_eq=A_eq,
        b_eq=load - forecast,
        A_ub=A_ub,
        b_ub=np.zeros(A_ub.shape[0]),
        lower=np.zeros(n),
        upper=np.concatenate([np.tile(spec.gen_cap, horizon), np.ones(n_x)]),
        names=_x_names(spec, horizon) + _x_names(spec, horizon, prefix="u"),
    )
    return lp, np.arange(n_x, n)


def build_relaxed_uc(spec, forecast, load):
    """
    LP relaxation of build_uc: the status variables keep 0 <= u <= 1 without integrality.
    """
    lp, _ = build_uc(spec, forecast, load)
    return lp


def _uc_result(spec, lp, solution):
    horizon, n_gen = spec.horizon, spec.n_gen
    n_x = horizon * n_gen
    return DayAheadResult(
        schedule=solution.x[:n_x].reshape(horizon, n_gen),
        cost=solution.objective,
        balance_duals=solution.eq_duals.copy(),
        # per kW of x - gen_cap * u, undoing the row scaling of build_uc
        capacity_duals=(solution.ineq_duals[:n_x] / _uc_capacity_scale(spec)).reshape(
            horizon, n_gen
        ),
        ramp_up_duals=None,
        ramp_down_duals=None,
        dual_remainder=_remainder(lp, solution),
        commitment=solution.x[n_x:].reshape(horizon, n_gen),
    )


def solve_relaxed_uc(spec, forecast, load):
    """
    :return: DayAheadResult of the relaxed unit commitment, with fractional commitment
    """
    lp = build_relaxed_uc(spec, forecast, load)
    solution = solve_lp(lp)
    if solution.status is not LpStatus.OPTIMAL:
        raise DispatchInfeasible(
            "Relaxed unit commitment is %s" % solution.status.value.lower()
        )
    return _uc_result(spec, lp, solution)


def solve_uc(spec, forecast, load):
    """
    Solve the unit commitment by branch and bound.

    :return: UnitCommitmentResult; its day_ahead duals are those of the incumbent's node LP
    :raises NodeBudgetExceeded: with the incumbent attached, as raised by solve_milp
    """
    lp, binaries = build_uc(spec, forecast, load)
    try:
        milp = solve_milp(lp, binaries)
    except InfeasibleProblem:
        raise DispatchInfeasible("Unit commitment has no feasible commitment")
    return milp_to_uc_result(spec, lp, milp)


def milp_to_uc_result(spec, lp, milp):
    return UnitCommitmentResult(
        day_ahead=_uc_result(spec, lp, milp.solution),
        node_count=milp.node_count,
        relaxation_bound=milp.relaxation_bound,
        gap=milp.gap,
    )
