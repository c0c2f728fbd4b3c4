"""
valuecast trains renewable power forecasts for the value they bring to the operation of
a virtual power plant rather than for their statistical accuracy.

The forecast feeds a day-ahead dispatch and the forecast error is settled in a real-time
balancing stage. Both stages are linear programs whose balance duals give the marginal
value of the forecast; training follows those prices.
"""

__all__ = [
    "__version__",
    "config",
    "logger",
    "errors",
    "ValueCastError",
    "LinearProgram",
    "solve_lp",
    "solve_milp",
    "MarketSpec",
    "presets",
    "solve_day_ahead",
    "solve_real_time",
    "solve_stochastic",
    "solve_uc",
    "dual_decomposition",
    "ForecastModel",
    "forward",
    "backward",
    "load_model",
    "save_model",
    "TrainingConfig",
    "train_value_oriented",
    "train_quality",
    "capacity_audit",
    "EvaluationReport",
    "simulate_operation",
    "evaluate_sto_opt",
    "SampleSet",
    "load_csv",
    "synth_generate",
    "key_hash",
]

from .logging import logger
from .version import __version__
from .settings import config
from .lp_core import LinearProgram, solve_lp, solve_milp
from .market_models import (
    MarketSpec,
    presets,
    solve_day_ahead,
    solve_real_time,
    solve_stochastic,
    solve_uc,
    dual_decomposition,
)
from .forecaster import ForecastModel, forward, backward, load_model, save_model
from .training import TrainingConfig, train_value_oriented, train_quality, capacity_audit
from .evaluation import EvaluationReport, simulate_operation, evaluate_sto_opt
from .data import SampleSet, load_csv, synth_generate
from .hash import key_hash
from . import errors
from .errors import ValueCastError
