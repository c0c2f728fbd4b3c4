"""
Command-line interface: ``valuecast <command> [options]``.

Commands read an experiment configuration (TOML or JSON) with the sections
``market``, ``data``, ``training`` and ``evaluation``; flags override its keys.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
import numpy as np
from .errors import (
    ValueCastError,
    ConfigError,
    DataError,
    SolverError,
    DispatchError,
    ModelError,
    TrainingError,
    EvaluationError,
)
from . import data, evaluation, training
from .forecaster import load_model
from .hash import key_hash
from .logging import set_level
from .market_models import MarketSpec, presets
from .preview import preview
from .utils import parse_float_list, safe_write_text, to_builtin
from .version import __version__

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__.split(".")[0])

# argparse keeps 2 for usage errors
EXIT_CODES = (
    (ConfigError, 9),
    (DataError, 3),
    (SolverError, 4),
    (DispatchError, 5),
    (ModelError, 6),
    (TrainingError, 7),
    (EvaluationError, 8),
    (ValueCastError, 1),
)

SECTIONS = ("market", "data", "training", "evaluation")

default_data = dict(path=None, seed=0, days=60, wind_multiplier=1.0, train_frac=0.8)
default_evaluation = dict(
    approaches=list(evaluation.APPROACHES),
    scenarios=50,
    knn=50,
    up_cost_override=None,
    down_utility_override=None,
    capacities=[20.0, 30.0, 40.0],
    dispatch="ed",
    seed=0,
)


def exit_code(error):
    for cls, code in EXIT_CODES:
        if isinstance(error, cls):
            return code
    return 1


class ExperimentConfig:
    """
    An experiment: market, data source, training hyperparameters and evaluation plan.

    :param market: a preset name under "preset" (toy_a, toy_uc, synth, multi_resource) with
        optional "wind_cap" and field overrides, or the full MarketSpec fields;
        "ramps = false" drops the ramp limits
    :param data: "path" of a CSV or synthetic "seed" and "days"; "wind_multiplier", "train_frac"
    :param training: TrainingConfig fields
    :param evaluation: approaches, scenarios, knn, rt overrides, capacities, dispatch, seed
    """

    def __init__(self, market=None, data=None, training=None, evaluation=None):
        self.market = dict(market or dict(preset="synth"))
        self.data = dict(default_data, **(data or {}))
        self.training = dict(training or {})
        self.evaluation = dict(default_evaluation, **(evaluation or {}))
        self.validate()

    @classmethod
    def load(cls, path):
        """
        :param path: a .toml or .json file
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigError("Configuration file %s does not exist" % path)
        try:
            if path.suffix == ".json":
                content = json.loads(path.read_text(encoding="utf-8"))
            else:
                content = tomllib.loads(path.read_text(encoding="utf-8"))
        except (ValueError, tomllib.TOMLDecodeError) as e:
            raise ConfigError("Cannot parse %s: %s" % (path, e))
        unknown = set(content) - set(SECTIONS)
        if unknown:
            raise ConfigError("Unknown sections: %s" % ", ".join(sorted(unknown)))
        return cls(**content)

    def validate(self):
        unknown = set(self.data) - set(default_data)
        if unknown:
            raise ConfigError("Unknown data fields: %s" % ", ".join(sorted(unknown)))
        unknown = set(self.evaluation) - set(default_evaluation)
        if unknown:
            raise ConfigError("Unknown evaluation fields: %s" % ", ".join(sorted(unknown)))
        if self.data["path"] is not None and not Path(self.data["path"]).is_file():
            raise ConfigError("Data file %s does not exist" % self.data["path"])
        if self.data["path"] is None and int(self.data["days"]) < 1:
            raise ConfigError("At least one synthetic day is needed")
        if not 0 < self.data["train_frac"] < 1:
            raise ConfigError("train_frac must lie in (0, 1)")
        if self.data["wind_multiplier"] < 0:
            raise ConfigError("wind_multiplier must be non-negative")
        bad = set(self.evaluation["approaches"]) - set(evaluation.APPROACHES)
        if bad:
            raise ConfigError("Unknown approaches: %s" % ", ".join(sorted(bad)))
        if self.evaluation["scenarios"] < 1 or self.evaluation["knn"] < 1:
            raise ConfigError("scenarios and knn must be positive")
        if self.evaluation["dispatch"] not in training.DISPATCH_MODELS:
            raise ConfigError("Unknown dispatch model %r" % self.evaluation["dispatch"])
        # both raise ConfigError on invalid fields
        self.market_spec()
        self.training_config()

    def market_spec(self):
        fields = dict(self.market)
        ramps = fields.pop("ramps", True)
        preset = fields.pop("preset", None)
        if preset is not None:
            if preset not in presets:
                raise ConfigError(
                    "Unknown market preset %r, use one of %s" % (preset, sorted(presets))
                )
            base = presets[preset]()
            wind_cap = fields.pop("wind_cap", None)
            spec = base.replace(**fields) if fields else base
            if wind_cap is not None:
                spec = spec.replace(wind_cap=float(wind_cap))
        else:
            spec = MarketSpec.from_dict(fields)
        return spec if ramps else spec.without_ramps()

    def training_config(self):
        return training.TrainingConfig.from_dict(self.training)

    def to_dict(self):
        return to_builtin(
            dict(
                market=self.market,
                data=self.data,
                training=self.training_config().to_dict(),
                evaluation=self.evaluation,
            )
        )

    def override(self, **sections):
        """
        :param sections: per section a dict of keys to replace; None values are skipped
        :return: a new ExperimentConfig
        """
        d = dict(
            market=self.market,
            data=self.data,
            training=self.training,
            evaluation=self.evaluation,
        )
        for section, values in sections.items():
            d[section] = dict(d[section], **{k: v for k, v in values.items() if v is not None})
        return ExperimentConfig(**d)

    @property
    def hash(self):
        return key_hash(self.to_dict())


# --- shared steps ---


def load_dataset(config, spec):
    source = config.data
    if source["path"] is not None:
        samples = data.load_csv(source["path"], wind_cap=spec.wind_cap)
    else:
        samples = data.synth_generate(source["seed"], int(source["days"]), spec=spec)
    if source["wind_multiplier"] != 1:
        samples = data.scale_wind(samples, source["wind_multiplier"])
    return samples


def _prepare(config):
    spec = config.market_spec()
    samples = load_dataset(config, spec)
    if samples.wind_cap != spec.wind_cap:
        spec = spec.replace(wind_cap=samples.wind_cap)
    train_set, test_set = data.split(samples, config.data["train_frac"], spec.horizon)
    return spec, train_set, test_set


def _approach_options(config):
    ev = config.evaluation
    return dict(
        k=int(ev["knn"]),
        n_scenarios=int(ev["scenarios"]),
        seed=int(ev["seed"]),
        dispatch=ev["dispatch"],
    )


def _operating_spec(config, spec):
    """The market of the operational phase: spec with the configured real-time overrides"""
    ev = config.evaluation
    return spec.with_rt_override(
        up_cost=ev["up_cost_override"], down_utility=ev["down_utility_override"]
    )


# --- commands ---


def cmd_gen_data(config, out_path):
    """Write the synthetic dataset of the configuration as CSV"""
    spec = config.market_spec()
    samples = data.synth_generate(config.data["seed"], int(config.data["days"]), spec=spec)
    data.write_csv(samples, out_path)
    return Path(out_path)


def cmd_train(config, out_dir):
    """Train the configured model and write a run directory"""
    spec, train_set, _ = _prepare(config)
    model, trace = training.train(train_set, spec, config.training_config(), run_dir=out_dir)
    training.save_run(out_dir, model, trace, config.to_dict())
    return Path(out_dir)


def cmd_eval(config, model_path, out_dir, approach="model"):
    """Operate a trained model on the test days, with optional real-time price overrides"""
    spec, _, test_set = _prepare(config)
    model_path = Path(model_path)
    if model_path.is_dir():
        model_path = model_path / "model.vcm"
    model = load_model(model_path)
    ev = config.evaluation
    if ev["dispatch"] == "uc":
        report = evaluation.evaluate_uc(
            model, test_set, _operating_spec(config, spec), approach=approach
        )
    else:
        report = evaluation.evaluate_with_override(
            model,
            test_set,
            spec,
            up_cost=ev["up_cost_override"],
            down_utility=ev["down_utility_override"],
            approach=approach,
        )
    return evaluation.write_report(report, out_dir, extra=dict(config_hash=config.hash))


def _write_comparison(reports, out_dir, config):
    metrics = evaluation.write_report(reports, out_dir, extra=dict(config_hash=config.hash))
    table = evaluation.comparison_table(reports)
    safe_write_text(Path(out_dir) / "comparison.csv", table.to_csv(index=False))
    print(preview(table))
    return metrics


def cmd_compare(config, out_dir):
    """
    Train and operate every configured approach on one split. With linear-ablation among
    them and a market with ramp limits, the ramp-free comparison is written to the
    subdirectory ramp-free.
    """
    spec, train_set, test_set = _prepare(config)
    settings = config.training_config()
    operating = _operating_spec(config, spec)
    options = _approach_options(config)
    reports = [
        evaluation.run_approach(
            approach, train_set, test_set, spec, settings, operating_spec=operating, **options
        )[0]
        for approach in config.evaluation["approaches"]
    ]
    metrics = _write_comparison(reports, out_dir, config)
    if "linear-ablation" in config.evaluation["approaches"] and np.isfinite(spec.ramp).any():
        print("ramp-free market:")
        free = evaluation.ramp_free_comparison(
            train_set, test_set, spec, settings, operating_spec=operating, **options
        )
        metrics["ramp-free"] = _write_comparison(free, Path(out_dir) / "ramp-free", config)
    return metrics


def cmd_sweep(config, out_dir):
    """Cost of each approach across the configured wind capacities"""
    spec = config.market_spec()
    samples = load_dataset(config, spec)
    approaches = [a for a in config.evaluation["approaches"] if a != "sto-opt"]
    table = evaluation.capacity_sweep(
        samples,
        spec,
        config.evaluation["capacities"],
        approaches=approaches,
        training_config=config.training_config(),
        train_frac=config.data["train_frac"],
        up_cost=config.evaluation["up_cost_override"],
        down_utility=config.evaluation["down_utility_override"],
        **_approach_options(config)
    )
    safe_write_text(Path(out_dir) / "sweep.csv", table.to_csv(index=False))
    print(preview(table))
    return table


def cmd_uc(config, out_dir):
    """Operate the approaches with binary unit commitment at the day-ahead stage"""
    uc_config = config.override(evaluation=dict(dispatch="uc"))
    approaches = [a for a in uc_config.evaluation["approaches"] if a != "sto-opt"]
    return cmd_compare(uc_config.override(evaluation=dict(approaches=approaches)), out_dir)


# --- argument parsing ---


def _parser():
    parser = argparse.ArgumentParser(
        prog="valuecast",
        description="Value-oriented renewable forecasting trained on dispatch prices.",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    parser.add_argument(
        "--log-level", type=str.upper, choices=("DEBUG", "INFO", "WARNING", "ERROR")
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name, help, seed_required=False):
        p = commands.add_parser(name, help=help)
        p.add_argument("--config", type=Path, help="experiment configuration (TOML or JSON)")
        p.add_argument("--seed", type=int, required=seed_required)
        p.add_argument("--out", type=Path, required=True)
        return p

    p = command("gen-data", "write a synthetic dataset as CSV")
    p.add_argument("--days", type=int)
    for name, seed_required in (
        ("train", True),
        ("eval", False),
        ("compare", True),
        ("sweep", False),
        ("uc", False),
    ):
        p = command(name, "run the %s experiment" % name, seed_required)
        p.add_argument("--loss", choices=training.LOSSES)
        p.add_argument("--quantile", type=float)
        p.add_argument("--epochs", type=int)
        if name == "eval":
            p.add_argument("--model", type=Path, required=True, help="checkpoint or run directory")
            p.add_argument("--approach", default="model", help="label of the report")
        if name in ("compare", "sweep", "uc"):
            p.add_argument("--scenarios", type=int)
            p.add_argument("--knn", type=int)
        if name == "sweep":
            p.add_argument("--capacities", type=parse_float_list)
        if name != "train":
            p.add_argument(
                "--rt-cost-override",
                type=parse_float_list,
                help="real-time up prices of the operational phase",
            )
    return parser


def _configure(args):
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()

    def get(name):
        return getattr(args, name, None)

    seed = get("seed")
    if args.command == "gen-data":
        return config.override(data=dict(seed=seed, days=get("days")))
    return config.override(
        training=dict(
            seed=seed, loss=get("loss"), quantile=get("quantile"), epochs=get("epochs")
        ),
        evaluation=dict(
            seed=seed,
            scenarios=get("scenarios"),
            knn=get("knn"),
            capacities=get("capacities"),
            up_cost_override=get("rt_cost_override"),
        ),
    )


def run(args):
    config = _configure(args)
    if args.command == "gen-data":
        return cmd_gen_data(config, args.out)
    if args.command == "train":
        return cmd_train(config, args.out)
    if args.command == "eval":
        return cmd_eval(config, args.model, args.out, approach=args.approach)
    return dict(compare=cmd_compare, sweep=cmd_sweep, uc=cmd_uc)[args.command](config, args.out)


def main(argv=None):
    """
    :return: process exit code, 0 on success
    """
    args = _parser().parse_args(argv)
    if args.log_level:
        set_level(args.log_level)
    try:
        run(args)
    except ValueCastError as error:
        print("error: %s: %s" % (error.__class__.__name__, error), file=sys.stderr)
        return exit_code(error)
    return 0
