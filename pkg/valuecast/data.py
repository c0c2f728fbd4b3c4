"""
Hourly wind and load records: CSV ingestion, chronological splits, wind scaling,
k-nearest-neighbor scenario sampling and a seeded synthetic generator.
"""

import io
import logging
from pathlib import Path
import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.spatial.distance import cdist
from scipy.special import expit
from .errors import (
    DataError,
    ParseError,
    SchemaMismatch,
    TimestampOrder,
    TooSmall,
    EmptyTrainSet,
    EmptyDataset,
)
from .utils import safe_write_text

logger = logging.getLogger(__name__.split(".")[0])

SCHEMA = ("timestamp", "ws10", "wd10", "ws100", "wd100", "wind_kw", "load_kw")
FEATURES = ("ws10", "wd10", "ws100", "wd100")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"
HOUR = pd.Timedelta(hours=1)
TOL_WIND = 1e-9


class SampleSet:
    """
    Time-ordered hourly records with scaling metadata. Treat as immutable: transforms
    return new sets.

    :param frame: DataFrame with the SCHEMA columns
    :param wind_cap: wind capacity (kW); defaults to the largest wind value
    :param wind_multiplier: accumulated wind scaling
    :param feature_mean, feature_std: standardization constants (from a training range)
    """

    def __init__(
        self,
        frame,
        wind_cap=None,
        wind_multiplier=1.0,
        feature_mean=None,
        feature_std=None,
    ):
        missing = [c for c in SCHEMA if c not in frame.columns]
        if missing:
            raise SchemaMismatch("Missing columns: %s" % ", ".join(missing))
        frame = frame.loc[:, list(SCHEMA)].reset_index(drop=True).copy()
        frame["timestamp"] = pd.to_datetime(frame["timestamp"])
        for column in SCHEMA[1:]:
            frame[column] = frame[column].astype(float)
        self._frame = frame
        if wind_cap is None:
            wind_cap = frame["wind_kw"].max() if len(frame) else 0.0
        self.wind_cap = float(wind_cap)
        self.wind_multiplier = float(wind_multiplier)
        self.feature_mean = None if feature_mean is None else np.asarray(feature_mean, dtype=float)
        self.feature_std = None if feature_std is None else np.asarray(feature_std, dtype=float)
        self.validate()

    def validate(self):
        frame = self._frame
        if frame[list(SCHEMA)].isna().any().any():
            raise ParseError("Records must not have missing fields")
        wind = frame["wind_kw"].to_numpy()
        bad = np.flatnonzero((wind < 0) | (wind > self.wind_cap + TOL_WIND))
        if bad.size:
            raise ParseError(
                "Wind %g kW outside [0, %g] in record %d"
                % (wind[bad[0]], self.wind_cap, bad[0]),
                column="wind_kw",
            )
        bad = np.flatnonzero(frame["load_kw"].to_numpy() <= 0)
        if bad.size:
            raise ParseError(
                "Load must be positive in record %d" % bad[0], column="load_kw"
            )
        steps = frame["timestamp"].diff().iloc[1:]
        wrong = np.flatnonzero((steps != HOUR).to_numpy())
        if wrong.size:
            raise TimestampOrder(
                "Timestamps must increase hourly; record %d follows %s with %s"
                % (
                    wrong[0] + 1,
                    frame["timestamp"].iloc[wrong[0]],
                    frame["timestamp"].iloc[wrong[0] + 1],
                )
            )

    @property
    def frame(self):
        return self._frame.copy()

    def __len__(self):
        return len(self._frame)

    def __eq__(self, other):
        return (
            isinstance(other, SampleSet)
            and self.wind_cap == other.wind_cap
            and self._frame.equals(other._frame)
        )

    def __repr__(self):
        if not len(self):
            return "SampleSet(empty)"
        return "SampleSet(%d records from %s, wind_cap=%g kW)" % (
            len(self),
            self._frame["timestamp"].iloc[0],
            self.wind_cap,
        )

    def _derive(self, frame, **metadata):
        d = dict(
            wind_cap=self.wind_cap,
            wind_multiplier=self.wind_multiplier,
            feature_mean=self.feature_mean,
            feature_std=self.feature_std,
        )
        d.update(metadata)
        return SampleSet(frame, **d)

    def features(self):
        return self._frame[list(FEATURES)].to_numpy()

    def wind(self):
        return self._frame["wind_kw"].to_numpy()

    def load(self):
        return self._frame["load_kw"].to_numpy()

    def timestamps(self):
        return self._frame["timestamp"].to_numpy()

    def n_days(self, horizon=24):
        return len(self) // horizon

    def days(self, horizon=24):
        """
        Whole days as arrays; trailing hours of an incomplete day are dropped.
        :return: (features D x T x 4, wind D x T, load D x T)
        """
        n = self.n_days(horizon) * horizon
        return (
            self.features()[:n].reshape(-1, horizon, len(FEATURES)),
            self.wind()[:n].reshape(-1, horizon),
            self.load()[:n].reshape(-1, horizon),
        )

    def standardization(self):
        """
        :return: (mean, std) of the stored constants, or computed on this set when absent
        """
        if self.feature_mean is not None and self.feature_std is not None:
            return self.feature_mean, self.feature_std
        if not len(self):
            raise EmptyDataset("Cannot standardize an empty dataset")
        features = self.features()
        std = features.std(axis=0)
        return features.mean(axis=0), np.where(std > 0, std, 1.0)

    def head_days(self, days, horizon=24):
        return self._derive(self._frame.iloc[: days * horizon])


def _exact_float(values):
    """Correctly rounded parsing of decimal text; NaN where a field is empty or not finite"""

    def convert(text):
        try:
            value = float(text)
        except ValueError:
            return np.nan
        return value if np.isfinite(value) else np.nan

    return values.map(convert).astype(float)


def _parse_column(raw, column, parser):
    parsed = parser(raw[column])
    bad = np.flatnonzero(parsed.isna().to_numpy())
    if bad.size:
        # header is line 1
        line = int(bad[0]) + 2
        raise ParseError(
            "Cannot parse %s value %r on line %d" % (column, raw[column].iloc[bad[0]], line),
            line=line,
            column=column,
        )
    return parsed


def load_csv(path, schema=SCHEMA, wind_cap=None):
    """
    Read and validate a CSV of hourly records.

    :param path: file with the exact header timestamp,ws10,wd10,ws100,wd100,wind_kw,load_kw
    :param schema: expected header
    :param wind_cap: wind capacity; defaults to the largest wind value
    :raises SchemaMismatch: header differs from schema
    :raises ParseError: a field cannot be parsed or violates a record invariant (with line)
    :raises TimestampOrder: timestamps are not strictly increasing hourly
    """
    path = Path(path)
    if not path.is_file():
        raise DataError("Data file %s does not exist" % path)
    text = path.read_text(encoding="utf-8")
    raw = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
    if tuple(raw.columns) != tuple(schema):
        raise SchemaMismatch(
            "Header %s does not match %s" % (",".join(raw.columns), ",".join(schema))
        )
    frame = pd.DataFrame(
        {
            "timestamp": _parse_column(
                raw, "timestamp", lambda s: pd.to_datetime(s, errors="coerce")
            )
        }
    )
    for column in schema[1:]:
        frame[column] = _parse_column(raw, column, _exact_float)
    for column, valid in (
        ("wind_kw", frame["wind_kw"] >= 0),
        ("load_kw", frame["load_kw"] > 0),
    ):
        if wind_cap is not None and column == "wind_kw":
            valid &= frame["wind_kw"] <= wind_cap + TOL_WIND
        bad = np.flatnonzero(~valid.to_numpy())
        if bad.size:
            line = int(bad[0]) + 2
            raise ParseError(
                "Invalid %s value %g on line %d" % (column, frame[column].iloc[bad[0]], line),
                line=line,
                column=column,
            )
    steps = frame["timestamp"].diff().iloc[1:]
    wrong = np.flatnonzero((steps != HOUR).to_numpy())
    if wrong.size:
        raise TimestampOrder(
            "Timestamp on line %d does not follow the previous one by one hour"
            % (int(wrong[0]) + 3)
        )
    samples = SampleSet(frame, wind_cap=wind_cap)
    logger.debug("Loaded %d records from %s" % (len(samples), path))
    return samples


def write_csv(samples, path):
    """
    Write records with ISO-8601 timestamps; floats keep full precision.
    """
    frame = samples.frame
    frame["timestamp"] = frame["timestamp"].dt.strftime(TIMESTAMP_FORMAT)
    safe_write_text(Path(path), frame.to_csv(index=False))
    logger.info("Wrote %d records to %s" % (len(samples), path))


def split(samples, train_frac=0.8, horizon=24):
    """
    Chronological split on whole days. Standardization constants of the training part
    are stored in both parts.

    :return: (train, test)
    :raises TooSmall: either part would be empty
    """
    n_days = samples.n_days(horizon)
    n_train = int(np.floor(n_days * train_frac + 1e-9))
    if not 0 < train_frac < 1 or n_train < 1 or n_train >= n_days:
        raise TooSmall(
            "Cannot split %d days with train fraction %g into two nonempty parts"
            % (n_days, train_frac)
        )
    frame = samples.frame.iloc[: n_days * horizon]
    train = samples._derive(frame.iloc[: n_train * horizon], feature_mean=None, feature_std=None)
    mean, std = train.standardization()
    train = train._derive(train.frame, feature_mean=mean, feature_std=std)
    test = samples._derive(frame.iloc[n_train * horizon :], feature_mean=mean, feature_std=std)
    logger.debug(
        "Split %d days into %d train and %d test days" % (n_days, n_train, n_days - n_train)
    )
    return train, test


def scale_wind(samples, multiplier):
    """
    Multiply wind realizations and wind capacity; features are untouched.
    """
    if multiplier < 0:
        raise DataError("The wind multiplier must be non-negative")
    frame = samples.frame
    frame["wind_kw"] = frame["wind_kw"] * multiplier
    return samples._derive(
        frame,
        wind_cap=samples.wind_cap * multiplier,
        wind_multiplier=samples.wind_multiplier * multiplier,
    )


def nearest_neighbors(train, queries, k):
    """
    Indices of the k nearest training records (Euclidean on standardized features) per query,
    ties broken by record order.
    """
    if not len(train):
        raise EmptyTrainSet("Scenario sampling needs a nonempty training set")
    if not 1 <= k <= len(train):
        raise TooSmall("k = %d neighbors requested from %d training records" % (k, len(train)))
    mean, std = train.standardization()
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    distances = cdist((queries - mean) / std, (train.features() - mean) / std)
    return np.argsort(distances, axis=1, kind="stable")[:, :k]


def knn_scenarios(train, s_query, k=50, n_scenarios=200, seed=0):
    """
    Draw wind scenarios for each queried hour from the realizations of its k nearest
    training neighbors, uniformly with replacement. Every scenario has probability 1/S.

    :param s_query: features of one hour (4,) or of a day (T, 4)
    :return: (scenarios S x T, probabilities S)
    """
    neighbors = nearest_neighbors(train, s_query, k)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, k, size=(n_scenarios, neighbors.shape[0]))
    hours = np.arange(neighbors.shape[0])
    scenarios = train.wind()[neighbors[hours, picks]]
    return scenarios, np.full(n_scenarios, 1.0 / n_scenarios)


# --- synthetic benchmark ---

LOAD_TARGETS = dict(valley=50.0, mean=56.0, peak=70.0)


def load_profile(valley=50.0, mean=56.0, peak=70.0):
    """
    24-hour load profile with the given minimum, mean and maximum. A smooth two-harmonic
    daily shape in [0, 1] is raised to the power that matches the mean.
    """
    hours = np.arange(24)
    shape = (
        np.cos(2 * np.pi * (hours - 19) / 24)
        + 0.4 * np.cos(4 * np.pi * (hours - 11) / 24)
    )
    shape = (shape - shape.min()) / (shape.max() - shape.min())
    target = (mean - valley) / (peak - valley)
    gamma = brentq(lambda g: np.mean(shape**g) - target, 1e-3, 1e3)
    return valley + (peak - valley) * shape**gamma


def power_curve(speed, wind_cap, rated_speed=12.0, cut_in=3.0):
    """
    Smooth monotone power curve: zero at rest, wind_cap well above the rated speed.
    """
    mid = 0.5 * (cut_in + rated_speed)
    width = (rated_speed - cut_in) / 8.0
    floor = expit(-mid / width)
    return wind_cap * np.clip((expit((speed - mid) / width) - floor) / (1 - floor), 0, 1)


def _ar1(rng, n, mean, phi, sigma, start=None):
    values = np.empty(n)
    values[0] = mean if start is None else start
    shocks = rng.normal(0.0, sigma, size=n)
    for t in range(1, n):
        values[t] = mean + phi * (values[t - 1] - mean) + shocks[t]
    return values


def synth_generate(seed, days, spec=None, wind_cap=None, start="2021-01-01"):
    """
    Synthetic hourly records: a diurnal load with valley 50, mean 56 and peak 70 kW,
    NWP-like AR(1) wind speeds at 10 m and 100 m with directions, and wind power from the
    power curve of the actual 100 m speed (NWP plus an autocorrelated error) with bounded
    noise, clipped to [0, wind_cap]. Fully determined by the seed.

    :param spec: MarketSpec supplying the wind capacity, unless wind_cap is given
    """
    if days < 1:
        raise TooSmall("At least one day must be generated")
    if wind_cap is None:
        wind_cap = spec.wind_cap if spec is not None else 40.0
    rng = np.random.default_rng(seed)
    n = days * 24
    ws100 = np.maximum(_ar1(rng, n, mean=7.5, phi=0.95, sigma=0.9), 0.0)
    ws10 = np.maximum(ws100 * (10 / 100) ** 0.14 + rng.normal(0.0, 0.3, size=n), 0.0)
    wd100 = np.mod(220.0 + np.cumsum(rng.normal(0.0, 8.0, size=n)), 360.0)
    wd10 = np.mod(wd100 + rng.normal(0.0, 10.0, size=n), 360.0)
    actual = np.maximum(ws100 + _ar1(rng, n, mean=0.0, phi=0.7, sigma=0.8, start=0.0), 0.0)
    noise = rng.uniform(-0.03, 0.03, size=n) * wind_cap
    wind = np.clip(power_curve(actual, wind_cap) + noise, 0.0, wind_cap)
    load = np.tile(load_profile(**LOAD_TARGETS), days) + rng.uniform(-0.5, 0.5, size=n)
    load = np.clip(load, LOAD_TARGETS["valley"], LOAD_TARGETS["peak"])
    frame = pd.DataFrame(
        dict(
            timestamp=pd.date_range(start, periods=n, freq=HOUR),
            ws10=ws10,
            wd10=wd10,
            ws100=ws100,
            wd100=wd100,
            wind_kw=wind,
            load_kw=load,
        )
    )
    logger.debug("Generated %d synthetic days with seed %d" % (days, seed))
    return SampleSet(frame, wind_cap=wind_cap)
