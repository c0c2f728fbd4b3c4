"""
Settings for valuecast: solver tolerances and budgets, problem-size limits, worker
processes, console display and checkpoint compression.
"""

from contextlib import contextmanager
import json
import os
import pprint
import logging
import collections
from .errors import ConfigError

LOCALCONFIG = "vc_local_conf.json"
GLOBALCONFIG = ".valuecast_config.json"

logger = logging.getLogger(__name__.split(".")[0])
log_levels = {
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "CRITICAL": logging.CRITICAL,
    "DEBUG": logging.DEBUG,
    "ERROR": logging.ERROR,
    None: logging.NOTSET,
}


def _positive_int(value):
    return isinstance(value, int) and not isinstance(value, bool) and value > 0


def _positive_int_or_none(value):
    return value is None or _positive_int(value)


# key: (default, validator, meaning)
entries = {
    "loglevel": ("INFO", lambda a: a in log_levels, "package log level"),
    "solver.max_iterations": (
        None,
        _positive_int_or_none,
        "simplex iteration cap; None scales with the problem: 50 * (rows + columns) + 1000",
    ),
    "solver.refactor_interval": (64, _positive_int, "pivots between basis refactorizations"),
    "solver.degenerate_threshold": (
        50,
        _positive_int,
        "consecutive degenerate pivots before Bland's rule",
    ),
    "milp.node_budget": (100_000, _positive_int, "branch-and-bound nodes per solve"),
    "milp.tol_int": (
        1e-6,
        lambda a: isinstance(a, float) and 0 < a < 0.5,
        "distance from an integer still taken as integral",
    ),
    "scale.max_variables": (5000, _positive_int, "largest LP accepted, in variables"),
    "scale.max_rows": (10000, _positive_int, "largest LP accepted, in constraint rows"),
    "processes": (1, _positive_int_or_none, "worker processes for per-day jobs; None: all cores"),
    "display.progress": (False, lambda a: isinstance(a, bool), "tqdm progress bars"),
    "display.limit": (12, _positive_int, "rows shown by preview"),
    "display.width": (14, _positive_int, "column width of preview"),
    "checkpoint.compress": (True, lambda a: isinstance(a, bool), "compress checkpoints"),
    "checkpoint.compression": (
        "zlib",
        lambda a: a in ("zlib", "snappy"),
        "checkpoint compressor",
    ),
}

default = {key: entry[0] for key, entry in entries.items()}

# environment variable: (key, conversion)
environment = {
    "VALUECAST_LOG_LEVEL": ("loglevel", str.upper),
    "VALUECAST_PROCESSES": ("processes", int),
}


class Config(collections.abc.MutableMapping):
    """
    Behaves like a dictionary of dotted keys, but validates the known keys when they are set.
    Unknown keys are stored as given.

    The defaults are in valuecast.settings.default . On import, the local or global JSON
    settings file (whichever exists first) and then the environment override them.
    """

    def __init__(self, *args, **kwargs):
        self._conf = dict(default)
        for key, value in dict(*args, **kwargs).items():
            self[key] = value

    def __getitem__(self, key):
        return self._conf[key]

    def __setitem__(self, key, value):
        logger.debug("Setting %s to %r" % (key, value))
        if key in entries and not entries[key][1](value):
            raise ConfigError(
                "Invalid value %r for %s (%s)" % (value, key, entries[key][2])
            )
        self._conf[key] = value

    def __delitem__(self, key):
        del self._conf[key]

    def __iter__(self):
        return iter(self._conf)

    def __len__(self):
        return len(self._conf)

    def __str__(self):
        return pprint.pformat(self._conf, indent=4)

    def __repr__(self):
        return self.__str__()

    def save(self, filename, verbose=False):
        """
        Saves the settings in JSON format to the given file path.

        :param filename: filename of the local JSON settings file.
        :param verbose: report having saved the settings file
        """
        with open(filename, "w") as fid:
            json.dump(self._conf, fid, indent=4)
        if verbose:
            logger.info("Saved settings in %s" % filename)

    def load(self, filename=None):
        """
        Updates the settings from a JSON file. Every loaded value is validated.

        :param filename: the JSON settings file, default the local config file
        """
        with open(filename or LOCALCONFIG, "r") as fid:
            for key, value in json.load(fid).items():
                self[key] = value

    def save_local(self, verbose=False):
        self.save(LOCALCONFIG, verbose)

    def save_global(self, verbose=False):
        self.save(os.path.expanduser(os.path.join("~", GLOBALCONFIG)), verbose)

    def load_environment(self, environ=None):
        """
        Apply the VALUECAST_* environment variables that are set.
        """
        environ = os.environ if environ is None else environ
        for variable, (key, convert) in environment.items():
            if environ.get(variable) is not None:
                try:
                    value = convert(environ[variable])
                except ValueError:
                    raise ConfigError("Cannot read %s=%r" % (variable, environ[variable]))
                self[key] = value

    def max_iterations(self, n_rows, n_cols):
        """
        :return: the simplex iteration cap for a problem of the given size
        """
        cap = self["solver.max_iterations"]
        return cap if cap is not None else 50 * (n_rows + n_cols) + 1000

    @contextmanager
    def __call__(self, **kwargs):
        """
        Temporarily change settings in a with statement. Keyword arguments are the keys
        with '.' replaced by a double underscore '__'. The previous settings are restored on
        exit, also when the block raises.

        Example:
        >>> import valuecast as vc
        >>> with vc.config(milp__node_budget=10, processes=4) as cfg:
        >>>     # solve with a tight node budget on four processes
        """
        backup = self._conf
        self._conf = dict(backup)
        try:
            for key, value in kwargs.items():
                self[key.replace("__", ".")] = value
            yield self
        finally:
            self._conf = backup


config = Config()
config_files = (
    os.path.expanduser(n) for n in (LOCALCONFIG, os.path.join("~", GLOBALCONFIG))
)
try:
    config_file = next(n for n in config_files if os.path.exists(n))
except StopIteration:
    pass
else:
    config.load(config_file)
config.load_environment()

logger.setLevel(log_levels[config["loglevel"]])
