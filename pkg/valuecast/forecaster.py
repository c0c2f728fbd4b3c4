"""
Point-forecast models with a bounded output, their losses and the Adam update.

A ForecastModel maps a standardized feature vector s to a wind forecast
forecast = wind_cap * sigmoid(a(s)), where a is the raw output of a ReLU network
(or of an affine map for the linear architecture).
"""

import logging
from pathlib import Path
import numpy as np
from scipy.special import expit
from .errors import (
    ModelError,
    DimensionMismatch,
    ShapeMismatch,
    InvalidQuantile,
    DegeneratePrices,
    OutOfRange,
    CheckpointError,
)
from . import blob
from .hash import buffer_digest
from .settings import config
from .utils import safe_write
from .version import __version__

logger = logging.getLogger(__name__.split(".")[0])

CHECKPOINT_FORMAT = "valuecast-model"
ARCHITECTURES = ("mlp", "linear")


class ForecastModel:
    """
    :param input_dim: number of features
    :param hidden: hidden layer sizes of the MLP; ignored for the linear architecture
    :param wind_cap: output scale (kW)
    :param architecture: "mlp" or "linear"
    :param seed: seed of the uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization
    :param feature_mean, feature_std: standardization applied to raw features by forward
    """

    def __init__(
        self,
        input_dim=4,
        hidden=(256, 256),
        wind_cap=40.0,
        architecture="mlp",
        seed=0,
        feature_mean=None,
        feature_std=None,
    ):
        if architecture not in ARCHITECTURES:
            raise ModelError(
                "Unknown architecture %r, use one of %s" % (architecture, ARCHITECTURES)
            )
        if input_dim < 1 or wind_cap < 0:
            raise ModelError("Input dimension must be positive and wind_cap non-negative")
        self.architecture = architecture
        self.hidden = tuple(int(h) for h in hidden) if architecture == "mlp" else ()
        self.input_dim = int(input_dim)
        self.wind_cap = float(wind_cap)
        self.feature_mean = (
            np.zeros(self.input_dim)
            if feature_mean is None
            else np.asarray(feature_mean, dtype=float)
        )
        self.feature_std = (
            np.ones(self.input_dim)
            if feature_std is None
            else np.asarray(feature_std, dtype=float)
        )
        rng = np.random.default_rng(seed)
        self.params = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            limit = 1.0 / np.sqrt(fan_in)
            self.params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.params.append(rng.uniform(-limit, limit, size=fan_out))

    @property
    def layer_sizes(self):
        return (self.input_dim,) + self.hidden + (1,)

    @property
    def n_params(self):
        return sum(p.size for p in self.params)

    def descriptor(self):
        return dict(
            architecture=self.architecture,
            hidden=list(self.hidden),
            input_dim=self.input_dim,
            wind_cap=self.wind_cap,
        )

    def set_scaling(self, mean, std):
        self.feature_mean = np.asarray(mean, dtype=float)
        self.feature_std = np.asarray(std, dtype=float)

    def copy(self):
        other = ForecastModel.__new__(ForecastModel)
        other.__dict__.update(self.__dict__)
        other.params = [p.copy() for p in self.params]
        return other

    def __repr__(self):
        return "ForecastModel(%s %s, %d parameters, wind_cap=%g)" % (
            self.architecture,
            "x".join(str(n) for n in self.layer_sizes),
            self.n_params,
            self.wind_cap,
        )


def _features(model, s):
    s = np.asarray(s, dtype=float)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    if s.ndim != 2 or s.shape[1] != model.input_dim:
        raise DimensionMismatch(
            "Model expects %d features, got shape %s" % (model.input_dim, s.shape)
        )
    return (s - model.feature_mean) / model.feature_std, single


def _activations(model, x):
    """
    :return: list of layer inputs and the raw output a
    """
    inputs = []
    h = x
    n_layers = len(model.params) // 2
    for k in range(n_layers):
        inputs.append(h)
        z = h @ model.params[2 * k] + model.params[2 * k + 1]
        h = np.maximum(z, 0.0) if k < n_layers - 1 else z
    return inputs, h[:, 0]


def forward(model, s):
    """
    :param s: feature vector (input_dim,) or batch (N, input_dim)
    :return: forecast in [0, wind_cap], a float for a single vector
    """
    x, single = _features(model, s)
    _, a = _activations(model, x)
    forecast = model.wind_cap * expit(a)
    return float(forecast[0]) if single else forecast


def backward(model, s, upstream_grad):
    """
    Reverse accumulation of sum_n upstream_grad[n] * d forecast[n] / d params.

    :param s: features (N, input_dim) or one vector
    :param upstream_grad: d loss / d forecast per sample
    :return: list of gradients shaped like model.params
    """
    x, _ = _features(model, s)
    upstream = np.atleast_1d(np.asarray(upstream_grad, dtype=float))
    if upstream.shape != (x.shape[0],):
        raise ShapeMismatch(
            "Upstream gradient of shape %s for %d samples" % (upstream.shape, x.shape[0])
        )
    inputs, a = _activations(model, x)
    sig = expit(a)
    delta = (upstream * model.wind_cap * sig * (1.0 - sig))[:, None]
    grads = [None] * len(model.params)
    for k in reversed(range(len(inputs))):
        grads[2 * k] = inputs[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.params[2 * k].T) * (inputs[k] > 0)
    return grads


class AdamState:
    """
    First and second moment accumulators of Adam, shape-congruent with the parameters.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ModelError("The learning rate must be positive")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.step = 0


def adam_step(params, grads, state):
    """
    Bias-corrected Adam update. Advances the state in place.

    :return: list of updated parameters
    """
    if len(grads) != len(params) or len(state.m) != len(params):
        raise ShapeMismatch(
            "%d gradients for %d parameters" % (len(grads), len(params))
        )
    for p, g, m in zip(params, grads, state.m):
        if np.shape(g) != p.shape or m.shape != p.shape:
            raise ShapeMismatch(
                "Gradient of shape %s for parameter of shape %s" % (np.shape(g), p.shape)
            )
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    updated = []
    for k, (p, g) in enumerate(zip(params, grads)):
        state.m[k] = b1 * state.m[k] + (1 - b1) * g
        state.v[k] = b2 * state.v[k] + (1 - b2) * np.square(g)
        m_hat = state.m[k] / correction1
        v_hat = state.v[k] / correction2
        updated.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return updated


# --- losses ---


def value_loss(forecast, realization, lam, nu):
    """
    Decision loss at fixed prices: -lam * forecast - nu * (realization - forecast)
    """
    forecast = np.asarray(forecast, dtype=float)
    return -lam * forecast - nu * (realization - forecast)


def value_loss_grad(forecast, realization, lam, nu):
    """
    d value_loss / d forecast = nu - lam, constant while the dispatch bases do not change
    """
    return np.broadcast_to(
        np.asarray(nu, dtype=float) - lam, np.broadcast(forecast, realization, lam, nu).shape
    ).copy()


def mse_loss(prediction, realization):
    return np.square(np.asarray(prediction, dtype=float) - realization)


def mse_loss_grad(prediction, realization):
    return 2.0 * (np.asarray(prediction, dtype=float) - realization)


def _check_quantile(quantile):
    if not 0.0 < quantile < 1.0:
        raise InvalidQuantile("Quantile level %r outside (0, 1)" % quantile)


def pinball_loss(prediction, realization, quantile):
    _check_quantile(quantile)
    error = realization - np.asarray(prediction, dtype=float)
    return np.maximum(quantile * error, (quantile - 1.0) * error)


def pinball_loss_grad(prediction, realization, quantile):
    """
    Subgradient in the prediction; at prediction == realization the left limit -quantile.
    """
    _check_quantile(quantile)
    prediction = np.asarray(prediction, dtype=float)
    return np.where(prediction > realization, 1.0 - quantile, -quantile)


def nominal_level(lam, nu_up, nu_down):
    """
    Newsvendor critical fractile (lam - nu_down) / (nu_up - nu_down).
    """
    if nu_up == nu_down:
        raise DegeneratePrices("Real-time up and down prices coincide at %g" % nu_up)
    if nu_up < nu_down:
        raise DegeneratePrices(
            "Real-time up price %g below down price %g" % (nu_up, nu_down)
        )
    if not nu_down <= lam <= nu_up:
        raise OutOfRange(
            "Day-ahead price %g outside [%g, %g]" % (lam, nu_down, nu_up)
        )
    return (lam - nu_down) / (nu_up - nu_down)


# --- checkpoints ---


def model_to_dict(model):
    return dict(
        format=CHECKPOINT_FORMAT,
        version=__version__,
        descriptor=model.descriptor(),
        params=list(model.params),
        feature_mean=model.feature_mean,
        feature_std=model.feature_std,
    )


def model_from_dict(d):
    try:
        if d["format"] != CHECKPOINT_FORMAT:
            raise CheckpointError("Not a model checkpoint: %r" % d["format"])
        desc = d["descriptor"]
        model = ForecastModel(
            input_dim=desc["input_dim"],
            hidden=desc["hidden"],
            wind_cap=desc["wind_cap"],
            architecture=desc["architecture"],
            feature_mean=d["feature_mean"],
            feature_std=d["feature_std"],
        )
        params = list(d["params"])
    except (KeyError, TypeError) as e:
        raise CheckpointError("Incomplete checkpoint: %s" % e)
    if len(params) != len(model.params) or any(
        p.shape != q.shape for p, q in zip(params, model.params)
    ):
        raise CheckpointError("Checkpoint parameters do not match the architecture")
    model.params = params
    return model


def save_model(model, path):
    """
    Write a checkpoint atomically.
    :return: md5 hex digest of the written bytes
    """
    data = blob.pack(model_to_dict(model), compress=config["checkpoint.compress"])
    safe_write(Path(path), data)
    logger.debug("Saved checkpoint %s" % path)
    return buffer_digest(data)


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise CheckpointError("Checkpoint %s does not exist" % path)
    return model_from_dict(blob.unpack(path.read_bytes()))
