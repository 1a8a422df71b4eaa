"""Mini-batch SGD training and evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .model import SOFTMAX, InputSpec, ModelParams, backward, forward

logger = logging.getLogger(__name__)

MSE = "MSE"
CROSS_ENTROPY = "CrossEntropy"
ACCURACY = "Accuracy"
RMSE = "RMSE"


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-2
    seed: int = 0
    split_fraction: float = 0.7

    def __post_init__(self):
        if not 0 < self.split_fraction < 1:
            raise ValueError("split_fraction must lie in (0, 1)")
        if self.epochs < 0 or self.batch_size < 1 or not self.learning_rate > 0:
            raise ValueError("invalid training configuration")


@dataclass
class LossCurve:
    train: list[float] = field(default_factory=list)
    val: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)


def split_indices(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random train/test index split; the train part gets round(n*fraction)."""
    perm = np.random.default_rng(seed).permutation(n)
    k = int(round(n * fraction))
    return np.sort(perm[:k]), np.sort(perm[k:])


def fit_normalization(model: ModelParams, x_train, per_feature: bool = True) -> ModelParams:
    """Copy of ``model`` with z-score constants computed from ``x_train``."""
    x = np.asarray(x_train, dtype=float)
    if per_feature:
        mean, std = x.mean(axis=0), x.std(axis=0)
    else:
        mean = np.full((1,) * (x.ndim - 1), x.mean())
        std = np.full((1,) * (x.ndim - 1), x.std())
    std = np.where(std > 0, std, 1.0)
    out = model.copy()
    spec = model.input_spec
    out.input_spec = InputSpec(spec.names, spec.shape, mean, std)
    return out


def loss_value(model: ModelParams, x, y, loss: str) -> float:
    out = forward(model, x)
    return _loss(out, y, loss)


def _loss(out, y, loss):
    if loss == MSE:
        t = np.asarray(y, dtype=float).reshape(out.shape)
        with np.errstate(over="ignore", invalid="ignore"):  # callers check finiteness
            return float(np.mean((out - t) ** 2))
    p = out[np.arange(out.shape[0]), np.asarray(y, dtype=int)]
    return float(-np.mean(np.log(np.maximum(p, 1e-300))))


def loss_and_grads(model: ModelParams, x, y, loss: str):
    """Loss on a batch and its gradients w.r.t. :meth:`ModelParams.parameters`."""
    out, cache = forward(model, x, return_cache=True)
    n = out.shape[0]
    if loss == MSE:
        t = np.asarray(y, dtype=float).reshape(out.shape)
        d = 2.0 * (out - t) / out.size
        return float(np.mean((out - t) ** 2)), backward(model, cache, d)
    if model.layers[-1].activation != SOFTMAX:
        raise ValueError("CrossEntropy requires a softmax output layer")
    y = np.asarray(y, dtype=int)
    d = out.copy()
    d[np.arange(n), y] -= 1.0
    d /= n
    return _loss(out, y, loss), backward(model, cache, d, softmax_ce=True)


def _accuracy(model, x, y):
    return float(np.mean(np.argmax(forward(model, x), axis=1) == np.asarray(y)))


def train(
    model: ModelParams,
    dataset: tuple,
    config: TrainConfig,
    loss: str = MSE,
    validation: tuple | None = None,
) -> tuple[ModelParams, LossCurve]:
    """Plain mini-batch gradient descent at a fixed learning rate.

    ``dataset`` and ``validation`` are ``(x, y)`` pairs. The input model is
    not modified; normalization constants are left as they are (see
    :func:`fit_normalization`). Deterministic for a given ``config.seed``.
    """
    x, y = (np.asarray(a) for a in dataset)
    if len(x) == 0:
        raise ValueError("empty training set")
    if loss == CROSS_ENTROPY:
        if np.any(y < 0) or np.any(y >= model.n_outputs) or not np.issubdtype(y.dtype, np.integer):
            raise ValueError("class labels do not match the model outputs")
    m = model.copy()
    params = m.parameters()
    rng = np.random.default_rng(config.seed)
    curve = LossCurve()
    n = len(x)
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            val, grads = loss_and_grads(m, x[idx], y[idx], loss)
            if not np.isfinite(val):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch starting {start} "
                    f"(lr={config.learning_rate}); reduce the learning rate"
                )
            for p, g in zip(params, grads):
                p -= config.learning_rate * g
        curve.train.append(loss_value(m, x, y, loss))
        if not np.isfinite(curve.train[-1]):
            raise TrainingError(f"non-finite training loss after epoch {epoch}")
        if validation is not None:
            curve.val.append(loss_value(m, validation[0], validation[1], loss))
        if loss == CROSS_ENTROPY:
            curve.train_acc.append(_accuracy(m, x, y))
            if validation is not None:
                curve.val_acc.append(_accuracy(m, validation[0], validation[1]))
    return m, curve


def predict(model: ModelParams, x) -> np.ndarray:
    return forward(model, x)


def evaluate(model: ModelParams, dataset: tuple, metric: str = MSE) -> tuple[float, np.ndarray]:
    """Metric value and per-example errors.

    Per-example errors are 0/1 misclassification flags for Accuracy and
    signed prediction errors (prediction - label) for MSE/RMSE.
    """
    x, y = dataset
    if len(x) == 0:
        raise ValueError("empty dataset")
    out = forward(model, x)
    if metric == ACCURACY:
        wrong = (np.argmax(out, axis=1) != np.asarray(y)).astype(float)
        return float(1.0 - wrong.mean()), wrong
    return metric_from_errors(out.reshape(len(x), -1)[:, 0] - np.asarray(y, dtype=float), metric)


def metric_from_errors(errors, metric: str) -> tuple[float, np.ndarray]:
    e = np.asarray(errors, dtype=float)
    mse = float(np.mean(e**2))
    if metric == MSE:
        return mse, e
    if metric == RMSE:
        return float(np.sqrt(mse)), e
    raise ValueError(f"unknown metric {metric!r}")
