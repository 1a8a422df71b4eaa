"""Layered network parameters and their forward / backward passes."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

LEAKY_SLOPE = 0.01

DENSE = "Dense"
CONV1D = "Conv1D"
POOL = "Pool"
LEAKY_RELU = "LeakyReLU"
LINEAR = "Linear"
SOFTMAX = "Softmax"


class ShapeError(ValueError):
    pass


@dataclass
class Layer:
    kind: str
    weights: np.ndarray
    biases: np.ndarray
    activation: str = LINEAR
    pool: int = 2  # only used by Pool layers

    def __post_init__(self):
        if self.kind not in (DENSE, CONV1D, POOL):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in (LEAKY_RELU, LINEAR, SOFTMAX):
            raise ValueError(f"unknown activation {self.activation!r}")
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)

    @property
    def kernel(self) -> int:
        return self.weights.shape[2] if self.kind == CONV1D else 0


@dataclass
class InputSpec:
    names: list[str]
    shape: tuple[int, ...]
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.std))):
            raise ValueError("normalization constants must be finite")
        if np.any(self.std <= 0):
            raise ValueError("normalization std must be positive")


@dataclass
class ModelParams:
    layers: list[Layer]
    input_spec: InputSpec
    meta: dict = field(default_factory=dict)

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)

    def parameters(self) -> list[np.ndarray]:
        """Flat list of trainable arrays (weights, biases per layer)."""
        out = []
        for layer in self.layers:
            if layer.kind != POOL:
                out += [layer.weights, layer.biases]
        return out

    def architecture(self) -> list[tuple]:
        return [
            (l.kind, l.activation, l.weights.shape, l.biases.shape, l.pool) for l in self.layers
        ]

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].biases.shape[0]


# ----------------------------------------------------------------- init


def _glorot(rng, shape, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


def mlp(
    n_inputs: int,
    hidden: tuple[int, ...],
    n_outputs: int,
    *,
    output_activation: str = LINEAR,
    seed: int = 0,
    names: list[str] | None = None,
) -> ModelParams:
    """Dense network with LeakyReLU hidden layers."""
    rng = np.random.default_rng(seed)
    sizes = [n_inputs, *hidden, n_outputs]
    layers = []
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        act = output_activation if i == len(sizes) - 2 else LEAKY_RELU
        layers.append(Layer(DENSE, _glorot(rng, (a, b), a, b), np.zeros(b), act))
    spec = InputSpec(names or [f"x{i}" for i in range(n_inputs)], (n_inputs,), np.zeros(n_inputs), np.ones(n_inputs))
    return ModelParams(layers, spec)


def cnn1d(
    in_channels: int,
    length: int,
    n_classes: int,
    *,
    channels: tuple[int, ...] = (8, 16),
    kernel: int = 5,
    seed: int = 0,
    names: list[str] | None = None,
) -> ModelParams:
    """Conv1D(kernel) + LeakyReLU + max-pool(2) blocks, then a softmax dense layer."""
    rng = np.random.default_rng(seed)
    layers = []
    c_in, n = in_channels, length
    for c_out in channels:
        w = _glorot(rng, (c_out, c_in, kernel), c_in * kernel, c_out * kernel)
        layers.append(Layer(CONV1D, w, np.zeros(c_out), LEAKY_RELU))
        layers.append(Layer(POOL, np.zeros(0), np.zeros(0), LINEAR, pool=2))
        c_in, n = c_out, n // 2
    flat = c_in * n
    layers.append(Layer(DENSE, _glorot(rng, (flat, n_classes), flat, n_classes), np.zeros(n_classes), SOFTMAX))
    spec = InputSpec(
        names or [f"ch{i}" for i in range(in_channels)],
        (in_channels, length),
        np.zeros((1, 1)),
        np.ones((1, 1)),
    )
    return ModelParams(layers, spec)


# ----------------------------------------------------------- activations


def leaky_relu(z):
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def softmax(z):
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _activate(z, act):
    if act == LEAKY_RELU:
        return leaky_relu(z)
    if act == SOFTMAX:
        return softmax(z)
    return z


# --------------------------------------------------------------- layers


def _conv_forward(x, w, b):
    # x (N, C, L), w (O, C, K): 'same' zero padding, stride 1
    k = w.shape[2]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, k - 1 - pad)))
    cols = np.lib.stride_tricks.sliding_window_view(xp, k, axis=2)  # N, C, L, K
    return np.einsum("nclk,ock->nol", cols, w, optimize=True) + b[None, :, None], cols


def _conv_backward(dz, cols, w, x_shape):
    k = w.shape[2]
    pad = k // 2
    dw = np.einsum("nol,nclk->ock", dz, cols, optimize=True)
    db = dz.sum(axis=(0, 2))
    n, c, length = x_shape
    dxp = np.zeros((n, c, length + k - 1))
    for j in range(k):
        dxp[:, :, j : j + length] += np.einsum("nol,oc->ncl", dz, w[:, :, j], optimize=True)
    return dxp[:, :, pad : pad + length], dw, db


def _pool_forward(x, p):
    n, c, length = x.shape
    m = length // p
    xr = x[:, :, : m * p].reshape(n, c, m, p)
    return xr.max(axis=3), xr


def _pool_backward(dy, xr, x_shape):
    mask = xr == xr.max(axis=3, keepdims=True)
    # route to the first maximum only
    first = np.cumsum(mask, axis=3) == 1
    mask &= first
    dx = np.zeros(x_shape)
    n, c, m, p = xr.shape
    dx[:, :, : m * p] = (mask * dy[..., None]).reshape(n, c, m * p)
    return dx


def normalize(model: ModelParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    shape = model.input_spec.shape
    if x.shape[1:] != shape:
        if x.shape == shape:
            x = x[None]
        else:
            raise ShapeError(f"input shape {x.shape} does not match model input {shape}")
    return (x - model.input_spec.mean) / model.input_spec.std


def forward(model: ModelParams, x, return_cache: bool = False):
    """Evaluate the network on a batch (or a single example).

    Inputs are normalized with the model's stored constants first.
    """
    single = np.asarray(x).shape == model.input_spec.shape
    a = normalize(model, x)
    cache = []
    for layer in model.layers:
        if layer.kind == DENSE:
            inp_shape = a.shape
            a2 = a.reshape(a.shape[0], -1)
            if a2.shape[1] != layer.weights.shape[0]:
                raise ShapeError("dense layer input width mismatch")
            z = a2 @ layer.weights + layer.biases
            cache.append((a2, inp_shape, z))
        elif layer.kind == CONV1D:
            z, cols = _conv_forward(a, layer.weights, layer.biases)
            cache.append((cols, a.shape, z))
        else:
            z, xr = _pool_forward(a, layer.pool)
            cache.append((xr, a.shape, z))
        a = _activate(z, layer.activation)
    out = a[0] if single else a
    return (out, cache) if return_cache else out


def backward(model: ModelParams, cache, d_out, softmax_ce: bool = False):
    """Backpropagate ``d_out`` (gradient w.r.t. network output).

    With ``softmax_ce`` the caller passes dL/dz of the final pre-softmax
    logits (the fused softmax + cross-entropy gradient).
    Returns gradients aligned with :meth:`ModelParams.parameters`.
    """
    grads = []
    g = d_out
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        saved, inp_shape, z = cache[idx]
        if layer.activation == LEAKY_RELU:
            g = g * np.where(z > 0, 1.0, LEAKY_SLOPE)
        elif layer.activation == SOFTMAX and not (softmax_ce and idx == len(model.layers) - 1):
            s = softmax(z)
            g = s * (g - np.sum(g * s, axis=-1, keepdims=True))
        if layer.kind == DENSE:
            dw = saved.T @ g
            db = g.sum(axis=0)
            g = (g @ layer.weights.T).reshape(inp_shape)
            grads += [db, dw]
        elif layer.kind == CONV1D:
            g, dw, db = _conv_backward(g, saved, layer.weights, inp_shape)
            grads += [db, dw]
        else:
            g = _pool_backward(g, saved, inp_shape)
    return grads[::-1]
