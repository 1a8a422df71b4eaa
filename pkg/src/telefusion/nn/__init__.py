"""Small numpy neural-network engine (dense MLP and 1-D CNN)."""

from .model import (
    CONV1D,
    DENSE,
    LEAKY_RELU,
    LINEAR,
    POOL,
    SOFTMAX,
    InputSpec,
    Layer,
    ModelParams,
    ShapeError,
    backward,
    cnn1d,
    forward,
    leaky_relu,
    mlp,
    softmax,
)
from .serialize import ModelFormatError, deserialize, from_document, serialize, to_document
from .training import (
    ACCURACY,
    CROSS_ENTROPY,
    MSE,
    RMSE,
    LossCurve,
    TrainConfig,
    TrainingError,
    evaluate,
    fit_normalization,
    loss_and_grads,
    loss_value,
    metric_from_errors,
    predict,
    split_indices,
    train,
)
