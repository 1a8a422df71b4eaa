"""Model-level fusion: GN estimate combined with receiver features."""

from .gn import GnEstimate, gn_estimate, nli_coefficient, wdm_bandwidth
from .hybrid import (
    DIRECT,
    HYBRID,
    HYBRID_LINK,
    RECEIVER_LINK,
    RECEIVER_ONLY,
    RESIDUAL,
    HybridConfig,
    HybridDataset,
    HybridInput,
    build_hybrid_input,
    predict_hybrid,
    train_hybrid,
)
from .usecase import ModelResult, ModelUseCaseConfig, hybrid_dataset, run_model_usecase

__all__ = [
    "DIRECT",
    "GnEstimate",
    "HYBRID",
    "HYBRID_LINK",
    "HybridConfig",
    "HybridDataset",
    "HybridInput",
    "ModelResult",
    "ModelUseCaseConfig",
    "RECEIVER_LINK",
    "RECEIVER_ONLY",
    "RESIDUAL",
    "build_hybrid_input",
    "gn_estimate",
    "hybrid_dataset",
    "nli_coefficient",
    "predict_hybrid",
    "run_model_usecase",
    "train_hybrid",
    "wdm_bandwidth",
]
