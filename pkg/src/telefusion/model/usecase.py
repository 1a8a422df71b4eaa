"""Model-level use case: receiver-only versus GN-fused nonlinear SNR regression."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import spearmanr

from ..corpus import LinkExample
from ..nn import LossCurve, ModelParams, split_indices
from ..seeding import STREAM_SPLIT, STREAM_TRAIN, derive_seed
from ..stats import fingerprint_indices, percentile
from .gn import gn_estimate
from .hybrid import (
    DIRECT,
    HYBRID,
    RECEIVER_LINK,
    RECEIVER_ONLY,
    RESIDUAL,
    HybridConfig,
    HybridDataset,
    build_hybrid_input,
    init_hybrid,
    initial_loss,
    predict_hybrid,
    train_hybrid,
)

# name -> (mode, schema)
VARIANTS = {
    "baseline": (DIRECT, RECEIVER_ONLY),
    "hybrid": (DIRECT, HYBRID),
    "residual": (RESIDUAL, HYBRID),
    "receiver_link": (DIRECT, RECEIVER_LINK),
}


@dataclass(frozen=True)
class ModelUseCaseConfig:
    train_fraction: float = 0.75
    hybrid: HybridConfig = field(default_factory=HybridConfig)


@dataclass
class ModelResult:
    scalars: dict
    errors: dict[str, np.ndarray]  # test-set prediction - label, per variant
    curves: dict[str, LossCurve]
    models: dict[str, ModelParams]
    split: tuple[np.ndarray, np.ndarray]


def hybrid_dataset(examples: list[LinkExample]) -> HybridDataset:
    inputs = [build_hybrid_input(e.nl, e.link, gn_estimate(e.link)) for e in examples]
    return HybridDataset(inputs, np.array([e.snr_nl_db for e in examples], dtype=float))


def run_model_usecase(
    examples: list[LinkExample], cfg: ModelUseCaseConfig | None = None, master_seed: int = 0
) -> ModelResult:
    """Train all variants on one split and compare test errors."""
    cfg = cfg or ModelUseCaseConfig()
    data = hybrid_dataset(examples)
    tr, te = split_indices(len(data), cfg.train_fraction, derive_seed(master_seed, STREAM_SPLIT))
    train_set, test_set = data.subset(tr), data.subset(te)
    hc = replace(cfg.hybrid, seed=derive_seed(master_seed, STREAM_TRAIN))

    scalars: dict = {
        "n_train": int(len(tr)),
        "n_test": int(len(te)),
        "gn_rank_correlation": float(spearmanr(data.gn, data.labels)[0]),
    }
    errors, curves, models = {}, {}, {}
    for name, (mode, schema) in VARIANTS.items():
        model, curve = train_hybrid(train_set, mode, schema, hc, validation=test_set)
        err = predict_hybrid(model, test_set) - test_set.labels
        errors[name], curves[name], models[name] = err, curve, model
        scalars[f"rmse_{name}"] = float(np.sqrt(np.mean(err**2)))
        scalars[f"p95_abs_error_{name}"] = percentile(np.abs(err), 95)
        scalars[f"frac_below_1db_{name}"] = float(np.mean(np.abs(err) < 1.0))
        # both pairs share the split and the training seed
        scalars[f"split_fingerprint_{name}"] = fingerprint_indices(tr) + ":" + fingerprint_indices(te)
    scalars["rmse_relative_reduction"] = (scalars["rmse_baseline"] - scalars["rmse_hybrid"]) / scalars["rmse_baseline"]

    # loss at initialization, identical weights for both modes
    direct0 = init_hybrid(HYBRID, DIRECT, hc, train_set)
    resid0 = init_hybrid(HYBRID, RESIDUAL, hc, train_set)
    scalars["initial_loss_direct"] = initial_loss(direct0, train_set)
    scalars["initial_loss_residual"] = initial_loss(resid0, train_set)
    return ModelResult(scalars, errors, curves, models, (tr, te))
