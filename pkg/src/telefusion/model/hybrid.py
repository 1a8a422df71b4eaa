"""Fusion of receiver noise-correlation features with the GN estimate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..dsp import NlFeatures
from ..nn import LINEAR, MSE, LossCurve, ModelParams, TrainConfig, fit_normalization, forward, mlp, train
from ..sim.specs import LinkSpec
from .gn import GnEstimate

HYBRID_SCHEMA_VERSION = 1

RECEIVER_FIELDS = ("anc", "pnc", "cum_cd", "channel_count")
LINK_FIELDS = ("span_number", "span_length", "launch_power", "link_length", "avg_gamma", "avg_alpha")
GN_FIELD = "gn_snr_nl"

# named input schemas
RECEIVER_ONLY = RECEIVER_FIELDS
HYBRID = RECEIVER_FIELDS + (GN_FIELD,)
RECEIVER_LINK = RECEIVER_FIELDS + LINK_FIELDS
HYBRID_LINK = RECEIVER_LINK + (GN_FIELD,)

DIRECT = "Direct"
RESIDUAL = "Residual"


@dataclass(frozen=True)
class HybridInput:
    anc: float
    pnc: float
    cum_cd: float
    channel_count: float
    gn_snr_nl: float
    span_number: float
    span_length: float
    launch_power: float
    link_length: float
    avg_gamma: float
    avg_alpha: float

    def vector(self, schema: tuple[str, ...] = HYBRID) -> np.ndarray:
        return np.array([getattr(self, k) for k in schema], dtype=float)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in HYBRID_LINK}
        d["schema_version"] = HYBRID_SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HybridInput":
        if d.get("schema_version") != HYBRID_SCHEMA_VERSION:
            raise ValueError(f"unsupported hybrid input schema_version {d.get('schema_version')!r}")
        return cls(**{k: float(d[k]) for k in HYBRID_LINK})


def build_hybrid_input(nl: NlFeatures | None, link: LinkSpec | None, gn: GnEstimate | None) -> HybridInput:
    """Concatenate receiver features, link configuration and the GN output."""
    if nl is None or link is None or gn is None:
        raise ValueError("receiver features, link and GN estimate are all required")
    spans = link.spans
    x = HybridInput(
        anc=nl.anc,
        pnc=nl.pnc,
        cum_cd=nl.cum_cd,
        channel_count=float(nl.channel_count),
        gn_snr_nl=gn.snr_nl,
        span_number=float(len(spans)),
        span_length=float(spans[0].length),
        launch_power=float(link.launch_power),
        link_length=float(link.length),
        avg_gamma=float(np.mean([s.gamma for s in spans])),
        avg_alpha=float(np.mean([s.alpha for s in spans])),
    )
    if not all(math.isfinite(v) for v in x.vector(HYBRID_LINK)):
        raise ValueError("hybrid input contains non-finite values")
    return x


@dataclass
class HybridDataset:
    inputs: list[HybridInput]
    labels: np.ndarray  # nonlinear SNR, dB

    def __len__(self) -> int:
        return len(self.inputs)

    def matrix(self, schema: tuple[str, ...]) -> np.ndarray:
        return np.stack([h.vector(schema) for h in self.inputs])

    @property
    def gn(self) -> np.ndarray:
        return np.array([h.gn_snr_nl for h in self.inputs])

    def subset(self, idx) -> "HybridDataset":
        return HybridDataset([self.inputs[i] for i in idx], self.labels[np.asarray(idx)])


@dataclass(frozen=True)
class HybridConfig:
    hidden: int = 10
    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0


def _targets(data: HybridDataset, mode: str) -> np.ndarray:
    if mode == DIRECT:
        return data.labels.astype(float)
    if mode == RESIDUAL:
        return data.labels - data.gn
    raise ValueError(f"unknown mode {mode!r}")


def init_hybrid(schema: tuple[str, ...], mode: str, cfg: HybridConfig, train_data: HybridDataset) -> ModelParams:
    """Untrained one-hidden-layer network with normalization fit on ``train_data``."""
    if mode == RESIDUAL and GN_FIELD not in schema:
        raise ValueError("residual mode needs the GN estimate in the schema")
    model = mlp(len(schema), (cfg.hidden,), 1, output_activation=LINEAR, seed=cfg.seed, names=list(schema))
    model = fit_normalization(model, train_data.matrix(schema))
    model.meta.update({"mode": mode, "schema": list(schema)})
    return model


def train_hybrid(
    data: HybridDataset,
    mode: str = DIRECT,
    schema: tuple[str, ...] = HYBRID,
    cfg: HybridConfig | None = None,
    validation: HybridDataset | None = None,
) -> tuple[ModelParams, LossCurve]:
    """Fit the regressor; in Residual mode the target is ``label - gn_snr_nl``."""
    cfg = cfg or HybridConfig()
    model = init_hybrid(schema, mode, cfg, data)
    val = None
    if validation is not None:
        val = (validation.matrix(schema), _targets(validation, mode))
    tc = TrainConfig(cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.seed)
    return train(model, (data.matrix(schema), _targets(data, mode)), tc, MSE, val)


def predict_hybrid(model: ModelParams, data: HybridDataset) -> np.ndarray:
    """Nonlinear SNR prediction; Residual models add the GN estimate back."""
    schema = tuple(model.meta["schema"])
    out = forward(model, data.matrix(schema))[:, 0]
    if model.meta["mode"] == RESIDUAL:
        return data.gn + out
    return out


def initial_loss(model: ModelParams, data: HybridDataset) -> float:
    """MSE of the untrained model against its own mode's target."""
    out = forward(model, data.matrix(tuple(model.meta["schema"])))[:, 0]
    return float(np.mean((out - _targets(data, model.meta["mode"])) ** 2))
