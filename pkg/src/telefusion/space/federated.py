"""Local fine-tuning and count-weighted one-shot model aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..nn import MSE, ModelParams, TrainConfig, train


@dataclass(frozen=True)
class AdaptConfig:
    epochs: int = 50
    learning_rate: float = 1e-4
    batch_size: int = 32
    seed: int = 0


def local_adapt(global_model: ModelParams, dataset: tuple, cfg: AdaptConfig | None = None) -> ModelParams:
    """Fine-tune every layer of a copy of ``global_model`` on region data.

    The global normalization constants are kept so all regional models share
    one input space and remain aggregable.
    """
    cfg = cfg or AdaptConfig()
    tc = TrainConfig(cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.seed)
    model, _ = train(global_model, dataset, tc, MSE)
    return model


def _same_structure(a: ModelParams, b: ModelParams) -> bool:
    sa, sb = a.input_spec, b.input_spec
    return (
        a.architecture() == b.architecture()
        and list(sa.names) == list(sb.names)
        and sa.shape == sb.shape
        and np.array_equal(sa.mean, sb.mean)
        and np.array_equal(sa.std, sb.std)
    )


def fed_aggregate(models: list[ModelParams], counts: list[int]) -> ModelParams:
    """Parameter-wise average weighted by ``n_k / sum(n_k)``.

    Each element is evaluated exactly in rational arithmetic and rounded
    once, so it is correctly rounded, independent of region order, and never
    leaves the element-wise range of the inputs.
    """
    if not models or len(models) != len(counts):
        raise ValueError("need one positive count per model")
    if any(int(c) != c or c <= 0 for c in counts):
        raise ValueError("counts must be positive integers")
    ref = models[0]
    for m in models[1:]:
        if not _same_structure(ref, m):
            raise ValueError("models do not share one architecture and input spec")
    counts = [int(c) for c in counts]
    total = sum(counts)
    out = ref.copy()
    for k, dst in enumerate(out.parameters()):
        cols = zip(*(m.parameters()[k].ravel().tolist() for m in models))
        avg = [float(sum(n * Fraction(v) for n, v in zip(counts, col)) / total) for col in cols]
        dst[...] = np.reshape(avg, dst.shape)
    return out
