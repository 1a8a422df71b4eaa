"""Two-stage soft-failure localization: DSP features first, then spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..dsp.features import DspFeatures
from ..nn import (
    ACCURACY,
    CROSS_ENTROPY,
    SOFTMAX,
    ModelParams,
    TrainConfig,
    cnn1d,
    fit_normalization,
    forward,
    mlp,
    split_indices,
    train,
)
from ..seeding import STREAM_SPLIT, STREAM_TRAIN, derive_seed
from ..sim.link import Spectrum
from .dataset import CAUSES, SourceExample
from .theory import TheoreticalSpectrum, theoretical_spectrum

logger = logging.getLogger(__name__)

RESIDUAL_POINTS = 256
RESIDUAL_SPAN_GHZ = 35.0


def residual_grid(points: int = RESIDUAL_POINTS, span: float = RESIDUAL_SPAN_GHZ) -> np.ndarray:
    return np.linspace(-span, span, points + 1)[:-1]


@dataclass(frozen=True)
class StageOneVerdict:
    coarse_wss_index: int
    class_probabilities: np.ndarray

    @property
    def healthy(self) -> bool:
        return self.coarse_wss_index == self.class_probabilities.size - 1

    @property
    def confidence(self) -> float:
        return float(self.class_probabilities[self.coarse_wss_index])


@dataclass(frozen=True)
class StageTwoVerdict:
    wss_index: int
    cause: str
    confidence: float
    class_probabilities: np.ndarray = field(repr=False, default=None)


@dataclass
class SpectraWindow:
    coarse_index: int
    window: int
    indices: list[int]
    spectra: list[Spectrum]
    total: int

    @property
    def saving_ratio(self) -> float:
        """Uploaded spectra over all spectra of the link."""
        return len(self.indices) / self.total


# ---------------------------------------------------------------- stage 1


def stage1_localize(model: ModelParams, features: DspFeatures) -> StageOneVerdict:
    """Coarse location; the last class stands for a healthy link."""
    if list(model.input_spec.names) != DspFeatures.names():
        raise ValueError(
            f"stage-1 model expects {model.input_spec.names}, got {DspFeatures.names()}"
        )
    p = forward(model, features.as_array())
    return StageOneVerdict(int(np.argmax(p)), p)


def stage1_model(n_wss: int, seed: int, hidden=(32, 32)) -> ModelParams:
    return mlp(
        6, hidden, n_wss + 1, output_activation=SOFTMAX, seed=seed, names=DspFeatures.names()
    )


# ---------------------------------------------------------------- window


def select_spectra_window(
    coarse_index: int,
    spectra: Sequence[Spectrum] | Callable[[int], Spectrum],
    window: int = 1,
    total: int | None = None,
) -> SpectraWindow:
    """Fetch only the spectra of WSS ``coarse-window .. coarse+window``.

    ``spectra`` is either the full list or a fetch callable (in which case
    ``total`` gives the WSS count); the callable is only ever invoked for
    indices inside the window.
    """
    n = len(spectra) if total is None else total
    if not 0 <= coarse_index < n:
        raise ValueError(f"coarse index {coarse_index} outside 0..{n - 1}")
    fetch = spectra if callable(spectra) else spectra.__getitem__
    idx = list(range(max(0, coarse_index - window), min(n, coarse_index + window + 1)))
    return SpectraWindow(coarse_index, window, idx, [fetch(i) for i in idx], n)


# ---------------------------------------------------------------- residual


def diff_spectrum(
    measured: Spectrum,
    theoretical: TheoreticalSpectrum,
) -> np.ndarray:
    """Peak-normalized measured power minus peak-normalized theory.

    The measured spectrum is linearly resampled onto the theoretical grid; a
    grid not covered by the measurement is rejected.
    """
    grid = theoretical.freq_grid
    f = np.asarray(measured.freq_ghz, dtype=float)
    p = np.asarray(measured.power_mw, dtype=float)
    df = np.median(np.diff(f)) if f.size > 1 else 0.0
    if f.size < 2 or grid.min() < f.min() - df or grid.max() > f.max() + df:
        raise ValueError("measured spectrum does not cover the theoretical grid")
    m = np.interp(grid, f, p)
    if not m.max() > 0:
        raise ValueError("measured spectrum has no power")
    return m / m.max() - theoretical.normalized()


def residual_stack(
    win: SpectraWindow, theory: TheoreticalSpectrum
) -> np.ndarray:
    """(2*window+1, points) array; slots outside the link stay zero."""
    out = np.zeros((2 * win.window + 1, theory.freq_grid.size))
    for i, s in zip(win.indices, win.spectra):
        out[i - win.coarse_index + win.window] = diff_spectrum(s, theory)
    return out


# ---------------------------------------------------------------- stage 2


def stage2_model(window: int, seed: int) -> ModelParams:
    slots = 2 * window + 1
    return cnn1d(slots, RESIDUAL_POINTS, slots * len(CAUSES), seed=seed,
                 names=[f"slot{i - window:+d}" for i in range(slots)])


def stage2_identify(model: ModelParams, residuals: np.ndarray, coarse_index: int, window: int = 1) -> StageTwoVerdict:
    """Joint (slot in window, cause) classification of the residual stack."""
    residuals = np.asarray(residuals, dtype=float)
    if residuals.shape != tuple(model.input_spec.shape):
        raise ValueError(
            f"residual window shape {residuals.shape} != model input {model.input_spec.shape}"
        )
    p = forward(model, residuals)
    k = int(np.argmax(p))
    slot, cause = divmod(k, len(CAUSES))
    return StageTwoVerdict(coarse_index + slot - window, CAUSES[cause].value, float(p[k]), p)


def nominal_theory(nominal_B: float, nominal_otf: float) -> TheoreticalSpectrum:
    return theoretical_spectrum(nominal_B, nominal_otf, residual_grid())


# ---------------------------------------------------------------- driver


@dataclass(frozen=True)
class TwoStageConfig:
    window: int = 1
    split_fraction: float = 0.7
    stage1_epochs: int = 500
    stage1_lr: float = 1e-2
    stage2_epochs: int = 60
    stage2_lr: float = 1e-2
    batch_size: int = 32
    confidence_threshold: float = 0.5
    nominal_B: float = 50.0
    nominal_otf: float = 8.0


@dataclass
class TwoStageResult:
    scalars: dict
    curves: dict
    confusion_stage1: np.ndarray
    confusion_stage2: np.ndarray
    verdicts: list[dict]
    stage1: ModelParams
    stage2: ModelParams


def _windows_for_training(ex: SourceExample, n_wss: int, window: int):
    true = ex.failure.wss_index
    for coarse in range(true - window, true + window + 1):
        if 0 <= coarse < n_wss:
            yield coarse


def localize(
    stage1: ModelParams,
    stage2: ModelParams,
    features: DspFeatures,
    fetch: Callable[[int], Spectrum],
    n_wss: int,
    theory: TheoreticalSpectrum,
    window: int = 1,
) -> tuple[StageOneVerdict, SpectraWindow | None, StageTwoVerdict | None]:
    """Run both stages on one link; spectra are pulled through ``fetch``."""
    v1 = stage1_localize(stage1, features)
    if v1.healthy:
        return v1, None, None
    win = select_spectra_window(v1.coarse_wss_index, fetch, window, total=n_wss)
    v2 = stage2_identify(stage2, residual_stack(win, theory), v1.coarse_wss_index, window)
    return v1, win, v2


def run_two_stage(
    examples: list[SourceExample], master_seed: int, cfg: TwoStageConfig | None = None
) -> TwoStageResult:
    """Train both stages on a 70/30 split and evaluate the fused pipeline."""
    cfg = cfg or TwoStageConfig()
    n_wss = len(examples[0].spectra)
    theory = nominal_theory(cfg.nominal_B, cfg.nominal_otf)
    x = np.array([e.features.as_array() for e in examples])
    y = np.array([e.location_label for e in examples])
    tr, te = split_indices(len(examples), cfg.split_fraction, derive_seed(master_seed, STREAM_SPLIT))

    m1 = fit_normalization(stage1_model(n_wss, derive_seed(master_seed, STREAM_TRAIN, 1)), x[tr])
    m1, curve1 = train(
        m1,
        (x[tr], y[tr]),
        TrainConfig(cfg.stage1_epochs, cfg.batch_size, cfg.stage1_lr, derive_seed(master_seed, STREAM_TRAIN, 2)),
        CROSS_ENTROPY,
        validation=(x[te], y[te]),
    )

    xs, ys = [], []
    for i in tr:
        ex = examples[i]
        if not ex.failure.active:
            continue
        for coarse in _windows_for_training(ex, n_wss, cfg.window):
            win = select_spectra_window(coarse, ex.spectra, cfg.window)
            xs.append(residual_stack(win, theory))
            slot = ex.failure.wss_index - coarse + cfg.window
            ys.append(slot * len(CAUSES) + ex.cause_label)
    xs, ys = np.array(xs), np.array(ys)
    m2 = fit_normalization(stage2_model(cfg.window, derive_seed(master_seed, STREAM_TRAIN, 3)), xs, per_feature=False)
    m2, curve2 = train(
        m2,
        (xs, ys),
        TrainConfig(cfg.stage2_epochs, cfg.batch_size, cfg.stage2_lr, derive_seed(master_seed, STREAM_TRAIN, 4)),
        CROSS_ENTROPY,
    )

    verdicts = []
    conf1 = np.zeros((n_wss + 1, n_wss + 1), dtype=int)
    conf2 = np.zeros((2 * n_wss + 1, 2 * n_wss + 1), dtype=int)
    for i in te:
        ex = examples[i]
        v1, win, v2 = localize(m1, m2, ex.features, ex.spectra.__getitem__, n_wss, theory, cfg.window)
        conf1[ex.location_label, v1.coarse_wss_index] += 1
        pred2 = 2 * n_wss if v2 is None else 2 * v2.wss_index + CAUSES.index(
            next(c for c in CAUSES if c.value == v2.cause)
        )
        true2 = 2 * n_wss if not ex.failure.active else 2 * ex.failure.wss_index + ex.cause_label
        conf2[true2, pred2] += 1
        verdicts.append(
            {
                "example": ex.index,
                "true_wss": ex.failure.wss_index if ex.failure.active else None,
                "true_cause": ex.failure.cause.value,
                "magnitude": ex.failure.magnitude,
                "stage1_wss": None if v1.healthy else v1.coarse_wss_index,
                "stage1_confidence": v1.confidence,
                "window": None if win is None else win.indices,
                "saving_ratio": None if win is None else win.saving_ratio,
                "stage2_wss": None if v2 is None else v2.wss_index,
                "stage2_cause": None if v2 is None else v2.cause,
                "stage2_confidence": None if v2 is None else v2.confidence,
            }
        )

    scalars = _score(verdicts, n_wss, cfg)
    scalars["n_examples"] = len(examples)
    scalars["n_train"] = int(len(tr))
    scalars["n_test"] = int(len(te))
    scalars["n_wss"] = n_wss
    curves = {
        "stage1_loss": {"epoch": list(range(1, len(curve1.train) + 1)), "train_loss": curve1.train, "val_loss": curve1.val},
        "stage1_accuracy": {"epoch": list(range(1, len(curve1.train_acc) + 1)), "train_accuracy": curve1.train_acc, "val_accuracy": curve1.val_acc},
        "stage2_loss": {"epoch": list(range(1, len(curve2.train) + 1)), "train_loss": curve2.train},
    }
    return TwoStageResult(scalars, curves, conf1, conf2, verdicts, m1, m2)


def _score(verdicts: list[dict], n_wss: int, cfg: TwoStageConfig) -> dict:
    fail = [v for v in verdicts if v["true_wss"] is not None]
    healthy = [v for v in verdicts if v["true_wss"] is None]
    s1_ok = [v["stage1_wss"] == v["true_wss"] for v in fail]
    s2_ok = [v["stage2_wss"] == v["true_wss"] and v["stage2_cause"] == v["true_cause"] for v in fail]
    s2_loc = [v["stage2_wss"] == v["true_wss"] for v in fail]
    errors = [v for v, ok in zip(fail, s1_ok) if not ok]
    adjacent = [v for v in errors if v["stage1_wss"] is not None and abs(v["stage1_wss"] - v["true_wss"]) <= 1]
    all_ok = s1_ok + [v["stage1_wss"] is None for v in healthy]
    fp = [v for v in healthy if v["stage1_wss"] is not None and v["stage1_confidence"] > cfg.confidence_threshold]
    ratios = [v["saving_ratio"] for v in verdicts if v["saving_ratio"] is not None]
    interior = [
        v["saving_ratio"] for v in verdicts
        if v["stage1_wss"] is not None and cfg.window <= v["stage1_wss"] < n_wss - cfg.window
    ]
    return {
        "stage1_accuracy": float(np.mean(s1_ok)) if fail else float("nan"),
        "stage1_accuracy_with_healthy": float(np.mean(all_ok)) if all_ok else float("nan"),
        "stage1_adjacent_error_fraction": (len(adjacent) / len(errors)) if errors else 1.0,
        "stage1_errors": len(errors),
        "stage2_accuracy": float(np.mean(s2_ok)) if fail else float("nan"),
        "stage2_location_accuracy": float(np.mean(s2_loc)) if fail else float("nan"),
        "healthy_false_positive_rate": (len(fp) / len(healthy)) if healthy else 0.0,
        "n_healthy_test": len(healthy),
        "mean_saving_ratio": float(np.mean(ratios)) if ratios else float("nan"),
        # no interior verdict means nothing to check, which must not pass
        "interior_saving_ratio": float(interior[0]) if interior else float("nan"),
        "interior_saving_ratios_consistent": bool(interior) and all(r == interior[0] for r in interior),
        "n_interior_verdicts": len(interior),
    }
