"""Receiver chain: CDC, matched filter, LMS, CPR, SNR and feature taps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sim.link import LinkResult, Spectrum
from ..sim.specs import LinkSpec
from ..sim.transmitter import matched_filter
from .cdc import cdc
from .cpr import carrier_phase_recover
from .equalizer import EqualizerState, lms_equalize
from .features import DspFeatures, digital_spectrum, extract_dsp_features
from .metrics import measure_snr


@dataclass(frozen=True)
class RxConfig:
    tap_count: int = 25
    step_size: float = 1e-3
    n_train: int = 10_000
    rolloff: float = 0.02
    spectrum_segment: int = 512
    run_cpr: bool = True
    cpr_window: int = 256  # no laser phase noise to track, so long is cheap


@dataclass
class RxOutput:
    symbols: np.ndarray
    state: EqualizerState
    spectrum: Spectrum
    features: DspFeatures
    snr_db: float
    phase_trace: np.ndarray
    cpr_info: dict


def receive(link: LinkSpec, result: LinkResult, cfg: RxConfig | None = None) -> RxOutput:
    """Run the full coherent receiver on a simulated center channel."""
    cfg = cfg or RxConfig()
    rs = link.symbol_rate * 1e9
    ref = result.truth["symbols"]
    x = cdc(result.rx, link.accumulated_dispersion)
    spec = digital_spectrum(x, cfg.spectrum_segment)
    x = matched_filter(x, cfg.rolloff, rs)
    y, state = lms_equalize(
        x,
        cfg.tap_count,
        cfg.step_size,
        training_symbols=ref[: cfg.n_train],
        modulation=link.modulation,
        symbol_rate=rs,
        n_symbols=ref.size,
    )
    if cfg.run_cpr:
        y, trace, info = carrier_phase_recover(y, link.modulation, window=cfg.cpr_window)
    else:
        trace, info = np.zeros(y.size), {"cycle_slips": 0, "slip_flag": False}
    start = min(cfg.n_train, y.size // 2)
    snr = measure_snr(y[start:], ref[start:])
    feats = extract_dsp_features(state, spec)
    return RxOutput(y, state, spec, feats, snr, trace, info)
