"""Telemetry features extracted from the digital domain."""

from __future__ import annotations

import logging
from dataclasses import astuple, dataclass, fields

import numpy as np

from ..sim.link import Spectrum, capture_spectrum
from ..sim.waveform import ComplexWaveform
from .equalizer import EqualizerState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DspFeatures:
    tap_mean: float
    tap_max: float
    tap_min: float
    tap_std: float
    spectrum_centroid: float  # GHz
    bw_3db: float  # GHz

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


@dataclass(frozen=True)
class NlFeatures:
    anc: float
    pnc: float
    cum_cd: float  # ps/nm
    channel_count: int


def digital_spectrum(waveform: ComplexWaveform, segment: int = 512) -> Spectrum:
    """Welch-averaged periodogram of the received samples (50 % overlap)."""
    return capture_spectrum(waveform, segment)


def half_power_width(f: np.ndarray, p: np.ndarray, smooth_bins: int = 9) -> float:
    """Width of the contiguous region around the peak where p >= peak/2.

    The spectrum is first smoothed with a centered moving average; the two
    half-power crossings are located by linear interpolation.
    """
    if smooth_bins > 1:
        k = np.ones(smooth_bins) / smooth_bins
        p = np.convolve(np.pad(p, smooth_bins // 2, mode="edge"), k, mode="valid")
    i0 = int(np.argmax(p))
    half = p[i0] / 2
    lo = i0
    while lo > 0 and p[lo - 1] >= half:
        lo -= 1
    hi = i0
    while hi < p.size - 1 and p[hi + 1] >= half:
        hi += 1
    df = f[1] - f[0]
    f_lo = f[lo] - df / 2 if lo == 0 else np.interp(half, [p[lo - 1], p[lo]], [f[lo - 1], f[lo]])
    f_hi = f[hi] + df / 2 if hi == p.size - 1 else np.interp(half, [p[hi + 1], p[hi]], [f[hi + 1], f[hi]])
    return float(f_hi - f_lo)


def extract_dsp_features(
    state: EqualizerState, spectrum: Spectrum, smooth_bins: int = 9
) -> DspFeatures:
    p = np.asarray(spectrum.power_mw, dtype=float)
    f = np.asarray(spectrum.freq_ghz, dtype=float)
    if not np.any(p > 0):
        raise ValueError("spectrum is all zero")
    mag = np.abs(state.taps)
    centroid = float(np.sum(f * p) / np.sum(p))
    bw = half_power_width(f, p, smooth_bins)
    return DspFeatures(
        tap_mean=float(mag.mean()),
        tap_max=float(mag.max()),
        tap_min=float(mag.min()),
        tap_std=float(mag.std()),
        spectrum_centroid=centroid,
        bw_3db=bw,
    )


def lag_correlation_sum(x: np.ndarray, max_lag: int) -> float:
    """Sum over lags 1..max_lag of the normalized (biased) autocorrelation."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    r0 = np.dot(x, x)
    if r0 == 0 or not np.isfinite(r0):
        raise ValueError("degenerate (constant) noise sequence")
    return float(sum(np.dot(x[:-k], x[k:]) / r0 for k in range(1, max_lag + 1)))


def compute_anc_pnc(
    equalized,
    reference,
    phase_trace=None,
    l_anc: int = 3,
    l_pnc: int = 15,
    cum_cd: float = 0.0,
    channel_count: int = 1,
) -> NlFeatures:
    """Amplitude- and phase-noise correlation features.

    The amplitude noise is ``|eq| - |ref|``; the phase noise is the phase
    error before carrier recovery, i.e. ``angle(eq * conj(ref))`` plus the
    recovered phase trace when ``eq`` has already been phase-corrected.
    """
    eq = np.asarray(equalized, dtype=np.complex128)
    ref = np.asarray(reference, dtype=np.complex128)
    if eq.shape != ref.shape:
        raise ValueError("sequences must be aligned and of equal length")
    if eq.size < 10_000:
        logger.debug("ANC/PNC on only %d symbols; estimates are noisy", eq.size)
    amp = np.abs(eq) - np.abs(ref)
    phase = np.angle(eq * np.conj(ref))
    if phase_trace is not None:
        phase = np.angle(np.exp(1j * (phase + np.asarray(phase_trace))))
    return NlFeatures(
        anc=lag_correlation_sum(amp, l_anc),
        pnc=lag_correlation_sum(phase, l_pnc),
        cum_cd=float(cum_cd),
        channel_count=int(channel_count),
    )
