"""Blind phase search carrier phase recovery."""

from __future__ import annotations

import logging

import numpy as np
from scipy.ndimage import uniform_filter1d

from ..sim.transmitter import constellation

logger = logging.getLogger(__name__)


def _slice(z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Nearest point of a square constellation, by per-axis rounding."""
    levels = np.unique(np.round(pts.real, 12))
    step = levels[1] - levels[0]
    lo, hi = levels[0], levels[-1]
    re = np.clip(np.round((z.real - lo) / step) * step + lo, lo, hi)
    im = np.clip(np.round((z.imag - lo) / step) * step + lo, lo, hi)
    return re + 1j * im


def carrier_phase_recover(
    symbols,
    modulation="QAM16",
    n_phases: int = 64,
    window: int = 64,
    refine: bool = True,
):
    """Blind phase search followed by a decision-aided refinement.

    The coarse stage tests ``n_phases`` rotations over the pi/2 symmetry
    range and keeps the one with the smallest windowed decision distance.
    The fine stage re-estimates the phase inside the same window from the
    coarse decisions, removing the grid quantization. The trace is unwrapped
    with period pi/2. The search runs on a copy scaled to the constellation
    power, so an MMSE-shrunk equalizer output slices correctly.

    Returns
    -------
    corrected : ndarray
    trace : ndarray
        Per-symbol phase estimate in rad.
    info : dict
        ``cycle_slips`` counts jumps of the unwrapped coarse trace larger than
        pi/4 within one window; ``slip_flag`` is set when any occur.
    """
    y = np.asarray(symbols, dtype=np.complex128)
    pts = constellation(modulation)
    y_in = y
    y = y * np.sqrt(np.mean(np.abs(pts) ** 2) / np.mean(np.abs(y) ** 2))
    test = (np.arange(n_phases) / n_phases - 0.5) * (np.pi / 2)
    dist = np.empty((n_phases, y.size))
    for b, th in enumerate(test):
        r = y * np.exp(-1j * th)
        dist[b] = np.abs(r - _slice(r, pts)) ** 2
    dist = uniform_filter1d(dist, window, axis=1, mode="wrap")
    coarse = test[np.argmin(dist, axis=0)]
    coarse = np.unwrap(4 * coarse) / 4
    trace = coarse
    if refine:
        d = _slice(y * np.exp(-1j * coarse), pts) * np.exp(1j * coarse)
        corr = y * np.conj(d)
        re = uniform_filter1d(corr.real, window, mode="wrap")
        im = uniform_filter1d(corr.imag, window, mode="wrap")
        # residual left after the coarse rotation, within +-pi
        trace = coarse + np.angle(re + 1j * im)
    jumps = np.abs(coarse[window:] - coarse[:-window]) > np.pi / 4 if y.size > window else []
    slips = int(np.count_nonzero(np.diff(np.asarray(jumps, dtype=int)) == 1))
    if slips:
        logger.debug("carrier phase recovery: %d possible cycle slips", slips)
    info = {"cycle_slips": slips, "slip_flag": slips > 0}
    return y_in * np.exp(-1j * trace), trace, info
