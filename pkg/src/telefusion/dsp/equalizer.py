"""Data-aided / decision-directed LMS equalizer."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..sim.transmitter import constellation
from ..sim.waveform import ComplexWaveform

logger = logging.getLogger(__name__)


@dataclass
class EqualizerState:
    taps: np.ndarray
    step_size: float
    error_trace: np.ndarray
    converged: bool = True
    input_scale: float = 1.0


@njit(cache=True)
def _lms_loop(x, taps, mu, sps, train, n_train, const, n_out, adapt_dd):
    n_taps = taps.size
    c = n_taps // 2
    n = x.size
    y = np.empty(n_out, dtype=np.complex128)
    err = np.empty(n_out, dtype=np.float64)
    buf = np.empty(n_taps, dtype=np.complex128)
    for k in range(n_out):
        base = k * sps + c
        acc = 0j
        for i in range(n_taps):
            v = x[(base - i) % n]
            buf[i] = v
            acc += taps[i] * v
        y[k] = acc
        if k < n_train:
            d = train[k]
        else:
            best = 1e300
            d = const[0]
            for p in range(const.size):
                dist = abs(acc - const[p])
                if dist < best:
                    best = dist
                    d = const[p]
        e = d - acc
        err[k] = e.real * e.real + e.imag * e.imag
        if k < n_train or adapt_dd:
            for i in range(n_taps):
                taps[i] += mu * e * np.conj(buf[i])
    return y, err


def lms_equalize(
    waveform: ComplexWaveform,
    tap_count: int = 25,
    step_size: float = 1e-3,
    training_symbols=None,
    modulation="QAM16",
    symbol_rate: float | None = None,
    decision_directed: bool = True,
    n_symbols: int | None = None,
) -> tuple[np.ndarray, EqualizerState]:
    """Fractionally spaced LMS equalizer.

    Runs data-aided over ``training_symbols`` and decision-directed
    afterwards. The input is scaled to unit mean power first; taps start as a
    unit center spike. With no training symbols and
    ``decision_directed=False`` the taps are never updated.
    """
    if tap_count % 2 == 0:
        raise ValueError("tap_count must be odd")
    if not step_size > 0:
        raise ValueError("step_size must be positive")
    sps = 2 if symbol_rate is None else int(round(waveform.sample_rate / symbol_rate))
    x = waveform.samples
    scale = 1.0 / np.sqrt(np.mean(np.abs(x) ** 2))
    x = x * scale
    n_out = n_symbols if n_symbols is not None else x.size // sps
    train = np.asarray(training_symbols if training_symbols is not None else [], dtype=np.complex128)
    n_train = min(train.size, n_out)
    taps = np.zeros(tap_count, dtype=np.complex128)
    taps[tap_count // 2] = 1.0
    const = constellation(modulation).astype(np.complex128)
    y, err = _lms_loop(
        x, taps, float(step_size), sps, train, n_train, const, n_out, decision_directed
    )
    converged = _check_convergence(err)
    if not converged:
        logger.warning("LMS equalizer diverged (step_size=%g)", step_size)
    state = EqualizerState(taps, float(step_size), err, converged, float(scale))
    return y, state


def _check_convergence(err: np.ndarray, window: int = 500) -> bool:
    if err.size < 2 * window:
        return bool(np.all(np.isfinite(err)))
    if not np.all(np.isfinite(err)):
        return False
    ma = np.convolve(err, np.ones(window) / window, mode="valid")
    return bool(ma.max() <= 10 * max(ma[0], 1e-12) or ma[-1] <= ma[0])
