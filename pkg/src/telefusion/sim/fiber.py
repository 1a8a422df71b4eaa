"""Fiber span propagation: linear (loss + chromatic dispersion) and SSFM."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from numba import njit

from .constants import beta2_from_d
from .specs import FiberSpan
from .waveform import ComplexWaveform, PropagationError


def _omega(waveform: ComplexWaveform) -> np.ndarray:
    return 2 * np.pi * (waveform.freqs() + waveform.center_offset)


def dispersion_operator(waveform: ComplexWaveform, d_ps_nm_km: float, length_km: float):
    """All-pass CD transfer exp(+j beta2/2 w^2 L) on the waveform's FFT grid."""
    beta2 = beta2_from_d(d_ps_nm_km) * 1e-24  # s^2/km
    w = _omega(waveform)
    return np.exp(1j * (beta2 / 2) * w**2 * length_km)


def propagate_span_linear(waveform: ComplexWaveform, span: FiberSpan) -> ComplexWaveform:
    a = 10 ** (-span.alpha * span.length / 20)
    h = dispersion_operator(waveform, span.dispersion_D, span.length)
    return waveform.replace(np.fft.ifft(np.fft.fft(waveform.samples) * (a * h)))


def effective_length(alpha_db_km: float, length_km: float) -> float:
    """Nonlinear effective length in km; equals ``length_km`` for a lossless fiber."""
    a = alpha_db_km / (10 * np.log10(np.e))  # power attenuation, 1/km
    if a == 0:
        return length_km
    return -np.expm1(-a * length_km) / a


def _alpha_np(alpha_db_km: float) -> float:
    return alpha_db_km / (10 * np.log10(np.e))


def midpoint_length(alpha_db_km: float, h_km: float) -> float:
    """Kerr length of a step referenced to the power at its midpoint.

    ``2 sinh(a h / 2) / a``; it equals ``effective_length(h) * exp(a h / 2)``
    and makes the symmetric step exact for SPM without dispersion.
    """
    a = _alpha_np(alpha_db_km)
    if a == 0:
        return h_km
    return 2 * np.sinh(a * h_km / 2) / a


def step_boundaries(span: FiberSpan, steps: int) -> np.ndarray:
    """Step edges (km) that split the span into equal effective-length shares."""
    a = _alpha_np(span.alpha)
    u = np.arange(steps + 1) / steps
    if a == 0:
        return u * span.length
    z = -np.log1p(-u * -np.expm1(-a * span.length)) / a
    z[-1] = span.length
    return z


@lru_cache(maxsize=4)
def _half_operators(n, sample_rate, center_offset, alpha, d, steps):
    """Half-step linear operators per step; shared by identical spans."""
    w = 2 * np.pi * (np.fft.fftfreq(n, 1 / sample_rate) + center_offset)
    beta2 = beta2_from_d(d) * 1e-24
    ops: dict[float, np.ndarray] = {}
    for h in steps:
        if h not in ops:
            ops[h] = 10 ** (-alpha * h / 40) * np.exp(1j * (beta2 / 2) * w**2 * (h / 2))
            ops[h].flags.writeable = False
    return tuple((h, ops[h]) for h in steps)


@njit(cache=True)
def _kerr_rotate(x, gl):
    """In-place ``x *= exp(j gl |x|^2)``; returns False on non-finite power."""
    ok = True
    for i in range(x.size):
        p = x[i].real * x[i].real + x[i].imag * x[i].imag
        if not math.isfinite(p):
            ok = False
        ph = gl * p
        x[i] = x[i] * complex(math.cos(ph), math.sin(ph))
    return ok


def propagate_span_ssfm(
    waveform: ComplexWaveform,
    span: FiberSpan,
    step_km: float = 1.0,
    steps: int | None = None,
) -> ComplexWaveform:
    """Symmetric split-step Fourier propagation over one span.

    Each step applies half of the linear operator, the Kerr phase rotation
    ``exp(j gamma |A|^2 L)`` on the midpoint field, then the other half.

    Parameters
    ----------
    step_km : float
        Uniform step; the span is divided into ``ceil(length / step_km)``
        equal steps.
    steps : int, optional
        If given, overrides ``step_km`` with this many non-uniform steps of
        equal nonlinear phase (short near the span input, long at the end).
    """
    if steps is not None:
        if steps < 1:
            raise ValueError("steps must be >= 1")
        edges = step_boundaries(span, steps)
    else:
        if not 0 < step_km <= span.length:
            raise ValueError("step_km must satisfy 0 < step_km <= span length")
        n_steps = int(np.ceil(span.length / step_km - 1e-12))
        edges = np.linspace(0.0, span.length, n_steps + 1)
    ops = _half_operators(
        len(waveform), waveform.sample_rate, waveform.center_offset,
        span.alpha, span.dispersion_D, tuple(np.diff(edges)),
    )
    field = sfft.fft(waveform.samples)
    for h, half in ops:
        gl = span.gamma * midpoint_length(span.alpha, h) * 1e-3  # per mW
        x = sfft.ifft(field * half)
        if not _kerr_rotate(x, gl):
            raise PropagationError("non-finite field during SSFM propagation")
        field = sfft.fft(x) * half
    return waveform.replace(sfft.ifft(field))
