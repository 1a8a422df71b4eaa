from __future__ import annotations

import math

import numpy as np

SNR_CAP_DB = 60.0


def measure_snr(equalized, reference) -> float:
    """SNR in dB; ``math.inf`` when the error energy is exactly zero."""
    eq = np.asarray(equalized)
    ref = np.asarray(reference)
    if eq.shape != ref.shape:
        raise ValueError("sequences must be aligned and of equal length")
    noise = np.mean(np.abs(eq - ref) ** 2)
    if noise == 0:
        return math.inf
    return float(10 * np.log10(np.mean(np.abs(ref) ** 2) / noise))


def cap_snr(snr_db: float) -> float:
    """Value used in serialized output for the infinite-SNR sentinel."""
    return min(snr_db, SNR_CAP_DB)


def derotate(symbols, reference):
    """Remove the least-squares complex gain (mean phase and scale)."""
    s = np.asarray(symbols)
    r = np.asarray(reference)
    g = np.vdot(s, r) / np.vdot(s, s)
    return s * g
