"""Wavelength selective switch passband model."""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

from .specs import WssSpec
from .waveform import ComplexWaveform

SIGMA_TO_FWHM = 2.0 * np.sqrt(2.0 * np.log(2.0))


def otf_sigma(otf_bandwidth):
    """Gaussian edge standard deviation from the OTF (FWHM) bandwidth."""
    return np.asarray(otf_bandwidth, dtype=float) / SIGMA_TO_FWHM


def passband_profile(f, bandwidth, sigma) -> np.ndarray:
    """Rectangle of width ``bandwidth`` convolved with exp(-f^2 / 2 sigma^2).

    Evaluated as a difference of complementary error functions chosen per
    point so that the far tails keep full relative precision.
    """
    f = np.asarray(f, dtype=float)
    r2s = np.sqrt(2.0) * sigma
    a = (bandwidth / 2 - f) / r2s
    b = (-bandwidth / 2 - f) / r2s
    # erf(a) - erf(b) with a > b
    diff = np.where(
        b >= 0,
        erfc(b) - erfc(a),
        np.where(a <= 0, erfc(-a) - erfc(-b), 2.0 - erfc(a) - erfc(-b)),
    )
    return 0.5 * sigma * np.sqrt(2 * np.pi) * diff


def power_transfer(f_ghz, wss: WssSpec) -> np.ndarray:
    """Power transmission |H|^2, peak-normalized, at frequencies in GHz."""
    sigma = otf_sigma(wss.otf_bandwidth)
    s = passband_profile(np.asarray(f_ghz) - wss.center_offset, wss.bandwidth_B, sigma)
    return s / passband_profile(0.0, wss.bandwidth_B, sigma)


def wss_filter(waveform: ComplexWaveform, wss: WssSpec) -> ComplexWaveform:
    f_ghz = (waveform.freqs() + waveform.center_offset) / 1e9
    h = np.sqrt(power_transfer(f_ghz, wss))
    return waveform.replace(np.fft.ifft(np.fft.fft(waveform.samples) * h))
