from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sim.wss import otf_sigma, passband_profile


@dataclass(frozen=True)
class TheoreticalSpectrum:
    freq_grid: np.ndarray  # GHz
    values: np.ndarray
    B: float
    otf_bandwidth: float
    sigma: float

    def normalized(self) -> np.ndarray:
        """Values divided by the profile peak s(0)."""
        return self.values / passband_profile(0.0, self.B, self.sigma)


def theoretical_spectrum(B: float, otf_bandwidth: float, freq_grid) -> TheoreticalSpectrum:
    """Expected WSS passband: a width-B rectangle with Gaussian edges.

    ``sigma`` is the edge standard deviation implied by treating
    ``otf_bandwidth`` as the Gaussian FWHM.
    """
    if not B > 0 or not otf_bandwidth > 0:
        raise ValueError("B and otf_bandwidth must be positive")
    f = np.asarray(freq_grid, dtype=float)
    sigma = float(otf_sigma(otf_bandwidth))
    return TheoreticalSpectrum(f, passband_profile(f, B, sigma), float(B), float(otf_bandwidth), sigma)
