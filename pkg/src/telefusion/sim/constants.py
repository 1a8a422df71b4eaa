"""Physical constants and unit conversions shared by the simulator."""

import numpy as np
from scipy import constants as const

C = const.c  # m/s
H = const.h  # J s
WAVELENGTH = 1550e-9  # m
FREQUENCY = C / WAVELENGTH  # Hz


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def mw_to_dbm(p_mw):
    return 10.0 * np.log10(p_mw)


def beta2_from_d(d_ps_nm_km: float, wavelength: float = WAVELENGTH) -> float:
    """Group-velocity dispersion in ps^2/km from D in ps/(nm km)."""
    # D [s/m^2] * lambda^2 / (2 pi c) -> s^2/m ; rescale to ps^2/km
    d_si = d_ps_nm_km * 1e-12 / (1e-9 * 1e3)
    beta2_si = -d_si * wavelength**2 / (2 * np.pi * C)
    return beta2_si * 1e24 * 1e3
