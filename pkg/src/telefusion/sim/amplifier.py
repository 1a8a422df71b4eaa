from __future__ import annotations

import numpy as np

from .constants import FREQUENCY, H
from .specs import EdfaSpec
from .waveform import ComplexWaveform


def ase_power_mw(edfa: EdfaSpec, bandwidth_hz: float) -> float:
    """Single-polarization ASE power (G-1) F h nu B in mW."""
    g = 10 ** (edfa.gain / 10)
    f = 10 ** (edfa.noise_figure / 10)
    return (g - 1) * f * H * FREQUENCY * bandwidth_hz * 1e3


def edfa_amplify(
    waveform: ComplexWaveform,
    edfa: EdfaSpec,
    noise_bandwidth: float | None = None,
    seed: int | None = 0,
    noise: bool = True,
) -> ComplexWaveform:
    """Amplify by the EDFA gain and add circular Gaussian ASE.

    ``noise_bandwidth`` is the reference bandwidth the ASE power is quoted
    in; the noise itself is white over the whole simulation bandwidth, so
    its variance is ``P_ASE(B_ref) * sample_rate / B_ref``. ``noise=False``
    is the noiseless (NF -> -inf) limit.
    """
    if edfa.gain < 0:
        raise ValueError("gain must be >= 0 dB")
    out = waveform.samples * 10 ** (edfa.gain / 20)
    if noise:
        b_ref = noise_bandwidth or waveform.sample_rate
        var = ase_power_mw(edfa, b_ref) * waveform.sample_rate / b_ref
        rng = np.random.default_rng(seed)
        n = rng.standard_normal((2, out.size))
        out = out + np.sqrt(var / 2) * (n[0] + 1j * n[1])
    return waveform.replace(out)
