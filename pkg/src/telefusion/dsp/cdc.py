from __future__ import annotations

import numpy as np

from ..sim.fiber import dispersion_operator
from ..sim.waveform import ComplexWaveform


def cdc(waveform: ComplexWaveform, total_dispersion: float) -> ComplexWaveform:
    """Frequency-domain chromatic dispersion compensation.

    ``total_dispersion`` is the accumulated D*L of the link in ps/nm; the
    exact inverse of the fiber's all-pass dispersion transfer is applied.
    """
    if total_dispersion == 0:
        return waveform.replace(waveform.samples.copy())
    h = np.conj(dispersion_operator(waveform, total_dispersion, 1.0))
    return waveform.replace(np.fft.ifft(np.fft.fft(waveform.samples) * h))
