"""Symbol mapping and root-raised-cosine pulse shaping."""

from __future__ import annotations

import numpy as np

from .specs import Modulation
from .waveform import ComplexWaveform


def constellation(modulation) -> np.ndarray:
    """Unit average-energy constellation points."""
    modulation = Modulation(modulation)
    if modulation is Modulation.QPSK:
        pts = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2)
    else:
        levels = np.array([-3, -1, 1, 3])
        pts = (levels[:, None] + 1j * levels[None, :]).ravel() / np.sqrt(10)
    return pts


def generate_symbols(modulation, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` symbols uniformly from the unit-energy constellation."""
    try:
        pts = constellation(modulation)
    except ValueError:
        raise ValueError(f"unknown modulation {modulation!r}") from None
    if count <= 0:
        raise ValueError("count must be positive")
    rng = np.random.default_rng(seed)
    return pts[rng.integers(0, pts.size, count)]


def raised_cosine_spectrum(f, symbol_rate: float, rolloff: float) -> np.ndarray:
    """Raised-cosine power profile (peak 1) at frequencies ``f`` (Hz)."""
    af = np.abs(np.asarray(f, dtype=float))
    f1 = (1 - rolloff) * symbol_rate / 2
    f2 = (1 + rolloff) * symbol_rate / 2
    out = np.zeros_like(af)
    out[af < f1] = 1.0
    if rolloff > 0:
        band = (af >= f1) & (af <= f2)
        out[band] = 0.5 * (1 + np.cos(np.pi / (rolloff * symbol_rate) * (af[band] - f1)))
    else:
        out[af == f1] = 0.5
    return out


def rrc_response(n: int, sps: int, rolloff: float) -> np.ndarray:
    """FFT-ordered RRC frequency response for an ``n``-sample grid.

    Scaled so the Tx/Rx cascade has unit gain at the symbol instants and the
    underlying impulse response has unit energy.
    """
    f = np.fft.fftfreq(n, d=1.0 / sps)  # in units of the symbol rate
    return np.sqrt(sps * raised_cosine_spectrum(f, 1.0, rolloff))


def rrc_taps(span: int, sps: int, rolloff: float) -> np.ndarray:
    """Closed-form RRC impulse response over ``±span`` symbols, unit energy."""
    t = np.arange(-span * sps, span * sps + 1) / sps
    b = rolloff
    h = np.empty_like(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.sin(np.pi * t * (1 - b)) + 4 * b * t * np.cos(np.pi * t * (1 + b))
        den = np.pi * t * (1 - (4 * b * t) ** 2)
        h[:] = num / den
    h[t == 0] = 1 - b + 4 * b / np.pi
    if b > 0:
        sing = np.isclose(np.abs(t), 1 / (4 * b))
        h[sing] = (b / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
        )
    return h / np.sqrt(np.sum(h**2))


def pulse_shape(
    symbols, rolloff: float, samples_per_symbol: int, symbol_rate: float = 35e9
) -> ComplexWaveform:
    """Up-sample and RRC-filter a symbol block.

    The filter is applied as a circular convolution in the frequency domain,
    so the block is treated as one period of a periodic signal and no edge
    transient is produced.
    """
    if not 0 <= rolloff <= 1:
        raise ValueError("rolloff must lie in [0, 1]")
    if samples_per_symbol < 2:
        raise ValueError("samples_per_symbol must be >= 2 to avoid spectral aliasing")
    symbols = np.asarray(symbols, dtype=np.complex128)
    sps = int(samples_per_symbol)
    up = np.zeros(symbols.size * sps, dtype=np.complex128)
    up[::sps] = symbols
    x = np.fft.ifft(np.fft.fft(up) * rrc_response(up.size, sps, rolloff))
    return ComplexWaveform(x, sps * symbol_rate)


def matched_filter(
    waveform: ComplexWaveform, rolloff: float, symbol_rate: float
) -> ComplexWaveform:
    """Receiver RRC filter centered at the waveform's frequency origin."""
    sps = waveform.sample_rate / symbol_rate
    n = len(waveform)
    f = np.fft.fftfreq(n, d=1.0 / sps)
    h = np.sqrt(sps * raised_cosine_spectrum(f, 1.0, rolloff))
    return waveform.replace(np.fft.ifft(np.fft.fft(waveform.samples) * h))


def decimate(waveform: ComplexWaveform, symbol_rate: float, out_sps: int = 1) -> ComplexWaveform:
    """Keep ``out_sps`` samples per symbol, symbol 0 on sample 0."""
    sps = waveform.sample_rate / symbol_rate
    step = sps / out_sps
    if abs(step - round(step)) > 1e-9 or round(step) < 1:
        raise ValueError("sample rate must be an integer multiple of the output rate")
    step = int(round(step))
    return ComplexWaveform(waveform.samples[::step], out_sps * symbol_rate, waveform.center_offset)
