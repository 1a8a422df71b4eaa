"""End-to-end WDM link simulation with optional soft-failure injection."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import welch

from ..seeding import derive_seed
from .amplifier import ase_power_mw, edfa_amplify
from .constants import dbm_to_mw
from .fiber import propagate_span_linear, propagate_span_ssfm
from .specs import FailureSpec, LinkSpec, NO_FAILURE
from .transmitter import generate_symbols, pulse_shape
from .waveform import ComplexWaveform
from .wss import wss_filter


@dataclass(frozen=True)
class SimConfig:
    n_symbols: int = 2**14
    rolloff: float = 0.02
    rx_sps: int = 2
    guard: float = 1.2  # WDM sample-rate margin over channel_count * spacing
    ssfm_step_km: float = 1.0
    ssfm_steps: int | None = None  # equal-nonlinear-phase steps per span
    noise: bool = True
    osa_segment: int = 512


@dataclass
class Spectrum:
    """Power spectrum capture (OSA proxy)."""

    freq_ghz: np.ndarray
    power_mw: np.ndarray

    @property
    def power_dbm(self) -> np.ndarray:
        return 10 * np.log10(np.maximum(self.power_mw, 1e-30))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["freq_ghz", "power_dbm"])
        for f, p in zip(self.freq_ghz, self.power_dbm):
            w.writerow([f"{f:.6f}", f"{p:.6f}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["freq_ghz", "power_dbm"]:
            raise ValueError("unexpected spectrum CSV header")
        data = np.array(rows[1:], dtype=float)
        return cls(data[:, 0], 10 ** (data[:, 1] / 10))


@dataclass
class LinkResult:
    rx: ComplexWaveform
    spectra: list[Spectrum]
    truth: dict = field(default_factory=dict)


def capture_spectrum(waveform: ComplexWaveform, segment: int = 512) -> Spectrum:
    """Welch-averaged power per frequency bin, centered and in GHz."""
    nper = min(segment, len(waveform))
    f, pxx = welch(
        waveform.samples,
        fs=waveform.sample_rate,
        window="hann",
        nperseg=nper,
        noverlap=nper // 2,
        return_onesided=False,
        scaling="density",
        detrend=False,
    )
    order = np.argsort(f)
    df = waveform.sample_rate / nper
    return Spectrum((f[order] + waveform.center_offset) / 1e9, pxx[order] * df)


def wdm_samples_per_symbol(link: LinkSpec, cfg: SimConfig) -> int:
    if link.channel_count == 1:
        return cfg.rx_sps
    need = cfg.guard * link.channel_count * link.channel_spacing / link.symbol_rate
    return max(cfg.rx_sps, math.ceil(need))


def transmit(link: LinkSpec, cfg: SimConfig, seed: int) -> tuple[ComplexWaveform, np.ndarray]:
    """Launch the WDM comb; returns the field and the center-channel symbols."""
    sps = wdm_samples_per_symbol(link, cfg)
    rs = link.symbol_rate * 1e9
    p_ch = float(dbm_to_mw(link.launch_power))
    n = cfg.n_symbols * sps
    t = np.arange(n) / (sps * rs)
    df = sps * rs / n
    total = np.zeros(n, dtype=np.complex128)
    center_symbols = None
    for slot in range(link.channel_count):
        if slot in link.idle_slots:
            continue
        sym = generate_symbols(link.modulation, cfg.n_symbols, derive_seed(seed, 0, slot))
        x = pulse_shape(sym, cfg.rolloff, sps, rs).samples
        x = x * np.sqrt(p_ch / np.mean(np.abs(x) ** 2))
        # snap to an FFT bin so the periodic block has no phase jump at the wrap
        offset = (slot - link.center_slot) * link.channel_spacing * 1e9
        offset = round(offset / df) * df
        if offset:
            x = x * np.exp(2j * np.pi * offset * t)
        total += x
        if slot == link.center_slot:
            center_symbols = sym
    return ComplexWaveform(total, sps * rs), center_symbols


def select_center_channel(waveform: ComplexWaveform, symbol_rate: float, sps: int) -> ComplexWaveform:
    """Resample to ``sps`` samples/symbol by keeping the central FFT bins."""
    n_in = len(waveform)
    n_out = int(round(n_in * sps * symbol_rate / waveform.sample_rate))
    if n_out == n_in:
        return waveform
    spec = np.fft.fft(waveform.samples)
    keep = np.zeros(n_out, dtype=np.complex128)
    half = n_out // 2
    keep[:half] = spec[:half]
    keep[-half:] = spec[-half:]
    return ComplexWaveform(
        np.fft.ifft(keep) * (n_out / n_in), sps * symbol_rate, waveform.center_offset
    )


def simulate_link(
    link: LinkSpec,
    failure: FailureSpec = NO_FAILURE,
    nonlinear: bool = False,
    seed: int = 0,
    config: SimConfig | None = None,
) -> LinkResult:
    """Propagate the comb through spans, EDFAs and WSSs.

    Returns the center channel at the receiver (``config.rx_sps`` samples per
    symbol, before any DSP), the spectrum captured after every WSS, and a
    ground-truth record with the transmitted center symbols.
    """
    cfg = config or SimConfig()
    if failure.active and not 0 <= failure.wss_index < len(link.wss_list):
        raise ValueError(
            f"failure wss_index {failure.wss_index} outside 0..{len(link.wss_list) - 1}"
        )
    x, symbols = transmit(link, cfg, seed)
    wss_after = {w.position_index: (i, w) for i, w in enumerate(link.wss_list)}
    p_sig = float(dbm_to_mw(link.launch_power))
    p_ase = 0.0
    rs = link.symbol_rate * 1e9
    spectra: list[Spectrum] = []
    stage_snr = []
    for k, (span, edfa) in enumerate(zip(link.spans, link.edfas)):
        if nonlinear:
            x = propagate_span_ssfm(
                x, span, min(cfg.ssfm_step_km, span.length), steps=cfg.ssfm_steps
            )
        else:
            x = propagate_span_linear(x, span)
        x = edfa_amplify(x, edfa, seed=derive_seed(seed, 1, k), noise=cfg.noise)
        p_sig *= 10 ** ((edfa.gain - span.loss_db) / 10)
        if cfg.noise:
            p_ase = p_ase * 10 ** ((edfa.gain - span.loss_db) / 10) + ase_power_mw(edfa, rs)
        stage_snr.append(10 * np.log10(p_sig / p_ase) if p_ase > 0 else math.inf)
        if k in wss_after:
            i, w = wss_after[k]
            if failure.active and i == failure.wss_index:
                w = failure.apply(w)
            x = wss_filter(x, w)
            spectra.append(capture_spectrum(x, cfg.osa_segment))
    rx = select_center_channel(x, rs, cfg.rx_sps)
    truth = {
        "failure": failure,
        "symbols": symbols,
        "stage_snr_db": stage_snr,
        "accumulated_dispersion": link.accumulated_dispersion,
        "sps_sim": wdm_samples_per_symbol(link, cfg),
    }
    return LinkResult(rx, spectra, truth)
