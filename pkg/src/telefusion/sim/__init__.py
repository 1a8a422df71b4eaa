"""Coherent WDM link simulator."""

from .amplifier import ase_power_mw, edfa_amplify
from .fiber import propagate_span_linear, propagate_span_ssfm
from .link import LinkResult, SimConfig, Spectrum, capture_spectrum, simulate_link
from .specs import (
    EdfaSpec,
    FailureCause,
    FailureSpec,
    FiberSpan,
    LinkSpec,
    Modulation,
    NO_FAILURE,
    WssSpec,
    build_link,
    fiber,
    paper_failure_link,
)
from .transmitter import generate_symbols, matched_filter, pulse_shape, rrc_taps
from .waveform import ComplexWaveform, PropagationError
from .wss import passband_profile, power_transfer, wss_filter

__all__ = [
    "ComplexWaveform",
    "EdfaSpec",
    "FailureCause",
    "FailureSpec",
    "FiberSpan",
    "LinkResult",
    "LinkSpec",
    "Modulation",
    "NO_FAILURE",
    "PropagationError",
    "SimConfig",
    "Spectrum",
    "WssSpec",
    "ase_power_mw",
    "build_link",
    "capture_spectrum",
    "edfa_amplify",
    "fiber",
    "generate_symbols",
    "matched_filter",
    "paper_failure_link",
    "passband_profile",
    "power_transfer",
    "propagate_span_linear",
    "propagate_span_ssfm",
    "pulse_shape",
    "rrc_taps",
    "simulate_link",
    "wss_filter",
]
