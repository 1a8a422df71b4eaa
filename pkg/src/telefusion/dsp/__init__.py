"""Coherent receiver DSP and digital-domain telemetry features."""

from .cdc import cdc
from .cpr import carrier_phase_recover
from .equalizer import EqualizerState, lms_equalize
from .features import (
    DspFeatures,
    NlFeatures,
    compute_anc_pnc,
    digital_spectrum,
    extract_dsp_features,
)
from .metrics import SNR_CAP_DB, cap_snr, derotate, measure_snr
from .receiver import RxConfig, RxOutput, receive

__all__ = [
    "DspFeatures",
    "EqualizerState",
    "NlFeatures",
    "RxConfig",
    "RxOutput",
    "SNR_CAP_DB",
    "cap_snr",
    "carrier_phase_recover",
    "cdc",
    "compute_anc_pnc",
    "derotate",
    "digital_spectrum",
    "extract_dsp_features",
    "lms_equalize",
    "measure_snr",
    "receive",
]
