"""Declarative link and failure descriptions with a versioned JSON form."""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import asdict, dataclass, field, replace

SCHEMA_VERSION = 1


class Modulation(str, enum.Enum):
    QPSK = "QPSK"
    QAM16 = "QAM16"


class FailureCause(str, enum.Enum):
    NONE = "None"
    FILTER_SHIFT = "FilterShift"
    FILTER_TIGHTENING = "FilterTightening"


@dataclass(frozen=True)
class FiberSpan:
    length: float  # km
    alpha: float  # dB/km
    dispersion_D: float  # ps/(nm km)
    gamma: float  # 1/(W km)
    type_tag: str = "SSMF"

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("span length must be positive")
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("alpha and gamma must be non-negative")
        if self.type_tag not in FIBER_TYPES:
            raise ValueError(f"unknown fiber type {self.type_tag!r}")

    @property
    def loss_db(self) -> float:
        return self.alpha * self.length


# (alpha dB/km, D ps/nm/km, gamma 1/W/km)
FIBER_TYPES = {
    "SSMF": (0.2, 16.7, 1.3),
    "ELEAF": (0.22, 4.0, 1.6),
    "PSCF": (0.17, 20.7, 0.8),
}


def fiber(type_tag: str = "SSMF", length: float = 80.0) -> FiberSpan:
    alpha, d, gamma = FIBER_TYPES[type_tag]
    return FiberSpan(length, alpha, d, gamma, type_tag)


@dataclass(frozen=True)
class EdfaSpec:
    gain: float  # dB
    noise_figure: float = 5.0  # dB
    center_wavelength: float = 1550.0  # nm

    def __post_init__(self):
        if self.gain < 0:
            raise ValueError("EDFA gain must be >= 0 dB")
        if self.noise_figure < 3.0:
            warnings.warn(
                f"noise figure {self.noise_figure} dB is below the 3 dB quantum limit",
                stacklevel=3,
            )


@dataclass(frozen=True)
class WssSpec:
    position_index: int  # span index (0-based) after which the WSS sits
    center_offset: float = 0.0  # GHz
    bandwidth_B: float = 50.0  # GHz
    otf_bandwidth: float = 8.0  # GHz

    def __post_init__(self):
        if not self.bandwidth_B > 0 or not self.otf_bandwidth > 0:
            raise ValueError("WSS bandwidth and OTF bandwidth must be positive")


@dataclass(frozen=True)
class FailureSpec:
    wss_index: int = -1
    cause: FailureCause = FailureCause.NONE
    magnitude: float = 0.0  # GHz; shift for FS, new bandwidth for FT

    def __post_init__(self):
        object.__setattr__(self, "cause", FailureCause(self.cause))

    @property
    def active(self) -> bool:
        return self.cause is not FailureCause.NONE

    def apply(self, wss: WssSpec) -> WssSpec:
        if self.cause is FailureCause.FILTER_SHIFT:
            return replace(wss, center_offset=wss.center_offset + self.magnitude)
        if self.cause is FailureCause.FILTER_TIGHTENING:
            return replace(wss, bandwidth_B=self.magnitude)
        return wss


NO_FAILURE = FailureSpec()


@dataclass(frozen=True)
class LinkSpec:
    spans: tuple[FiberSpan, ...]
    edfas: tuple[EdfaSpec, ...]
    wss_list: tuple[WssSpec, ...] = ()
    channel_count: int = 1
    channel_spacing: float = 50.0  # GHz
    launch_power: float = 0.0  # dBm per channel
    modulation: Modulation = Modulation.QAM16
    symbol_rate: float = 35.0  # GBaud
    idle_slots: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "edfas", tuple(self.edfas))
        object.__setattr__(self, "wss_list", tuple(self.wss_list))
        object.__setattr__(self, "idle_slots", tuple(sorted(self.idle_slots)))
        object.__setattr__(self, "modulation", Modulation(self.modulation))
        if len(self.spans) != len(self.edfas):
            raise ValueError("spans and edfas must have the same length")
        if self.channel_count < 1 or self.channel_count % 2 == 0:
            raise ValueError("channel_count must be odd so a center channel exists")
        if not self.symbol_rate > 0:
            raise ValueError("symbol_rate must be positive")
        if self.center_slot in self.idle_slots:
            raise ValueError("the center channel cannot be idle")
        if any(not 0 <= s < self.channel_count for s in self.idle_slots):
            raise ValueError("idle slot out of range")
        for w in self.wss_list:
            if not 0 <= w.position_index < len(self.spans):
                raise ValueError("WSS position outside the span list")

    @property
    def center_slot(self) -> int:
        return self.channel_count // 2

    @property
    def active_channels(self) -> int:
        return self.channel_count - len(self.idle_slots)

    @property
    def length(self) -> float:
        return sum(s.length for s in self.spans)

    @property
    def accumulated_dispersion(self) -> float:
        """Net chromatic dispersion in ps/nm."""
        return sum(s.dispersion_D * s.length for s in self.spans)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modulation"] = self.modulation.value
        d["idle_slots"] = list(self.idle_slots)
        d["schema_version"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LinkSpec":
        _check_version(d)
        return cls(
            spans=tuple(FiberSpan(**s) for s in d["spans"]),
            edfas=tuple(EdfaSpec(**e) for e in d["edfas"]),
            wss_list=tuple(WssSpec(**w) for w in d["wss_list"]),
            channel_count=d["channel_count"],
            channel_spacing=d["channel_spacing"],
            launch_power=d["launch_power"],
            modulation=d["modulation"],
            symbol_rate=d["symbol_rate"],
            idle_slots=tuple(d.get("idle_slots", ())),
        )


def failure_to_dict(f: FailureSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "wss_index": f.wss_index,
        "cause": f.cause.value,
        "magnitude": f.magnitude,
    }


def failure_from_dict(d: dict) -> FailureSpec:
    _check_version(d)
    return FailureSpec(d["wss_index"], FailureCause(d["cause"]), d["magnitude"])


def dumps(obj) -> str:
    """Canonical JSON for a LinkSpec or FailureSpec."""
    d = obj.to_dict() if isinstance(obj, LinkSpec) else failure_to_dict(obj)
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def _check_version(d: dict) -> None:
    v = d.get("schema_version")
    if v != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {v!r} (expected {SCHEMA_VERSION})")


def build_link(
    n_spans: int,
    *,
    fiber_type: str = "SSMF",
    span_length: float = 80.0,
    noise_figure: float = 5.0,
    wss_every: int | None = None,
    wss: WssSpec | None = None,
    **kwargs,
) -> LinkSpec:
    """Homogeneous link whose EDFAs exactly compensate each span loss.

    With ``wss_every=k`` a WSS is inserted after spans k, 2k, ... (1-based).
    """
    spans = tuple(fiber(fiber_type, span_length) for _ in range(n_spans))
    edfas = tuple(EdfaSpec(s.loss_db, noise_figure) for s in spans)
    wss_list = ()
    if wss_every:
        proto = wss or WssSpec(0)
        wss_list = tuple(
            replace(proto, position_index=i)
            for i in range(wss_every - 1, n_spans, wss_every)
        )
    return LinkSpec(spans, edfas, wss_list, **kwargs)


def paper_failure_link(**kwargs) -> LinkSpec:
    """1200 km of 80 km SSMF spans with a WSS after every second span."""
    kwargs.setdefault("modulation", Modulation.QAM16)
    kwargs.setdefault("symbol_rate", 35.0)
    return build_link(15, wss_every=2, **kwargs)
