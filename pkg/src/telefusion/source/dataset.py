"""Soft-failure sweep datasets for the two-stage localizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dsp.features import DspFeatures
from ..dsp.receiver import RxConfig, receive
from ..seeding import STREAM_SOURCE, derive_seed
from ..sim.link import SimConfig, Spectrum, simulate_link
from ..sim.specs import (
    FailureCause,
    FailureSpec,
    LinkSpec,
    Modulation,
    NO_FAILURE,
    WssSpec,
    build_link,
)

CAUSES = (FailureCause.FILTER_SHIFT, FailureCause.FILTER_TIGHTENING)


@dataclass(frozen=True)
class SourceSetup:
    """Link, sweep and receiver settings for one failure dataset."""

    n_spans: int = 15
    wss_every: int = 2
    launch_power: float = -6.0
    nominal_B: float = 50.0
    nominal_otf: float = 8.0
    fs_range: tuple[float, float] = (15.0, 20.0)
    ft_range: tuple[float, float] = (20.0, 25.0)
    sweep_step: float = 0.05
    healthy_count: int = 0
    n_symbols: int = 2**15

    def link(self) -> LinkSpec:
        return build_link(
            self.n_spans,
            wss_every=self.wss_every,
            wss=WssSpec(0, 0.0, self.nominal_B, self.nominal_otf),
            channel_count=1,
            launch_power=self.launch_power,
            modulation=Modulation.QAM16,
            symbol_rate=35.0,
        )

    def sim_config(self) -> SimConfig:
        return SimConfig(n_symbols=self.n_symbols, rolloff=0.02, rx_sps=2)

    def sweep(self, lo_hi: tuple[float, float]) -> np.ndarray:
        lo, hi = lo_hi
        n = int(round((hi - lo) / self.sweep_step)) + 1
        return np.round(lo + self.sweep_step * np.arange(n), 9)

    def failures(self) -> list[FailureSpec]:
        out = []
        n_wss = len(self.link().wss_list)
        for w in range(n_wss):
            for cause, rng_ in ((CAUSES[0], self.fs_range), (CAUSES[1], self.ft_range)):
                out += [FailureSpec(w, cause, float(m)) for m in self.sweep(rng_)]
        out += [NO_FAILURE] * self.healthy_count
        return out


@dataclass
class SourceExample:
    index: int
    seed: int
    failure: FailureSpec
    features: DspFeatures
    spectra: list[Spectrum]
    snr_db: float
    stage_snr_db: list[float] = field(default_factory=list)

    @property
    def location_label(self) -> int:
        """WSS index, or the WSS count for a healthy link."""
        return self.failure.wss_index if self.failure.active else len(self.spectra)

    @property
    def cause_label(self) -> int:
        return CAUSES.index(self.failure.cause) if self.failure.active else -1


def simulate_example(setup: SourceSetup, failure: FailureSpec, seed: int, index: int = 0) -> SourceExample:
    link = setup.link()
    result = simulate_link(link, failure, nonlinear=False, seed=seed, config=setup.sim_config())
    rx = receive(link, result, RxConfig())
    return SourceExample(
        index, seed, failure, rx.features, result.spectra, rx.snr_db, result.truth["stage_snr_db"]
    )


def generate_dataset(setup: SourceSetup, master_seed: int) -> list[SourceExample]:
    """One example per sweep point (and healthy control), each with its own seed."""
    return [
        simulate_example(setup, f, derive_seed(master_seed, STREAM_SOURCE, i), i)
        for i, f in enumerate(setup.failures())
    ]
