"""Nonlinear link corpus shared by the space- and model-level use cases.

Each example is a homogeneous link drawn from a configuration grid, run
through the SSFM simulator with ASE disabled. The label is the nonlinear SNR
of the center channel after CDC, matched filtering, decimation and a
least-squares phase derotation. Receiver noise-correlation features are
computed from the same field after adding the accumulated ASE referred to
the receiver.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dsp import NlFeatures, cdc, compute_anc_pnc, derotate, measure_snr
from .seeding import STREAM_CORPUS, derive_seed, rng
from .sim import LinkSpec, Modulation, SimConfig, build_link, simulate_link
from .sim.amplifier import ase_power_mw
from .sim.transmitter import decimate, matched_filter

TABLE_IV_FEATURES = (
    "span_number",
    "span_length",
    "launch_power",
    "link_length",
    "net_cd",
    "avg_gamma",
    "avg_alpha",
    "channel_count",
)


@dataclass(frozen=True)
class CorpusGrid:
    """Discrete link-configuration grid the corpus is sampled from."""

    fiber_types: tuple[str, ...] = ("SSMF", "ELEAF", "PSCF")
    span_length: float = 80.0
    span_numbers: tuple[int, ...] = tuple(range(3, 22))
    launch_powers: tuple[float, ...] = tuple(float(p) for p in range(-3, 4))
    modulations: tuple[str, ...] = ("QPSK", "QAM16")
    channel_numbers: tuple[int, ...] = tuple(range(3, 22))
    symbol_rate: float = 35.0
    channel_spacing: float = 50.0

    @classmethod
    def desk(cls) -> "CorpusGrid":
        """Reduced spans and channel counts that keep SSFM runs short."""
        return cls(span_numbers=tuple(range(3, 11)), channel_numbers=tuple(range(3, 6)))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusGrid":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True)
class CorpusConfig:
    grid: CorpusGrid = field(default_factory=CorpusGrid)
    n_symbols: int = 2**16
    ssfm_steps: int | None = 40  # per span, equal nonlinear phase
    ssfm_step_km: float = 1.0
    noise_figure: float = 5.0
    l_anc: int = 3
    l_pnc: int = 15

    @classmethod
    def desk(cls) -> "CorpusConfig":
        return cls(grid=CorpusGrid.desk(), n_symbols=2**12)

    def sim_config(self) -> SimConfig:
        return SimConfig(
            n_symbols=self.n_symbols,
            noise=False,
            ssfm_step_km=self.ssfm_step_km,
            ssfm_steps=self.ssfm_steps,
        )


@dataclass
class LinkExample:
    index: int
    seed: int
    link: LinkSpec
    snr_nl_db: float
    nl: NlFeatures
    snr_total_db: float

    @property
    def fiber_type(self) -> str:
        return self.link.spans[0].type_tag

    def table_iv(self) -> np.ndarray:
        """Table-IV style link features in :data:`TABLE_IV_FEATURES` order."""
        spans = self.link.spans
        return np.array(
            [
                len(spans),
                spans[0].length,
                self.link.launch_power,
                self.link.length,
                self.link.accumulated_dispersion,
                np.mean([s.gamma for s in spans]),
                np.mean([s.alpha for s in spans]),
                self.link.active_channels,
            ],
            dtype=float,
        )


def sample_link(grid: CorpusGrid, gen: np.random.Generator, noise_figure: float = 5.0) -> LinkSpec:
    """Draw one homogeneous link uniformly from the grid.

    An even channel count is placed on the next odd slot grid with one
    randomly chosen non-center slot left idle, so a center channel exists.
    """
    fiber_type = grid.fiber_types[gen.integers(len(grid.fiber_types))]
    n_spans = int(grid.span_numbers[gen.integers(len(grid.span_numbers))])
    power = float(grid.launch_powers[gen.integers(len(grid.launch_powers))])
    mod = grid.modulations[gen.integers(len(grid.modulations))]
    n_ch = int(grid.channel_numbers[gen.integers(len(grid.channel_numbers))])
    slots = n_ch if n_ch % 2 else n_ch + 1
    idle: tuple[int, ...] = ()
    if slots != n_ch:
        candidates = [s for s in range(slots) if s != slots // 2]
        idle = (int(candidates[gen.integers(len(candidates))]),)
    return build_link(
        n_spans,
        fiber_type=fiber_type,
        span_length=grid.span_length,
        noise_figure=noise_figure,
        channel_count=slots,
        channel_spacing=grid.channel_spacing,
        launch_power=power,
        modulation=Modulation(mod),
        symbol_rate=grid.symbol_rate,
        idle_slots=idle,
    )


def _receive_static(rx, link: LinkSpec, ref: np.ndarray) -> np.ndarray:
    rs = link.symbol_rate * 1e9
    x = cdc(rx, link.accumulated_dispersion)
    x = matched_filter(x, 0.02, rs)
    y = decimate(x, rs).samples[: ref.size]
    return derotate(y, ref)


def simulate_example(link: LinkSpec, seed: int, cfg: CorpusConfig, index: int = 0) -> LinkExample:
    """Simulate one corpus link and derive its label and receiver features."""
    res = simulate_link(link, nonlinear=True, seed=seed, config=cfg.sim_config())
    ref = res.truth["symbols"]
    y = _receive_static(res.rx, link, ref)
    snr_nl = measure_snr(y, ref)

    # accumulated ASE is white, so its in-band power scales with the Rx rate
    p_ase = sum(ase_power_mw(e, res.rx.sample_rate) for e in link.edfas)
    g = np.random.default_rng(derive_seed(seed, 2))
    n = g.standard_normal((2, len(res.rx)))
    noisy = res.rx.replace(res.rx.samples + np.sqrt(p_ase / 2) * (n[0] + 1j * n[1]))
    yn = _receive_static(noisy, link, ref)
    nl = compute_anc_pnc(
        yn,
        ref,
        l_anc=cfg.l_anc,
        l_pnc=cfg.l_pnc,
        cum_cd=link.accumulated_dispersion,
        channel_count=link.active_channels,
    )
    return LinkExample(index, seed, link, snr_nl, nl, measure_snr(yn, ref))


def example_seed(master_seed: int, index: int, pool: int = 0) -> int:
    return derive_seed(master_seed, STREAM_CORPUS, pool, index)


def generate_corpus(
    count: int, master_seed: int, cfg: CorpusConfig | None = None, pool: int = 0
) -> list[LinkExample]:
    """Draw and simulate ``count`` links; example ``i`` depends only on its seed."""
    cfg = cfg or CorpusConfig()
    out = []
    for i in range(count):
        seed = example_seed(master_seed, i, pool)
        link = sample_link(cfg.grid, rng(seed, 0), cfg.noise_figure)
        out.append(simulate_example(link, seed, cfg, i))
    return out


CSV_HEADER = (
    ("index", "seed", "fiber_type", "modulation")
    + TABLE_IV_FEATURES
    + ("idle_slots", "anc", "pnc", "cum_cd", "snr_total_db", "snr_nl_db")
)


def corpus_to_csv(examples: list[LinkExample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for ex in examples:
        w.writerow(
            [ex.index, ex.seed, ex.fiber_type, ex.link.modulation.value]
            + [repr(float(v)) for v in ex.table_iv()]
            + [
                " ".join(str(s) for s in ex.link.idle_slots),
                repr(ex.nl.anc),
                repr(ex.nl.pnc),
                repr(ex.nl.cum_cd),
                repr(ex.snr_total_db),
                repr(ex.snr_nl_db),
            ]
        )
    return buf.getvalue()


def corpus_from_csv(text: str, grid: CorpusGrid | None = None, noise_figure: float = 5.0) -> list[LinkExample]:
    """Rebuild examples (links, labels, features) from :func:`corpus_to_csv` output."""
    grid = grid or CorpusGrid()
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or tuple(rows[0].keys()) != CSV_HEADER:
        raise ValueError("unexpected corpus CSV header")
    out = []
    for r in rows:
        idle = tuple(int(s) for s in r["idle_slots"].split())
        n_ch = int(float(r["channel_count"]))
        link = build_link(
            int(float(r["span_number"])),
            fiber_type=r["fiber_type"],
            span_length=float(r["span_length"]),
            noise_figure=noise_figure,
            channel_count=n_ch + len(idle),
            channel_spacing=grid.channel_spacing,
            launch_power=float(r["launch_power"]),
            modulation=Modulation(r["modulation"]),
            symbol_rate=grid.symbol_rate,
            idle_slots=idle,
        )
        nl = NlFeatures(float(r["anc"]), float(r["pnc"]), float(r["cum_cd"]), n_ch)
        out.append(
            LinkExample(
                int(r["index"]),
                int(r["seed"]),
                link,
                float(r["snr_nl_db"]),
                nl,
                float(r["snr_total_db"]),
            )
        )
    return out


def with_power(link: LinkSpec, launch_power: float) -> LinkSpec:
    return replace(link, launch_power=launch_power)


def snr_is_finite(examples: list[LinkExample]) -> bool:
    return all(math.isfinite(e.snr_nl_db) for e in examples)
