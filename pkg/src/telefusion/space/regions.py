"""Regional launch-power uncertainty and region-local model adaptation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import TABLE_IV_FEATURES, LinkExample
from ..nn import ModelParams

POWER_INDEX = TABLE_IV_FEATURES.index("launch_power")


@dataclass(frozen=True)
class RegionProfile:
    region_id: int
    uncertainty_mean: float  # dB
    uncertainty_variance: float  # dB^2
    example_count: int = 200

    def __post_init__(self):
        if self.uncertainty_variance < 0:
            raise ValueError("uncertainty variance must be >= 0")
        if self.example_count <= 0:
            raise ValueError("example count must be > 0")

    @property
    def std(self) -> float:
        return float(np.sqrt(self.uncertainty_variance))


# mean (dB) and variance (dB^2) of the launch-power error in the four regions
TABLE_V = (
    RegionProfile(1, 0.3, 0.5),
    RegionProfile(2, 0.4, 0.3),
    RegionProfile(3, 0.6, 0.2),
    RegionProfile(4, 0.5, 0.3),
)

# the five named new-region cases (mean, variance)
TABLE_VI = ((0.5, 0.5), (0.3, 0.3), (0.5, 0.4), (0.6, 0.1), (0.6, 0.3))


@dataclass(frozen=True)
class RegressionExample:
    features: np.ndarray  # TABLE_IV_FEATURES order
    label: float  # nonlinear SNR, dB

    @classmethod
    def from_link(cls, ex: LinkExample) -> "RegressionExample":
        return cls(ex.table_iv(), float(ex.snr_nl_db))

    @property
    def launch_power(self) -> float:
        return float(self.features[POWER_INDEX])


def power_offsets(profile: RegionProfile, count: int, gen: np.random.Generator) -> np.ndarray:
    """Gaussian launch-power errors N(mean, variance) in dB."""
    return profile.uncertainty_mean + profile.std * gen.standard_normal(count)


def perturb_power(example: RegressionExample, profile: RegionProfile, seed: int) -> RegressionExample:
    """Observed copy of ``example`` whose launch power carries a regional error."""
    gen = np.random.default_rng(seed)
    x = example.features.copy()
    x[POWER_INDEX] += power_offsets(profile, 1, gen)[0]
    return RegressionExample(x, example.label)


def perturb_matrix(x: np.ndarray, profile: RegionProfile, gen: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`perturb_power` on a feature matrix."""
    out = np.array(x, dtype=float, copy=True)
    out[:, POWER_INDEX] += power_offsets(profile, len(out), gen)
    return out


@dataclass(frozen=True)
class RegionUpdate:
    """Everything a region sends upstream: its adapted model and example count."""

    region_id: int
    n_k: int
    model: ModelParams


@dataclass
class Region:
    """A region holding private (perturbed) data; only model updates leave it."""

    profile: RegionProfile
    _x: np.ndarray = field(repr=False)
    _y: np.ndarray = field(repr=False)

    @property
    def n_k(self) -> int:
        return len(self._y)

    def adapt(self, global_model: ModelParams, cfg) -> RegionUpdate:
        from .federated import local_adapt

        model = local_adapt(global_model, (self._x, self._y), cfg)
        return RegionUpdate(self.profile.region_id, self.n_k, model)

    def validation_mse(self, model: ModelParams) -> float:
        from ..nn import MSE, evaluate

        return evaluate(model, (self._x, self._y), MSE)[0]
