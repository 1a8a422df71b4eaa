"""Space-level fusion: regional adaptation and weighted aggregation."""

from .federated import AdaptConfig, fed_aggregate, local_adapt
from .regions import (
    TABLE_V,
    TABLE_VI,
    Region,
    RegionProfile,
    RegionUpdate,
    RegressionExample,
    perturb_matrix,
    perturb_power,
)
from .usecase import SpaceConfig, SpaceResult, run_space_usecase

__all__ = [
    "AdaptConfig",
    "Region",
    "RegionProfile",
    "RegionUpdate",
    "RegressionExample",
    "SpaceConfig",
    "SpaceResult",
    "TABLE_V",
    "TABLE_VI",
    "fed_aggregate",
    "local_adapt",
    "perturb_matrix",
    "perturb_power",
    "run_space_usecase",
]
