"""Reproducible experiment harness and command-line entry point."""

from .config import ConfigError, ExperimentConfig
from .usecases import DatasetMismatch, ensure_dataset, gen_dataset, run

__all__ = ["ConfigError", "DatasetMismatch", "ExperimentConfig", "ensure_dataset", "gen_dataset", "run"]
