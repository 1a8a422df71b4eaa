"""Experiment configuration: presets, overrides, fingerprints."""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

USECASES = ("source", "space", "model")
SCALES = ("paper", "desk")
OUTPUT_ROOT_ENV = "TELEFUSION_OUTPUT_ROOT"
CONFIG_SCHEMA_VERSION = 1

_CORPUS_PAPER = {
    "corpus_span_numbers": list(range(3, 22)),
    "corpus_channel_numbers": list(range(3, 22)),
    "corpus_launch_powers": [float(p) for p in range(-3, 4)],
    "corpus_n_symbols": 2**16,
    "corpus_ssfm_steps": 40,
}
_CORPUS_DESK = {
    "corpus_span_numbers": list(range(3, 11)),
    "corpus_channel_numbers": list(range(3, 6)),
    "corpus_launch_powers": [float(p) for p in range(-3, 4)],
    "corpus_n_symbols": 2**12,
    "corpus_ssfm_steps": 40,
}

PRESETS: dict[str, dict[str, dict]] = {
    "source": {
        "paper": {
            "n_spans": 15,
            "wss_every": 2,
            "launch_power": -6.0,
            "sweep_step": 0.05,
            "healthy_count": 0,
            "n_symbols": 2**15,
            "window": 1,
            "split_fraction": 0.7,
            "stage1_epochs": 3000,
            "stage1_lr": 1e-2,
            "stage2_epochs": 60,
            "stage2_lr": 1e-2,
            "batch_size": 32,
            "confidence_threshold": 0.5,
        },
        "desk": {
            "n_spans": 6,
            "wss_every": 2,
            "launch_power": -6.0,
            "sweep_step": 0.1,
            "healthy_count": 20,
            "n_symbols": 2**15,
            "window": 1,
            "split_fraction": 0.7,
            "stage1_epochs": 3000,
            "stage1_lr": 1e-2,
            "stage2_epochs": 60,
            "stage2_lr": 1e-2,
            "batch_size": 32,
            "confidence_threshold": 0.5,
        },
    },
    "space": {
        "paper": {
            **_CORPUS_PAPER,
            "n_pretrain": 1000,
            "n_region_pool": 800,
            "n_eval_pool": 1000,
            "region_examples": 200,
            "n_cases": 2000,
            "case_examples": 200,
            "pretrain_epochs": 500,
            "pretrain_lr": 1e-3,
            "adapt_epochs": 50,
            "adapt_lr": 1e-4,
            "batch_size": 32,
            "split_fraction": 0.7,
        },
        "desk": {
            **_CORPUS_DESK,
            "n_pretrain": 200,
            "n_region_pool": 100,
            "n_eval_pool": 100,
            "region_examples": 50,
            "n_cases": 100,
            "case_examples": 50,
            "pretrain_epochs": 500,
            "pretrain_lr": 1e-3,
            "adapt_epochs": 50,
            "adapt_lr": 1e-4,
            "batch_size": 32,
            "split_fraction": 0.7,
        },
    },
    "model": {
        "paper": {
            **_CORPUS_PAPER,
            "n_examples": 1000,
            "train_fraction": 0.75,
            "hidden": 10,
            "epochs": 500,
            "learning_rate": 1e-3,
            "batch_size": 32,
        },
        "desk": {
            **_CORPUS_DESK,
            "n_examples": 200,
            "train_fraction": 0.75,
            "hidden": 10,
            "epochs": 500,
            "learning_rate": 1e-3,
            "batch_size": 32,
        },
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration (usage error)."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _sha(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def default_output_dir(usecase: str, scale: str, seed: int) -> Path:
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{usecase}-{scale}-seed{seed}"


@dataclass(frozen=True)
class ExperimentConfig:
    usecase: str
    scale: str
    master_seed: int
    output_dir: Path
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.usecase not in USECASES:
            raise ConfigError(f"usecase must be one of {USECASES}, got {self.usecase!r}")
        if self.scale not in SCALES:
            raise ConfigError(f"scale must be one of {SCALES}, got {self.scale!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError("master seed must be a non-negative integer")
        unknown = set(self.overrides) - set(PRESETS[self.usecase][self.scale])
        if unknown:
            raise ConfigError(f"unknown override(s) for {self.usecase}: {sorted(unknown)}")

    def params(self) -> dict:
        """Preset for (usecase, scale) with overrides applied."""
        p = copy.deepcopy(PRESETS[self.usecase][self.scale])
        for k, v in self.overrides.items():
            ref = p[k]
            if isinstance(ref, bool) or not isinstance(v, type(ref)):
                if isinstance(ref, float) and isinstance(v, int) and not isinstance(v, bool):
                    v = float(v)
                elif type(v) is not type(ref):
                    raise ConfigError(f"override {k}={v!r} has wrong type (expected {type(ref).__name__})")
            p[k] = v
        return p

    def resolved(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "usecase": self.usecase,
            "scale": self.scale,
            "master_seed": self.master_seed,
            "params": self.params(),
        }

    def fingerprint(self) -> str:
        return fingerprint(self.resolved())

    def fingerprint_without_seed(self) -> str:
        return fingerprint_without_seed(self.resolved())

    @classmethod
    def from_resolved(cls, resolved: dict, output_dir: Path) -> "ExperimentConfig":
        preset = PRESETS[resolved["usecase"]][resolved["scale"]]
        overrides = {k: v for k, v in resolved["params"].items() if preset.get(k) != v}
        return cls(resolved["usecase"], resolved["scale"], resolved["master_seed"], Path(output_dir), overrides)


def fingerprint(resolved: dict) -> str:
    return _sha(resolved)


def fingerprint_without_seed(resolved: dict) -> str:
    return _sha({k: v for k, v in resolved.items() if k != "master_seed"})


def parse_override(text: str) -> tuple[str, object]:
    """``KEY=VALUE`` with VALUE parsed as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not KEY=VALUE")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config_file(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    allowed = {"usecase", "scale", "seed", "out", "overrides"}
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"unknown config file keys: {sorted(extra)}")
    return data
