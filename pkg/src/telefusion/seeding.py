"""Counter-based seed derivation.

Every random draw in the package flows from a single master seed. A child
seed is addressed by a tuple of non-negative integers (stream id, example
index, ...) and derived through :class:`numpy.random.SeedSequence`, so the
seed of example ``i`` never depends on how many other examples were drawn.
"""

from __future__ import annotations

import hashlib

import numpy as np

# stream ids; keep stable, they are part of the dataset format
STREAM_SOURCE = 1
STREAM_CORPUS = 2
STREAM_REGION = 3
STREAM_NEW_REGION = 4
STREAM_TRAIN = 5
STREAM_PERTURB = 6
STREAM_SPLIT = 7
STREAM_CASES = 8


def stream_id(name: str) -> int:
    """Stable integer id for a free-form stream name."""
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "little")


def derive_seed(master_seed: int, *keys: int) -> int:
    """Return a 32-bit seed for the stream addressed by ``keys``."""
    if master_seed < 0 or any(k < 0 for k in keys):
        raise ValueError("seeds and keys must be non-negative")
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *keys))
