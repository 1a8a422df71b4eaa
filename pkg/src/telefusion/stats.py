"""Summary statistics shared by the use-case reports."""

from __future__ import annotations

import hashlib

import numpy as np


def histogram(values, bins: int = 20, value_range: tuple[float, float] | None = None) -> dict:
    """Counts and bin edges as plain lists."""
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=value_range)
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def cdf_points(values) -> dict:
    """Empirical CDF: sorted values against cumulative fraction."""
    v = np.sort(np.asarray(values, dtype=float))
    return {"x": v.tolist(), "p": (np.arange(1, v.size + 1) / v.size).tolist()}


def percentile(values, q: float) -> float:
    return float(np.percentile(np.asarray(values, dtype=float), q))


def fingerprint_indices(idx) -> str:
    """Short stable hash of an index set, used to prove paired splits."""
    a = np.asarray(idx, dtype=np.int64)
    return hashlib.sha256(a.tobytes()).hexdigest()[:16]
