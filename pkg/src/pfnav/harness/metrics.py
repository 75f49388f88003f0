"""Learning-curve statistics: sliding averages and per-phase mean/variance/CV."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True)
class PhaseStats:
    label: str
    mean: float
    variance: float
    cv: float  # nan when the mean is zero


def _series(values: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if arr.size == 0:
        raise ValueError("series is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series contains non-finite values")
    return arr


def sliding_window_avg(series: ArrayLike, window: int = 50) -> NDArray[np.float64]:
    """Trailing mean over up to ``window`` entries (shorter at the start)."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    arr = _series(series)
    csum = np.concatenate([[0.0], np.cumsum(arr)])
    k = np.arange(arr.size)
    lo = np.maximum(0, k - window + 1)
    return (csum[k + 1] - csum[lo]) / (k + 1 - lo)


def phase_stats(series: ArrayLike, start: int, stop: int, label: str = "") -> PhaseStats:
    """Population mean, variance and std/mean over ``series[start:stop]``."""
    arr = _series(series)
    if not 0 <= start < stop <= arr.size:
        raise ValueError(f"range [{start}, {stop}) not within series of length {arr.size}")
    part = arr[start:stop]
    mean = float(part.mean())
    var = float(part.var())
    cv = math.sqrt(var) / mean if mean != 0 else math.nan
    return PhaseStats(label, mean, var, cv)


def phase_bounds(n: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Index ranges of the first and final third of ``n`` episodes (at least one each)."""
    if n < 1:
        raise ValueError("need at least one episode")
    third = max(1, n // 3)
    return (0, third), (n - third, n)
