"""Distribution statistics for terminal ensembles.

Kurtosis is reported two ways. ``relative_excess_kurtosis`` is
m4 / (3 m2^2) - 1, which for a centred Gaussian scale mixture equals
E[sigma^4] / E[sigma^2]^2 - 1. ``conventional_excess_kurtosis`` is the usual
m4 / m2^2 - 3. Both are always carried together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .errors import InvalidArgument, UndefinedStatistic
from .volstate import VolState

__all__ = [
    "MomentSet",
    "Histogram",
    "moments",
    "relative_excess_kurtosis",
    "mixture_kurtosis_oracle",
    "histogram",
    "conditional_vol_trajectory",
    "ks_statistic",
    "ks_critical_value",
]


@dataclass(frozen=True)
class MomentSet:
    n: int
    mean: float
    m2: float
    m4: float
    relative_excess_kurtosis: float
    conventional_excess_kurtosis: float

    @property
    def variance(self) -> float:
        return self.m2


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.edges))


def moments(samples) -> MomentSet:
    """Mean and central moments via numpy's pairwise summation.

    The reduction tree depends only on the array length, so the result is
    reproducible for a given sample order.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n < 4:
        raise InvalidArgument(f"need at least 4 samples, got {n}")
    mean = float(np.sum(x) / n)
    d2 = (x - mean) ** 2
    m2 = float(np.sum(d2) / n)
    m4 = float(np.sum(d2 * d2) / n)
    if m2 > 0:
        rel = m4 / (3.0 * m2 * m2) - 1.0
        conv = m4 / (m2 * m2) - 3.0
    else:
        rel = conv = math.nan
    return MomentSet(n, mean, m2, m4, rel, conv)


def relative_excess_kurtosis(samples) -> float:
    """m4 / (3 m2^2) - 1; zero for a Gaussian."""
    m = moments(samples)
    if not m.m2 > 0:
        raise UndefinedStatistic("zero variance: kurtosis undefined")
    return m.relative_excess_kurtosis


def mixture_kurtosis_oracle(state: VolState) -> float:
    """Closed-form relative excess kurtosis of sigma * Z with sigma ~ state."""
    w = state.weights
    s2 = state.grid.values ** 2
    return float(np.dot(w, s2 * s2) / np.dot(w, s2) ** 2 - 1.0)


def histogram(samples, bins: int = 100, range_=None) -> Histogram:
    """Uniform-bin histogram; by default the range spans every sample."""
    x = np.asarray(samples, dtype=np.float64)
    if range_ is None:
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        range_ = (lo, hi)
    counts, edges = np.histogram(x, bins=bins, range=range_)
    return Histogram(edges, counts)


def conditional_vol_trajectory(vol_paths, threshold: float, tie_tol: float = 1e-12):
    """Expected sigma at each step conditional on the previous step's sigma.

    ``vol_paths`` has shape (n_paths, n_steps); column j holds the level
    sampled at step j + 1. Returns ``(steps, above, below)`` for steps
    2..n_steps, where ``above[i]`` is the mean of sigma at that step over paths
    whose previous sigma was strictly above ``threshold``. Levels within
    ``tie_tol`` of the threshold count as ties and are dropped. Empty
    conditioning sets give NaN.
    """
    v = np.asarray(vol_paths, dtype=np.float64)
    if v.ndim != 2:
        raise InvalidArgument("vol paths must be a (n_paths, n_steps) array")
    prev, cur = v[:, :-1], v[:, 1:]
    tol = tie_tol * max(1.0, abs(threshold))
    up = prev > threshold + tol
    dn = prev < threshold - tol
    with np.errstate(invalid="ignore", divide="ignore"):
        above = np.sum(np.where(up, cur, 0.0), axis=0) / np.sum(up, axis=0)
        below = np.sum(np.where(dn, cur, 0.0), axis=0) / np.sum(dn, axis=0)
    steps = np.arange(2, v.shape[1] + 1)
    return steps, above, below


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise InvalidArgument("both samples must be nonempty")
    return float(ks_2samp(a, b).statistic)


def ks_critical_value(n: int, m: int, alpha: float = 1e-3) -> float:
    """Asymptotic two-sample KS critical value c(alpha) * sqrt((n + m) / (n m))."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))
