"""Volatility state: weights over a grid of volatility eigenvalues.

The state is kept diagonal in the volatility eigenbasis, so a state is just a
probability vector over the grid. Measurement collapse, Bayesian reweighting
after a price observation and the free-particle transition kernel all act on
that vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import DegeneratePosterior, InvalidArgument, MeasurementImpossible

__all__ = [
    "SigmaGrid",
    "VolState",
    "KernelMatrix",
    "make_uniform_grid",
    "max_entropy_state",
    "collapse_joint",
    "gaussian_band_prob",
    "log_band_prob",
    "bayes_update",
    "bayes_update_batch",
    "kernel_transition",
    "sample_index",
    "sample_index_batch",
]

_NORM_TOL = 1e-12
_TINY = 1e-280


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SigmaGrid:
    """Strictly increasing, positive volatility levels (annualized)."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(np.atleast_1d(self.values))
        if v.ndim != 1 or v.size == 0:
            raise InvalidArgument("grid needs at least one volatility level")
        if not np.all(np.isfinite(v)) or v[0] <= 0:
            raise InvalidArgument("volatility levels must be finite and > 0")
        if np.any(np.diff(v) <= 0):
            raise InvalidArgument("volatility levels must be strictly increasing")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        return isinstance(other, SigmaGrid) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    @property
    def K(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class VolState:
    """Diagonal of the volatility density matrix: P(sigma_k) for each level."""

    grid: SigmaGrid
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(np.atleast_1d(self.weights))
        if w.shape != (len(self.grid),):
            raise InvalidArgument(
                f"expected {len(self.grid)} weights, got shape {w.shape}"
            )
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidArgument("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > _NORM_TOL:
            raise InvalidArgument(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VolState)
            and self.grid == other.grid
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Row-stochastic matrix of p(sigma_j | sigma_i) over one time-step."""

    grid: SigmaGrid
    rows: np.ndarray
    nu: float
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "rows", _frozen(self.rows))

    def cdf(self) -> np.ndarray:
        """Cumulative rows, used for inverse-CDF sampling of the next level."""
        return np.cumsum(self.rows, axis=1)


def make_uniform_grid(K: int, sigma_lo: float, sigma_hi: float) -> SigmaGrid:
    """K equally spaced levels from ``sigma_lo`` to ``sigma_hi`` inclusive."""
    if int(K) != K or K < 1:
        raise InvalidArgument(f"K must be a positive integer, got {K!r}")
    if not sigma_lo > 0:
        raise InvalidArgument(f"sigma_lo must be > 0, got {sigma_lo!r}")
    if sigma_lo > sigma_hi:
        raise InvalidArgument(f"sigma_lo {sigma_lo!r} exceeds sigma_hi {sigma_hi!r}")
    if K == 1:
        if sigma_lo != sigma_hi:
            raise InvalidArgument("a single-level grid needs sigma_lo == sigma_hi")
        return SigmaGrid(np.array([float(sigma_lo)]))
    if sigma_lo == sigma_hi:
        raise InvalidArgument("K > 1 needs sigma_lo < sigma_hi")
    return SigmaGrid(np.linspace(float(sigma_lo), float(sigma_hi), int(K)))


def max_entropy_state(grid: SigmaGrid) -> VolState:
    K = len(grid)
    return VolState(grid, np.full(K, 1.0 / K))


def collapse_joint(state: VolState, k: int) -> VolState:
    """Projective collapse onto the eigenstate at index ``k``."""
    K = len(state.grid)
    if not 0 <= k < K:
        raise MeasurementImpossible(f"index {k} outside grid of size {K}")
    if state.weights[k] <= 0:
        raise MeasurementImpossible(f"outcome {k} has zero probability")
    w = np.zeros(K)
    w[k] = 1.0
    return VolState(state.grid, w)


def _check_band_args(sigma, T, eps):
    if np.any(np.asarray(sigma) <= 0):
        raise InvalidArgument("sigma must be > 0")
    if not T > 0:
        raise InvalidArgument(f"T must be > 0, got {T!r}")
    if not eps > 0:
        raise InvalidArgument(f"eps must be > 0, got {eps!r}")


def gaussian_band_prob(sigma, dx, T, eps):
    """Probability that an N(0, sigma^2 T) variable lands in [dx - eps, dx + eps].

    Broadcasts over ``sigma`` and ``dx``.
    """
    _check_band_args(sigma, T, eps)
    s = np.asarray(sigma, dtype=np.float64) * np.sqrt(T)
    dx = np.asarray(dx, dtype=np.float64)
    a = (dx - eps) / s
    b = (dx + eps) / s
    # take the difference in the lower tail to avoid cancellation near 1
    flip = a > 0
    p = np.where(flip, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a))
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def log_band_prob(sigma, dx, T, eps):
    """Log of :func:`gaussian_band_prob`, accurate deep in the tails."""
    _check_band_args(sigma, T, eps)
    s = np.asarray(sigma, dtype=np.float64) * np.sqrt(T)
    dx = np.asarray(dx, dtype=np.float64)
    a = (dx - eps) / s
    b = (dx + eps) / s
    # Phi(b) - Phi(a) == Phi(-a) - Phi(-b); evaluate in whichever tail is lower
    flip = a > 0
    hi = np.where(flip, -a, b)
    lo = np.where(flip, -b, a)
    l_hi = log_ndtr(hi)
    l_lo = log_ndtr(lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = l_hi + np.log(-np.expm1(l_lo - l_hi))
    return np.where(np.isnan(out), -np.inf, out)


def bayes_update_batch(weights, sigmas, dx, dt, eps):
    """Posterior weights for a batch of states, one observation per row.

    ``weights`` has shape (n, K), ``dx`` shape (n,). Rows whose likelihoods
    underflow are recomputed in log space; rows still degenerate after that
    raise :class:`DegeneratePosterior`.
    """
    weights = np.asarray(weights, dtype=np.float64)
    dx = np.asarray(dx, dtype=np.float64)[:, None]
    sigmas = np.asarray(sigmas, dtype=np.float64)[None, :]
    post = weights * gaussian_band_prob(sigmas, dx, dt, eps)
    total = post.sum(axis=1)
    # subnormal totals have lost precision; redo those rows in log space too
    bad = ~(total > _TINY) | ~np.isfinite(total)
    if np.any(bad):
        with np.errstate(divide="ignore"):
            logp = np.log(weights[bad]) + log_band_prob(sigmas, dx[bad], dt, eps)
        top = logp.max(axis=1, keepdims=True)
        if not np.all(np.isfinite(top)):
            raise DegeneratePosterior(
                f"{int(np.sum(~np.isfinite(top)))} posterior row(s) vanished"
            )
        post[bad] = np.exp(logp - top)
        total[bad] = post[bad].sum(axis=1)
    post /= total[:, None]
    return post


def bayes_update(state: VolState, dx: float, dt: float, eps: float) -> VolState:
    """Reweight ``state`` by the band likelihood of the observed price change."""
    w = bayes_update_batch(state.weights[None, :], state.grid.values, [dx], dt, eps)[0]
    return VolState(state.grid, w)


def kernel_transition(grid: SigmaGrid, nu: float, dt: float) -> KernelMatrix:
    """Free-Schrodinger transition probabilities truncated to the grid.

    Row i is the Gaussian density exp(-(s_j - s_i)^2 / (2 nu^2 dt)) evaluated
    at the grid levels and renormalized to sum to one. ``nu == 0`` gives the
    identity: the level never moves.
    """
    if grid is None or len(grid) == 0:
        raise InvalidArgument("empty grid")
    if not nu >= 0:
        raise InvalidArgument(f"nu must be >= 0, got {nu!r}")
    if not dt > 0:
        raise InvalidArgument(f"dt must be > 0, got {dt!r}")
    K = len(grid)
    if nu == 0:
        return KernelMatrix(grid, np.eye(K), 0.0, float(dt))
    s = grid.values
    diff = s[None, :] - s[:, None]
    rows = np.exp(-(diff * diff) / (2.0 * nu * nu * dt))
    rows /= rows.sum(axis=1, keepdims=True)
    return KernelMatrix(grid, rows, float(nu), float(dt))


def sample_index_batch(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF categorical draws; ``cdf`` rows pair with entries of ``u``.

    ``cdf`` may be a single row (K,) shared by every draw or an (n, K) array.
    Returns the smallest k with cdf[k] > u. Rounding in the last cumulative
    entry is absorbed by the last index that carries positive mass.
    """
    cdf = np.asarray(cdf, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if cdf.ndim == 1:
        idx = np.searchsorted(cdf, u, side="right")
        last = int(np.flatnonzero(np.diff(cdf, prepend=0.0) > 0)[-1])
        return np.minimum(idx, last)
    idx = np.sum(cdf <= u[:, None], axis=1)
    mass = np.diff(cdf, axis=1, prepend=0.0) > 0
    last = cdf.shape[1] - 1 - np.argmax(mass[:, ::-1], axis=1)
    return np.minimum(idx, last)


def sample_index(state: VolState, u: float) -> int:
    if not 0 <= u < 1:
        raise InvalidArgument(f"u must lie in [0, 1), got {u!r}")
    return int(sample_index_batch(np.cumsum(state.weights), np.asarray(u)))
