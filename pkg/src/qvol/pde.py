"""Reduced (partial-trace) reference model.

Tracing out the volatility space leaves a single Gaussian diffusion whose
variance rate is the state-averaged sigma^2. Prices under that model solve

    du/dt + 0.5 * vbar * d2u/dx2 = 0,   u(T, x) = payoff(x)

which is integrated backward here with Crank-Nicolson.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import InvalidArgument
from .volstate import VolState


@dataclass(frozen=True, eq=False)
class PdeGrid:
    x_nodes: np.ndarray
    t_nodes: np.ndarray
    u: np.ndarray  # shape (len(t_nodes), len(x_nodes))

    def slice_at(self, t_index: int = 0) -> np.ndarray:
        return self.u[t_index]

    def value_at(self, x: float, t_index: int = 0) -> float:
        return float(np.interp(x, self.x_nodes, self.u[t_index]))


def mean_square_vol(state: VolState) -> float:
    """sum_k w_k sigma_k^2, the variance rate left after the partial trace."""
    return float(np.dot(state.weights, state.grid.values ** 2))


def gaussian_density(vbar: float, T: float, x):
    if not vbar > 0 or not T > 0:
        raise InvalidArgument("vbar and T must be > 0")
    var = vbar * T
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-0.5 * x * x / var) / math.sqrt(2.0 * math.pi * var)
    return float(out) if out.ndim == 0 else out


def solve_kbe(
    state,
    payoff,
    T: float,
    x_nodes: int = 2001,
    t_nodes: int | None = None,
    halfwidth: float | None = None,
    center: float = 0.0,
    keep_all: bool = True,
) -> PdeGrid:
    """Backward Crank-Nicolson solve from t = T to t = 0.

    ``state`` is a :class:`VolState` or a bare variance rate. The domain is
    ``center +/- halfwidth`` (default eight standard deviations of the
    terminal distribution); boundary nodes stay pinned to the payoff.
    ``t_nodes`` defaults to ``x_nodes``. With ``keep_all=False`` only the
    t = 0 and t = T rows are stored.
    """
    vbar = mean_square_vol(state) if isinstance(state, VolState) else float(state)
    if vbar < 0:
        raise InvalidArgument("variance rate must be >= 0")
    if not T > 0:
        raise InvalidArgument(f"T must be > 0, got {T!r}")
    if x_nodes < 5:
        raise InvalidArgument("need at least 3 interior x nodes")
    t_nodes = x_nodes if t_nodes is None else t_nodes
    if t_nodes < 2:
        raise InvalidArgument("need at least 2 time nodes")
    if halfwidth is None:
        halfwidth = 8.0 * math.sqrt(vbar * T) if vbar > 0 else 1.0
    if not halfwidth > 0:
        raise InvalidArgument("halfwidth must be > 0")

    x = np.linspace(center - halfwidth, center + halfwidth, x_nodes)
    t = np.linspace(0.0, T, t_nodes)
    dx = x[1] - x[0]
    dt = t[1] - t[0]
    u = np.asarray(payoff(x), dtype=np.float64) * np.ones_like(x)
    if not np.all(np.isfinite(u)):
        raise InvalidArgument("payoff must be finite on the grid")

    rows = [u.copy()] if keep_all else None
    if vbar > 0:
        r = 0.25 * vbar * dt / (dx * dx)
        m = x_nodes - 2
        ab = np.empty((3, m))
        ab[0] = -r
        ab[1] = 1.0 + 2.0 * r
        ab[2] = -r
        lo, hi = u[0], u[-1]
        for _ in range(t_nodes - 1):
            rhs = r * u[:-2] + (1.0 - 2.0 * r) * u[1:-1] + r * u[2:]
            rhs[0] += r * lo
            rhs[-1] += r * hi
            u = np.concatenate(([lo], solve_banded((1, 1), ab, rhs), [hi]))
            if keep_all:
                rows.append(u)
    elif keep_all:
        rows.extend(u.copy() for _ in range(t_nodes - 1))

    if keep_all:
        grid = np.array(rows[::-1])
    else:
        grid = np.array([u, np.asarray(payoff(x), dtype=np.float64) * np.ones_like(x)])
        t = np.array([0.0, T])
    return PdeGrid(x, t, grid)
