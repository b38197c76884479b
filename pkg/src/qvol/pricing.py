"""Call prices from terminal samples and normal (Bachelier) implied vols.

Paths start at zero with no drift and strikes are absolute offsets in price
units. Surfaces invert against the sample mean as forward by default, which
keeps empirical put-call parity exact on the sample; pass ``forward=0.0`` to
quote against the theoretical forward instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import ndtr

from .errors import BracketError, InvalidArgument, NoSolution, QvolError
from .volstate import VolState

VOL_LO = 1e-8
VOL_HI = 10.0

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SurfacePoint:
    strike: float
    call_price: float
    implied_normal_vol: float
    horizon: float
    status: str = "ok"


def empirical_call_price(samples, strike: float) -> float:
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise InvalidArgument("no samples")
    return float(np.mean(np.maximum(x - strike, 0.0)))


def empirical_put_price(samples, strike: float) -> float:
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise InvalidArgument("no samples")
    return float(np.mean(np.maximum(strike - x, 0.0)))


def bachelier_call(forward, strike, sigma_n, T):
    """Normal-model call: (F - K) N(d) + sigma sqrt(T) n(d), d = (F - K) / (sigma sqrt(T))."""
    if np.any(np.asarray(sigma_n) <= 0) or not T > 0:
        raise InvalidArgument("sigma_n and T must be > 0")
    s = np.asarray(sigma_n, dtype=np.float64) * math.sqrt(T)
    m = np.asarray(forward, dtype=np.float64) - np.asarray(strike, dtype=np.float64)
    d = m / s
    price = m * ndtr(d) + s * _INV_SQRT_2PI * np.exp(-0.5 * d * d)
    return float(price) if np.ndim(price) == 0 else price


def mixture_call_price(state: VolState, forward: float, strike: float, T: float) -> float:
    """Semi-analytic call price when sigma is drawn once from ``state``."""
    prices = bachelier_call(forward, strike, state.grid.values, T)
    return float(np.dot(state.weights, np.atleast_1d(prices)))


def implied_normal_vol(price: float, forward: float, strike: float, T: float) -> float:
    """Invert :func:`bachelier_call` by bisection on [1e-8, 10]."""
    if not T > 0:
        raise InvalidArgument(f"T must be > 0, got {T!r}")
    intrinsic = max(forward - strike, 0.0)
    if not price > intrinsic:
        raise NoSolution(f"price {price!r} not above intrinsic {intrinsic!r}")
    if price > bachelier_call(forward, strike, VOL_HI, T):
        raise BracketError(f"price {price!r} exceeds the value at vol {VOL_HI}")
    if forward == strike:
        return price * math.sqrt(2.0 * math.pi / T)
    if price <= bachelier_call(forward, strike, VOL_LO, T):
        return VOL_LO

    def f(s):
        return bachelier_call(forward, strike, s, T) - price

    return bisect(f, VOL_LO, VOL_HI, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def surface(samples, strikes, T: float, forward: float | None = None) -> list[SurfacePoint]:
    """Price each strike empirically, then invert to a normal vol.

    A failed inversion is recorded in ``status`` with a NaN vol; it never
    aborts the remaining strikes.
    """
    x = np.asarray(getattr(samples, "terminal", samples), dtype=np.float64)
    strikes = np.atleast_1d(np.asarray(strikes, dtype=np.float64))
    if strikes.size == 0:
        raise InvalidArgument("no strikes")
    fwd = float(np.mean(x)) if forward is None else float(forward)
    points = []
    for k in strikes:
        c = empirical_call_price(x, k)
        try:
            vol, status = implied_normal_vol(c, fwd, float(k), T), "ok"
        except NoSolution:
            vol, status = math.nan, "no-solution"
        except BracketError:
            vol, status = math.nan, "bracket"
        except QvolError:
            vol, status = math.nan, "error"
        points.append(SurfacePoint(float(k), c, vol, T, status))
    return points


def smile_curvature(points: list[SurfacePoint], forward: float = 0.0) -> float:
    """Mean of the two outermost vols minus the vol nearest ``forward``."""
    vols = np.array([p.implied_normal_vol for p in points])
    strikes = np.array([p.strike for p in points])
    atm = vols[np.argmin(np.abs(strikes - forward))]
    return float(0.5 * (vols[0] + vols[-1]) - atm)
