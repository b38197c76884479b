"""Counter-based random streams keyed by (seed, path, step, stream).

Every variate is a pure function of its coordinates, so a path's draws never
depend on how the ensemble is split into blocks or across workers. Bits come
from the SplitMix64 finalizer applied to a per-path key plus a Weyl-sequence
counter, which is the same construction SplitMix uses to split generators.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0 ** -53

# stream tags
NORMAL = 0
CATEGORICAL = 1
N_STREAMS = 2


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 output function on a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * _M1
        x = x ^ (x >> np.uint64(27))
        x = x * _M2
        x = x ^ (x >> np.uint64(31))
    return x


def path_keys(seed: int, paths: np.ndarray) -> np.ndarray:
    """Per-path keys derived from the root seed and the path index."""
    root = mix64(np.array([seed & _MASK64], dtype=np.uint64))[0]
    idx = np.asarray(paths, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(root + (idx + np.uint64(1)) * _GAMMA)


def raw_bits(keys: np.ndarray, step: int, stream: int) -> np.ndarray:
    counter = np.uint64((step * N_STREAMS + stream + 1) & _MASK64)
    with np.errstate(over="ignore"):
        return mix64(keys + counter * _GAMMA)


def uniforms(keys: np.ndarray, step: int, stream: int = CATEGORICAL) -> np.ndarray:
    """Uniform variates on [0, 1) with 53 bits of resolution."""
    bits = raw_bits(keys, step, stream) >> np.uint64(11)
    return bits.astype(np.float64) * _TWO_M53


def normals(keys: np.ndarray, step: int, stream: int = NORMAL) -> np.ndarray:
    """Standard normal variates by inverse CDF on the open unit interval."""
    bits = raw_bits(keys, step, stream) >> np.uint64(11)
    return ndtri((bits.astype(np.float64) + 0.5) * _TWO_M53)
