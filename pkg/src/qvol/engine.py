"""Monte-Carlo path ensembles for the three measurement regimes.

case1-fixed
    Joint measurement, no Hamiltonian. The first collapse fixes sigma for the
    whole path.
case1-hamiltonian
    Joint measurement with a free kinetic term. After each step the level
    moves according to the truncated Gaussian kernel of width nu*sqrt(dt).
case2-bayes
    Price-only measurement. Each step samples sigma from the current weights,
    then reweights them by the band likelihood of the observed increment.

Paths are processed in fixed-size blocks. Random numbers come from
:mod:`qvol.rng` keyed by path index, so the output is identical whatever the
number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .errors import ConfigError, InvalidArgument
from .volstate import (
    SigmaGrid,
    bayes_update_batch,
    kernel_transition,
    make_uniform_grid,
    max_entropy_state,
    sample_index_batch,
)

REGIMES = ("case1-fixed", "case1-hamiltonian", "case2-bayes")
BLOCK_SIZE = 1 << 15


@dataclass(frozen=True)
class SimConfig:
    regime: str
    K: int
    sigma_lo: float
    sigma_hi: float
    dt: float
    n_steps: int
    n_paths: int
    seed: int = 0
    nu: float | None = None
    epsilon: float | None = None
    record_vol_paths: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError("regime", f"must be one of {', '.join(REGIMES)}")
        try:
            make_uniform_grid(self.K, self.sigma_lo, self.sigma_hi)
        except InvalidArgument as exc:
            raise ConfigError("K/sigma_lo/sigma_hi", str(exc)) from None
        if not self.dt > 0:
            raise ConfigError("dt", "must be > 0")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigError("n_steps", "must be an integer >= 1")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ConfigError("n_paths", "must be an integer >= 1")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.regime == "case1-hamiltonian":
            if self.nu is None or not self.nu >= 0:
                raise ConfigError("nu", "case1-hamiltonian needs nu >= 0")
        elif self.nu is not None:
            raise ConfigError("nu", f"only valid for case1-hamiltonian, not {self.regime}")
        if self.regime != "case2-bayes" and self.epsilon is not None:
            raise ConfigError("epsilon", f"only valid for case2-bayes, not {self.regime}")
        if self.regime == "case2-bayes" and self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError("epsilon", "must be > 0")

    @property
    def grid(self) -> SigmaGrid:
        return make_uniform_grid(self.K, self.sigma_lo, self.sigma_hi)

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    @property
    def eps(self) -> float | None:
        """Band half-width, defaulting to 0.1 * median(sigma) * sqrt(dt)."""
        if self.regime != "case2-bayes":
            return None
        if self.epsilon is not None:
            return self.epsilon
        return 0.1 * float(np.median(self.grid.values)) * math.sqrt(self.dt)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    config: SimConfig
    terminal: np.ndarray
    vol_paths: np.ndarray | None = None
    normal_draws: np.ndarray = field(default=None)
    categorical_draws: np.ndarray = field(default=None)

    @property
    def n_paths(self) -> int:
        return self.terminal.size


def step_increment(sigma, z, dt):
    """Price change over one step: sigma * z * sqrt(dt)."""
    return sigma * z * math.sqrt(dt)


def _case1_block(cfg: SimConfig, keys: np.ndarray):
    grid = cfg.grid.values
    cdf = np.cumsum(max_entropy_state(cfg.grid).weights)
    k = sample_index_batch(cdf, rng.uniforms(keys, 0))
    sigma = grid[k]
    x = np.zeros(keys.size)
    for n in range(cfg.n_steps):
        x += step_increment(sigma, rng.normals(keys, n), cfg.dt)
    vols = np.repeat(sigma[:, None], cfg.n_steps, axis=1) if cfg.record_vol_paths else None
    return x, vols, cfg.n_steps, 1


def _hamiltonian_block(cfg: SimConfig, keys: np.ndarray):
    grid = cfg.grid.values
    kcdf = kernel_transition(cfg.grid, cfg.nu, cfg.dt).cdf()
    start = np.cumsum(max_entropy_state(cfg.grid).weights)
    # measure -> diffuse price -> evolve vol state -> next measurement
    k = sample_index_batch(start, rng.uniforms(keys, 0))
    x = np.zeros(keys.size)
    vols = np.empty((keys.size, cfg.n_steps)) if cfg.record_vol_paths else None
    for n in range(cfg.n_steps):
        sigma = grid[k]
        if vols is not None:
            vols[:, n] = sigma
        x += step_increment(sigma, rng.normals(keys, n), cfg.dt)
        if n + 1 < cfg.n_steps:
            k = sample_index_batch(kcdf[k], rng.uniforms(keys, n + 1))
    return x, vols, cfg.n_steps, cfg.n_steps


def _bayes_block(cfg: SimConfig, keys: np.ndarray):
    grid = cfg.grid.values
    eps = cfg.eps
    w = np.tile(max_entropy_state(cfg.grid).weights, (keys.size, 1))
    x = np.zeros(keys.size)
    vols = np.empty((keys.size, cfg.n_steps)) if cfg.record_vol_paths else None
    for n in range(cfg.n_steps):
        z = rng.normals(keys, n)
        k = sample_index_batch(np.cumsum(w, axis=1), rng.uniforms(keys, n))
        sigma = grid[k]
        if vols is not None:
            vols[:, n] = sigma
        dx = step_increment(sigma, z, cfg.dt)
        x += dx
        w = bayes_update_batch(w, grid, dx, cfg.dt, eps)
    return x, vols, cfg.n_steps, cfg.n_steps


_RUNNERS = {
    "case1-fixed": _case1_block,
    "case1-hamiltonian": _hamiltonian_block,
    "case2-bayes": _bayes_block,
}


def _run_block(args):
    cfg, lo, hi = args
    keys = rng.path_keys(cfg.seed, np.arange(lo, hi, dtype=np.uint64))
    return _RUNNERS[cfg.regime](cfg, keys)


def simulate(cfg: SimConfig, workers: int = 1, block_size: int = BLOCK_SIZE) -> PathEnsemble:
    """Run ``cfg`` and return its ensemble. Output does not depend on ``workers``."""
    blocks = [
        (cfg, lo, min(lo + block_size, cfg.n_paths))
        for lo in range(0, cfg.n_paths, block_size)
    ]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, blocks))
    else:
        results = [_run_block(b) for b in blocks]
    terminal = np.concatenate([r[0] for r in results])
    vols = np.concatenate([r[1] for r in results]) if cfg.record_vol_paths else None
    n_normal = np.full(cfg.n_paths, results[0][2], dtype=np.int64)
    n_cat = np.full(cfg.n_paths, results[0][3], dtype=np.int64)
    return PathEnsemble(cfg, terminal, vols, n_normal, n_cat)


def _require(cfg: SimConfig, regime: str) -> None:
    if cfg.regime != regime:
        raise ConfigError("regime", f"expected {regime}, got {cfg.regime}")


def simulate_case1(cfg: SimConfig, workers: int = 1) -> PathEnsemble:
    _require(cfg, "case1-fixed")
    return simulate(cfg, workers)


def simulate_case1_hamiltonian(cfg: SimConfig, workers: int = 1) -> PathEnsemble:
    _require(cfg, "case1-hamiltonian")
    return simulate(cfg, workers)


def simulate_case2_bayes(cfg: SimConfig, workers: int = 1) -> PathEnsemble:
    _require(cfg, "case2-bayes")
    return simulate(cfg, workers)


def ensemble_stats(ensemble: PathEnsemble):
    """Moments of the terminal price changes; see :func:`qvol.analysis.moments`."""
    from .analysis import moments

    return moments(ensemble.terminal)
