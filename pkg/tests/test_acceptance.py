"""Exit criteria. Each test records one PASS/FAIL line, printed at the end of the run."""

import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from qvol.analysis import (
    conditional_vol_trajectory,
    ks_critical_value,
    ks_statistic,
    mixture_kurtosis_oracle,
    moments,
)
from qvol.engine import SimConfig, simulate
from qvol.pde import mean_square_vol, solve_kbe
from qvol.pricing import bachelier_call, implied_normal_vol
from qvol.volstate import bayes_update_batch, kernel_transition, make_uniform_grid, max_entropy_state

GRID = dict(K=31, sigma_lo=0.05, sigma_hi=0.35)


def record(label, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    assert ok, detail


def test_1_mixture_kurtosis(state31):
    t0 = time.perf_counter()
    e = simulate(SimConfig("case1-fixed", dt=0.004, n_steps=20, n_paths=1_000_000, seed=101, **GRID))
    elapsed = time.perf_counter() - t0
    k = moments(e.terminal).relative_excess_kurtosis
    oracle = mixture_kurtosis_oracle(state31)
    ok = 0.54 <= k <= 0.61 and abs(oracle - 0.5777) < 1e-4 and elapsed < 60
    record("1 mixture kurtosis", ok, f"MC {k:.4f} in [0.54, 0.61], oracle {oracle:.4f}, {elapsed:.1f}s < 60s")


def test_2_bayes_vs_joint():
    common = dict(dt=0.004, n_steps=20, n_paths=100_000, **GRID)
    a = simulate(SimConfig("case1-fixed", seed=202, **common)).terminal
    b = simulate(SimConfig("case2-bayes", seed=203, **common)).terminal
    ka = moments(a).relative_excess_kurtosis
    kb = moments(b).relative_excess_kurtosis
    d = ks_statistic(a, b)
    ok = 0.45 <= ka <= 0.70 and 0.45 <= kb <= 0.70 and abs(ka - kb) < 0.06 and d < 0.01
    record("2 case II vs case I", ok, f"joint {ka:.4f}, bayes {kb:.4f}, |diff| {abs(ka - kb):.4f} < 0.06, KS {d:.4f} < 0.01")


def test_3_non_unitary_reference(state31):
    vbar = mean_square_vol(state31)
    g = solve_kbe(state31, lambda x: np.maximum(x, 0.0), 1.0, x_nodes=2001)
    err = abs(g.value_at(0.0) - bachelier_call(0.0, 0.0, math.sqrt(vbar), 1.0))

    c = SimConfig("case1-fixed", dt=0.004, n_steps=250, n_paths=100_000, seed=303, **GRID)
    x = simulate(c).terminal
    band = 3 * math.sqrt(vbar * c.horizon)
    hits = int(np.sum(np.abs(x) > band))
    p_gauss = 2 * stats.norm.sf(3.0)
    p = stats.binomtest(hits, x.size, p_gauss, alternative="greater").pvalue
    ok = err < 1e-4 and hits / x.size > p_gauss and p < 1e-3
    record(
        "3 non-unitary reference",
        ok,
        f"PDE vs Bachelier {err:.2e} < 1e-4; tail mass {hits / x.size:.4f} > {p_gauss:.4f} (binomial p={p:.1e})",
    )


def test_4_hamiltonian_limits():
    common = dict(dt=0.004, n_steps=250, n_paths=100_000, **GRID)
    fixed = simulate(SimConfig("case1-fixed", seed=401, **common)).terminal
    zero = simulate(SimConfig("case1-hamiltonian", nu=0.0, seed=402, **common)).terminal
    d = ks_statistic(fixed, zero)
    crit = ks_critical_value(fixed.size, zero.size, 1e-3)

    nu_big = math.sqrt(100 * 0.3**2 / 0.004)
    k_big = moments(simulate(SimConfig("case1-hamiltonian", nu=nu_big, seed=403, **common)).terminal).relative_excess_kurtosis
    k_mid = moments(simulate(SimConfig("case1-hamiltonian", nu=0.3, seed=404, **common)).terminal).relative_excess_kurtosis
    k_zero = moments(zero).relative_excess_kurtosis
    ok = d < crit and k_big <= 0.05 and k_big < k_mid < k_zero
    record(
        "4 hamiltonian limits",
        ok,
        f"KS(nu=0, fixed) {d:.4f} < {crit:.4f}; kurt nu=0 {k_zero:.3f} > nu=0.3 {k_mid:.3f} > nu={nu_big:.1f} {k_big:.4f} <= 0.05",
    )


def test_5_conditional_vol_convergence():
    c = SimConfig("case2-bayes", dt=0.004, n_steps=20, n_paths=100_000, seed=505, record_vol_paths=True, **GRID)
    steps, above, below = conditional_vol_trajectory(simulate(c).vol_paths, 0.2)
    assert steps[-1] == 20
    gap = above[-1] - below[-1]
    ok = abs(gap - 0.16) <= 0.25 * 0.16
    record("5 conditional-vol convergence", ok, f"gap at step 20 {gap:.4f}, case I gap 0.16, tolerance 25%")


def test_6_property_suites():
    rng = np.random.default_rng(606)
    grid = make_uniform_grid(31, 0.05, 0.35)
    checks = {}

    # weight normalization after 1e5 random operations
    kernels = [kernel_transition(grid, nu, 0.004).rows for nu in (0.0, 0.3, 3.0)]
    w = np.full((1000, 31), 1 / 31)
    worst = 0.0
    for _ in range(100):
        op = rng.integers(0, 2)
        if op == 0:
            dx = rng.normal(0, 0.2 * math.sqrt(0.004), 1000) * rng.choice([1, 10, 60])
            w = bayes_update_batch(w, grid.values, dx, 0.004, rng.choice([1e-6, 1e-3, 1.0]))
        else:
            w = w @ kernels[rng.integers(0, 3)]
        worst = max(worst, float(np.max(np.abs(w.sum(axis=1) - 1.0))))
        assert np.all(w >= 0)
    checks["normalization"] = worst <= 1e-12

    rows = [kernel_transition(grid, nu, 0.004).rows for nu in (0.0, 0.01, 0.3, 3.26, 100.0)]
    checks["kernel rows"] = all(np.allclose(r.sum(axis=1), 1.0, rtol=0, atol=1e-12) for r in rows)

    c = SimConfig("case1-fixed", dt=0.004, n_steps=20, n_paths=200_000, seed=607, **GRID)
    x = simulate(c).terminal
    m = moments(x)
    se_var = math.sqrt(np.var((x - m.mean) ** 2) / x.size)
    checks["martingale"] = abs(m.mean) <= 4 * math.sqrt(m.m2) / math.sqrt(x.size)
    checks["variance"] = abs(m.m2 - 0.048 * c.horizon) < 3 * se_var

    roundtrip = 0.0
    for _ in range(100):
        F, T, s = rng.uniform(-0.2, 0.2), rng.uniform(0.02, 2.0), rng.uniform(0.01, 1.0)
        K = F + rng.uniform(-2, 2) * s * math.sqrt(T)
        roundtrip = max(roundtrip, abs(implied_normal_vol(bachelier_call(F, K, s, T), F, K, T) - s))
    checks["bachelier roundtrip"] = roundtrip < 1e-8

    ref = bachelier_call(0.0, 0.0, math.sqrt(0.048), 1.0)
    errs = [abs(solve_kbe(0.048, lambda x: np.maximum(x, 0), 1.0, x_nodes=n, keep_all=False).value_at(0.0) - ref) for n in (501, 1001)]
    factor = errs[0] / errs[1]
    checks["CN order"] = 3.0 <= factor <= 5.0

    cb = SimConfig("case2-bayes", dt=0.004, n_steps=10, n_paths=80_000, seed=608, **GRID)
    checks["workers bit-identical"] = np.array_equal(simulate(cb, workers=1).terminal, simulate(cb, workers=4).terminal)

    detail = ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in checks.items())
    record("6 property suites", all(checks.values()), f"{detail} (CN factor {factor:.2f}, roundtrip {roundtrip:.1e})")
