import numpy as np
from scipy import stats

from qvol import rng


def test_draws_depend_only_on_coordinates():
    keys_all = rng.path_keys(11, np.arange(1000, dtype=np.uint64))
    keys_tail = rng.path_keys(11, np.arange(600, 1000, dtype=np.uint64))
    assert np.array_equal(rng.normals(keys_all, 7)[600:], rng.normals(keys_tail, 7))
    assert np.array_equal(rng.uniforms(keys_all, 3)[600:], rng.uniforms(keys_tail, 3))


def test_streams_seeds_and_steps_differ():
    keys = rng.path_keys(1, np.arange(100, dtype=np.uint64))
    a = rng.uniforms(keys, 0, rng.NORMAL)
    b = rng.uniforms(keys, 0, rng.CATEGORICAL)
    c = rng.uniforms(keys, 1, rng.NORMAL)
    d = rng.uniforms(rng.path_keys(2, np.arange(100, dtype=np.uint64)), 0, rng.NORMAL)
    for other in (b, c, d):
        assert not np.any(a == other)


def test_uniform_range_and_moments():
    keys = rng.path_keys(5, np.arange(200_000, dtype=np.uint64))
    u = rng.uniforms(keys, 4)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_normals_pass_ks_and_are_uncorrelated_across_steps():
    keys = rng.path_keys(9, np.arange(200_000, dtype=np.uint64))
    z0 = rng.normals(keys, 0)
    z1 = rng.normals(keys, 1)
    assert stats.kstest(z0, "norm").pvalue > 1e-3
    assert abs(np.corrcoef(z0, z1)[0, 1]) < 4 / np.sqrt(z0.size)
    assert np.all(np.isfinite(z0))
