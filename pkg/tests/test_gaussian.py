"""Samplers, conditional laws and certificates."""

import numpy as np
import pytest

from fbmsilt import (FbmKernel, HurstParams, ValidationError,
                     conditional_law, conditional_variance_given,
                     det_q_factorized, driving_increments, fbm_covariance,
                     lnd_certificate, simulate_cholesky, simulate_volterra,
                     uniform_grid)


def test_driving_increments_deterministic_and_disjoint():
    grid = np.linspace(0.0, 1.0, 65)
    a = driving_increments(grid, seed=7, d=2, path_index=3)
    b = driving_increments(grid, seed=7, d=2, path_index=3)
    c = driving_increments(grid, seed=7, d=2, path_index=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.shape == (64, 2)


def test_driving_increments_scale():
    grid = np.linspace(0.0, 2.0, 129)
    samples = np.stack([driving_increments(grid, 0, 1, i).ravel()
                        for i in range(400)])
    dt = grid[1] - grid[0]
    assert samples.var() == pytest.approx(dt, rel=0.1)


def test_volterra_h_half_is_brownian():
    params = HurstParams(H=0.5, d=2)
    grid = uniform_grid(params, 64)
    path, drv = simulate_volterra(FbmKernel(params), grid, rng_seed=1)
    # at H = 1/2 the kernel is the indicator, so B is the integrated W
    assert np.allclose(path.values[1:], np.cumsum(drv.increments, axis=0))


def test_cholesky_law_matches_covariance():
    params = HurstParams(H=0.7, d=1)
    grid = uniform_grid(params, 16)
    vals = np.stack([simulate_cholesky(params, grid, 3, i).values[:, 0]
                     for i in range(3000)])
    emp = np.cov(vals[:, 1:].T)
    exact = fbm_covariance(params, grid[1:])
    assert np.max(np.abs(emp - exact)) < 0.08


@pytest.mark.parametrize("H", [0.3, 0.5, 0.75])
def test_conditional_law_tower_identity(H):
    # sigma^2(r) + Var(A(r)) must reassemble the full increment variance
    params = HurstParams(H=H, d=1)
    kernel = FbmKernel(params)
    grid = uniform_grid(params, 256)
    r, s, t = grid[64], grid[128], grid[192]
    n_paths = 400
    means = np.empty(n_paths)
    for i in range(n_paths):
        _, drv = simulate_volterra(kernel, grid, rng_seed=5, path_index=i)
        law = conditional_law(kernel, drv, r, s, t)
        means[i] = law.mean[0]
        var = law.variance
    total = var + means.var(ddof=1)
    assert total == pytest.approx((t - s) ** (2 * H), rel=0.15)


def test_conditional_law_rejects_off_grid_times():
    params = HurstParams(H=0.6, d=1)
    kernel = FbmKernel(params)
    grid = uniform_grid(params, 32)
    _, drv = simulate_volterra(kernel, grid, rng_seed=0)
    with pytest.raises(ValidationError):
        conditional_law(kernel, drv, 0.26, 0.5, 0.75)


def test_lnd_certificate_brownian_value():
    # for H = 1/2 the conditional variance is the Brownian bridge variance
    # r * (gap) / ..., minimized ratio sigma^2 / r^(2H) = 1/2 exactly
    params = HurstParams(H=0.5, d=2)
    cert = lnd_certificate(params, uniform_grid(params, 64))
    assert cert["k2_hat"] == pytest.approx(0.5, abs=1e-10)


def test_det_q_dual_route_agreement():
    params = HurstParams(H=0.35, d=2)
    s = np.array([0.1, 0.45, 0.7])
    t = np.array([0.3, 0.6, 0.95])
    rep = det_q_factorized(params, s, t)
    assert rep.value == pytest.approx(rep.factorized, rel=1e-9)
    assert not rep.ill_conditioned


def test_conditional_variance_monotone_in_conditioning():
    params = HurstParams(H=0.4, d=1)
    times = np.array([0.2, 0.4, 0.6, 0.8])
    v1 = conditional_variance_given(params, times, 0.5, [0])
    v2 = conditional_variance_given(params, times, 0.5, [0, 1])
    v3 = conditional_variance_given(params, times, 0.5, [0, 1, 2])
    assert v1 >= v2 >= v3 > 0
