"""Representation integrand, Ito assembly and consistency checks."""

import dataclasses

import numpy as np
import pytest

from fbmsilt import (FbmKernel, HurstParams, ValidationError, DrivingPath,
                     inner_integral, integrand_series, ito_assemble,
                     lhs_centered, path_fingerprint, quadratic_variation,
                     markov_integrand_series, representation_residual,
                     sigma_integrand, simulate_volterra, uniform_grid)


@pytest.fixture(scope="module")
def brownian_setup():
    params = HurstParams(H=0.5, d=2)
    kernel = FbmKernel(params)
    grid = uniform_grid(params, 128)
    _, drv = simulate_volterra(kernel, grid, rng_seed=9)
    return params, kernel, drv


def test_fused_matches_clean_reference(brownian_setup):
    params, kernel, drv = brownian_setup
    eps = 0.1
    series = integrand_series(kernel, drv, eps, m_nodes=32)
    for l in (5, 40, 100):
        ref = inner_integral(kernel, drv, l, eps, m_nodes=32)
        assert np.allclose(series.values[l], ref["total"], atol=1e-13)


def test_fused_matches_independent_markov_form(brownian_setup):
    _, kernel, drv = brownian_setup
    eps = 0.1
    a = integrand_series(kernel, drv, eps, m_nodes=32)
    b = markov_integrand_series(drv, eps, m_nodes=32)
    assert np.max(np.abs(a.values - b.values)) < 1e-12


def test_region1_vanishes_for_brownian(brownian_setup):
    # at H = 1/2 the kernel increment K(t,r) - K(s,r) is zero whenever
    # s > r, so only cells whose s side is observed contribute
    _, kernel, drv = brownian_setup
    ref = inner_integral(kernel, drv, 40, 0.1, m_nodes=32)
    assert np.allclose(ref["region1"], 0.0)
    assert not np.allclose(ref["region2"], 0.0)


def test_ito_assemble_rejects_foreign_path(brownian_setup):
    params, kernel, drv = brownian_setup
    series = integrand_series(kernel, drv, 0.1, m_nodes=32)
    other = DrivingPath(grid=drv.grid,
                        increments=-drv.increments, seed=drv.seed)
    ito_assemble(drv, series)  # own path accepted
    with pytest.raises(ValidationError):
        ito_assemble(other, series)


def test_quadratic_variation_formula(brownian_setup):
    params, kernel, drv = brownian_setup
    series = integrand_series(kernel, drv, 0.1, m_nodes=32)
    manual = float(np.sum(series.values ** 2) * series.delta)
    assert quadratic_variation(series) == manual


def test_sigma_integrand_direction():
    # the integrand is parallel to the conditional mean vector
    law = dataclasses.make_dataclass("L", ["mean", "variance"])(
        mean=np.array([0.3, -0.4]), variance=0.2)
    v = sigma_integrand(law, kernel_inc=0.7, eps=0.05)
    assert v @ np.array([-0.4, -0.3]) == pytest.approx(0.0, abs=1e-15)
    assert v @ law.mean > 0


def test_representation_residual_small_sample():
    params = HurstParams(H=0.5, d=2)
    rep = representation_residual(params, eps=0.1, n_steps=256, n_paths=8,
                                  seed=21, m_nodes=64)
    assert rep["ratio"] < 0.6
    assert rep["lhs"].shape == (8,)
    # per-path identity: rhs assembled from the same increments
    assert np.all(np.isfinite(rep["rhs"]))


def test_lhs_centered_consistent_with_residual_lhs():
    params = HurstParams(H=0.5, d=2)
    kernel = FbmKernel(params)
    grid = uniform_grid(params, 256)
    _, drv = simulate_volterra(kernel, grid, rng_seed=21, path_index=0)
    rep = representation_residual(params, eps=0.1, n_steps=256, n_paths=1,
                                  seed=21, m_nodes=64, kernel=kernel)
    assert lhs_centered(kernel, drv, 0.1, m_nodes=64) == pytest.approx(
        rep["lhs"][0], rel=1e-12)


def test_qv_pathwise_bound_brownian():
    # for planar Brownian motion the quadratic variation is dominated
    # pathwise by (1/pi^2) int_0^T (int_0^r ds/|B_r - B_s|)^2 dr
    params = HurstParams(H=0.5, d=2)
    kernel = FbmKernel(params)
    n_steps, m_nodes = 256, 64
    stride = n_steps // m_nodes
    grid = uniform_grid(params, n_steps)
    delta = grid[1] - grid[0]
    coarse = np.arange(m_nodes) * stride
    for i in range(3):
        _, drv = simulate_volterra(kernel, grid, rng_seed=33, path_index=i)
        qv = quadratic_variation(integrand_series(kernel, drv, 0.05,
                                                  m_nodes=m_nodes))
        w = np.vstack([np.zeros(2), np.cumsum(drv.increments, axis=0)])
        bound = 0.0
        for l in range(1, n_steps):
            s_idx = coarse[coarse < l]
            dist = np.linalg.norm(w[l] - w[s_idx], axis=1)
            bound += delta * np.sum(stride * delta / dist) ** 2
        assert qv <= bound / np.pi ** 2


def test_path_fingerprint_sensitivity(brownian_setup):
    _, _, drv = brownian_setup
    bumped = DrivingPath(grid=drv.grid,
                         increments=drv.increments + 1e-12, seed=drv.seed)
    assert path_fingerprint(drv) != path_fingerprint(bumped)
