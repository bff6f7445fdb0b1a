"""Mollified local time estimators, means and moment oracles."""

import numpy as np
import pytest

from fbmsilt import (FbmKernel, HurstParams, MollifierConfig,
                     ValidationError, alpha_n_oracle, diverges_on_schedule,
                     ensemble_l_eps, heat_kernel, l_eps_pathwise,
                     l_eps_schedule_pathwise, mean_l_eps, mean_l_eps_limit,
                     renormalized_l_eps, simulate_volterra, uniform_grid)


def test_heat_kernel_normalizes():
    eps = 0.3
    x = np.linspace(-6, 6, 4001)[:, None]
    dens = heat_kernel(x, eps)
    assert np.trapezoid(dens, x[:, 0]) == pytest.approx(1.0, abs=1e-8)


def test_heat_kernel_peak_value():
    assert heat_kernel(np.zeros(2), 0.5) == pytest.approx(
        1.0 / (2 * np.pi * 0.5))


def _one_path(params, n_steps=128, seed=11):
    grid = uniform_grid(params, n_steps)
    path, _ = simulate_volterra(FbmKernel(params), grid, rng_seed=seed)
    return path


def test_schedule_matches_single_eps():
    params = HurstParams(H=0.5, d=2)
    path = _one_path(params)
    sched = MollifierConfig(epsilon=0.2, schedule=(0.2, 0.1, 0.05))
    out = l_eps_schedule_pathwise(path, sched)
    for eps in sched.schedule:
        assert out[eps] == l_eps_pathwise(path, eps)


def test_l_eps_decreasing_eps_increases_value():
    # sharper mollifier concentrates on near-intersections; for a typical
    # planar Brownian path the estimate grows as eps shrinks
    params = HurstParams(H=0.5, d=2)
    path = _one_path(params, n_steps=256)
    vals = [l_eps_pathwise(path, eps) for eps in (0.4, 0.2, 0.1)]
    assert vals[0] < vals[2]


def test_mean_l_eps_approaches_limit():
    # convergence rate is eps^(1 - Hd): at Hd = 0.5, eps = 1e-6 gives ~1e-3
    params = HurstParams(H=0.25, d=2)
    limit = mean_l_eps_limit(params)
    m = mean_l_eps(params, 1e-6)
    assert m == pytest.approx(limit, rel=5e-3)


def test_mean_l_eps_limit_requires_subcritical():
    with pytest.raises(ValidationError):
        mean_l_eps_limit(HurstParams(H=0.5, d=2))


def test_renormalized_centering():
    params = HurstParams(H=0.5, d=2)
    path = _one_path(params)
    eps = 0.1
    assert renormalized_l_eps(path, eps, params) == pytest.approx(
        l_eps_pathwise(path, eps) - mean_l_eps(params, eps))


def test_ensemble_merge_equals_single_run():
    params = HurstParams(H=0.5, d=2)
    sched = MollifierConfig(epsilon=0.1)
    full = ensemble_l_eps(params, sched, 64, 20, seed=3)
    first = ensemble_l_eps(params, sched, 64, 10, seed=3)
    second = ensemble_l_eps(params, sched, 64, 10, seed=3,
                            path_offset=10, chunk_index=1)
    merged = first[0.1].merge(second[0.1])
    assert merged.value == full[0.1].value
    assert merged.n_samples == 20


def test_alpha_1_matches_mean_l_eps():
    params = HurstParams(H=0.5, d=2)
    eps = 0.2
    rec = alpha_n_oracle(params, 1, eps=eps, n_samples=50_000, seed=4)
    exact = mean_l_eps(params, eps)
    assert abs(rec.value - exact) < 3 * rec.std_error


def test_alpha_n_rejects_supercritical_at_zero_eps():
    with pytest.raises(ValidationError):
        alpha_n_oracle(HurstParams(H=0.6, d=2), 2, eps=0.0)


def test_divergence_classifier():
    sub = diverges_on_schedule(HurstParams(H=0.4, d=2))
    sup = diverges_on_schedule(HurstParams(H=0.6, d=2))
    assert not sub["divergent"] and not sub["theory_divergent"]
    assert sup["divergent"] and sup["theory_divergent"]
