"""Independent oracles for the analytic estimates."""

import math

import numpy as np
import pytest

from fbmsilt import (FbmKernel, HurstParams, SimplexIntegralSpec,
                     ValidationError, exp_moment_transfer_check,
                     lemma1_integral, lemma1_scan, moment_bound_exponent,
                     simplex_integral, simplex_integral_mc)


def test_lemma1_vanishes_for_brownian():
    assert lemma1_integral(FbmKernel(HurstParams(H=0.5, d=2)), 0.4) == 0.0


def test_lemma1_regime_rejected():
    # H = 0.7, d = 2 sits above min(2/3, 3/4)
    with pytest.raises(ValidationError):
        lemma1_integral(FbmKernel(HurstParams(H=0.7, d=2)), 0.4)


def test_lemma1_scan_finite_and_bounded():
    scan = lemma1_scan(FbmKernel(HurstParams(H=0.6, d=2)),
                       r_values=[0.2, 0.5, 0.8])
    assert all(np.isfinite(r["integral"]) for r in scan["rows"])
    assert scan["fitted_constant"] > 0


def test_simplex_n1_closed_form():
    a, T = 0.37, 1.3
    exact, _ = simplex_integral(SimplexIntegralSpec(a=a, n=1, T=T))
    closed = 2.0 ** a / (1.0 - a) * T ** (1.0 - a)
    assert exact == pytest.approx(closed, rel=1e-12)


def test_simplex_a_zero_is_simplex_volume():
    for n in range(1, 6):
        exact, bound = simplex_integral(SimplexIntegralSpec(a=0.0, n=n))
        assert exact == pytest.approx(1.0 / math.factorial(n), rel=1e-12)
        assert exact <= bound * (1.0 + 1e-12)


def test_simplex_mc_agrees():
    spec = SimplexIntegralSpec(a=0.3, n=2, T=1.0)
    exact, _ = simplex_integral(spec)
    rec = simplex_integral_mc(spec, n_samples=100_000, seed=2)
    assert abs(rec.value - exact) < 3 * rec.std_error


def test_simplex_mc_rejects_heavy_tail():
    with pytest.raises(ValidationError):
        simplex_integral_mc(SimplexIntegralSpec(a=0.6, n=2))


def test_moment_exponent_values():
    out = moment_bound_exponent(HurstParams(H=0.5, d=2))
    assert out["gamma0"] == pytest.approx(1.0)
    assert out["p0"] == 0.5
    assert out["p0_hd1_special"] == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        moment_bound_exponent(HurstParams(H=0.3, d=2))


def test_exp_moment_transfer_on_gaussian_data():
    rng = np.random.Generator(np.random.Philox(key=17))
    # exponential upper tail in <M>, the shape the rate fit presumes
    qv = 0.5 + rng.exponential(0.5, size=2000)
    m = rng.normal(0.0, np.sqrt(qv))
    out = exp_moment_transfer_check(m, qv)
    assert out["conclusive"]
    assert out["all_stable"]
    assert out["lambda_star"] > 0
