"""Analytic bounds and appendix lemmas as standalone numeric oracles.

Each function here re-derives one of the estimates the representation
proof leans on, by quadrature or Monte Carlo, independently of the
modules it is meant to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn
from scipy.special import roots_legendre

from .kernel import FbmKernel, _tanh_sinh_rule
from .params import EstimateRecord, HurstParams, ValidationError, fingerprint


def _check_lemma1_regime(params: HurstParams) -> None:
    limit = min(2.0 / (params.d + 1), 1.5 / params.d)
    if params.H >= limit:
        raise ValidationError(
            f"lemma1 requires H < min(2/(d+1), 3/(2d)) = {limit}, "
            f"got H = {params.H}")


def _int_varlower(alpha, beta, r, g0, gmax, xl, wl):
    """Vectorized int over v of (v - r)^alpha v^beta for g = v - r running
    from the array g0 up to the scalar gmax.

    The lower gaps are passed directly (not as x - r) so they stay
    resolvable below the rounding scale of r; dyadic one-octave
    Gauss-Legendre panels as in the kernel module.
    """
    g0 = np.asarray(g0, dtype=float)
    kmax = int(np.ceil(max(np.log2(gmax / g0.min()), 0.0))) + 1
    scale = 2.0 ** np.arange(kmax)
    lo = np.minimum(g0[..., None] * scale, gmax)
    hi = np.minimum(g0[..., None] * (2.0 * scale), gmax)
    width = hi - lo
    g = lo[..., None] + width[..., None] * xl
    vals = (g ** alpha * (r + g) ** beta) @ wl
    return np.sum(width * vals, axis=-1)


def lemma1_integral(ctx: FbmKernel, r: float) -> float:
    """The kernel-increment integral

        int_r^T int_r^t (t - s)^(-Hd - H) |K(t, r) - K(s, r)| ds dt,

    finite whenever H < min(2/(d+1), 3/(2d)); bounded by a constant times
    r^(1/2 - H) v 1. Nested tanh-sinh quadrature; the kernel increment is
    evaluated through its derivative integral, which is exact in the
    difference and free of cancellation near s = t.
    """
    params = ctx.params
    _check_lemma1_regime(params)
    T = params.T
    if not (0.0 < r < T):
        raise ValidationError(f"need 0 < r < T, got r = {r}")
    H = params.H
    if H == 0.5:
        return 0.0
    power = -(params.hd + H)
    pref = abs(ctx._c_dt * (H - 0.5)) * r ** (0.5 - H)
    d0, d1, w, _ = _tanh_sinh_rule(h=0.1, xmax=4.2)
    xl, wl = roots_legendre(24)
    xl, wl = (1.0 + xl) / 2.0, wl / 2.0
    span_t = T - r
    # t - r kept as a product so nodes near r do not round onto it
    spans = span_t * np.where(d0 <= d1, d0, 1.0 - d1)
    total = 0.0
    for span_s, wt in zip(spans, w):
        # gaps of the inner node from both of its endpoints, kept as
        # products so neither tail rounds away
        gap_r = np.where(d0 <= d1, span_s * d0, span_s * (1.0 - d1))
        gap_t = np.where(d0 <= d1, span_s * (1.0 - d0), span_s * d1)
        # |K(t,r) - K(s,r)| = pref * int_s^t (v-r)^(H-3/2) v^(H-1/2) dv
        inc = pref * _int_varlower(H - 1.5, H - 0.5, r, gap_r, span_s,
                                   xl, wl)
        inner = span_s * float(w @ (gap_t ** power * np.abs(inc)))
        total += wt * span_t * inner
    return float(total)


def lemma1_scan(ctx: FbmKernel, r_values=None) -> dict:
    """Scan r and report the fitted constant sup integral/(r^(1/2-H) v 1)."""
    params = ctx.params
    T = params.T
    if r_values is None:
        r_values = np.linspace(0.1, 0.9, 9) * T
    rows = []
    worst = 0.0
    for r in r_values:
        val = lemma1_integral(ctx, float(r))
        envelope = max(r ** (0.5 - params.H), 1.0)
        rows.append({"r": float(r), "integral": val,
                     "envelope": envelope, "ratio": val / envelope})
        worst = max(worst, val / envelope)
    return {"rows": rows, "fitted_constant": worst}


@dataclass(frozen=True)
class SimplexIntegralSpec:
    """Parameters of the ordered-simplex integral with (gap ^ position)
    singularities: exponent a < 1, depth n >= 1, horizon T."""

    a: float
    n: int
    T: float = 1.0

    def __post_init__(self):
        if self.a >= 1.0:
            raise ValidationError(f"need a < 1 for integrability, got {self.a}")
        if self.n < 1 or self.n > 8:
            raise ValidationError(f"n must be in [1, 8], got {self.n}")
        if self.T <= 0:
            raise ValidationError(f"T must be positive, got {self.T}")


def _level_factor(a: float, k: int) -> float:
    """J_k = int_0^1 ((1-u) ^ u)^(-a) u^((k-1)(1-a)) du, split at 1/2."""
    b = (k - 1) * (1.0 - a)
    first = (0.5) ** (b - a + 1.0) / (b - a + 1.0)

    def g(u):
        # the (1-u)^(-a) endpoint factor lives in the quadrature weight
        return u ** b

    second, _ = quad(g, 0.5, 1.0, epsabs=1e-13, epsrel=1e-13,
                     weight="alg", wvar=(0.0, -a), limit=200)
    return first + second


def simplex_integral(spec: SimplexIntegralSpec) -> tuple[float, float]:
    """(exact_recursive, bound) for the ordered-simplex integral I_n.

    The recursion I_k(x) = int_0^x ((x-s) ^ s)^(-a) I_{k-1}(s) ds is
    self-similar: I_k(x) = c_k x^(k(1-a)) exactly, with c_k a product of
    one-dimensional integrals; no interpolation between levels is needed.
    The bound is C^n T^(n(1-a)) / Gamma(n(1-a) + 1) with
    C = max(Gamma(2-a)/(1-a) * 2^a, 1 + Gamma(1-a)).
    """
    a, n, T = spec.a, spec.n, spec.T
    c = 1.0
    for k in range(1, n + 1):
        c *= _level_factor(a, k)
    exact = c * T ** (n * (1.0 - a))
    big_c = max(gamma_fn(2.0 - a) / (1.0 - a) * 2.0 ** a,
                1.0 + gamma_fn(1.0 - a))
    bound = big_c ** n * T ** (n * (1.0 - a)) / gamma_fn(n * (1.0 - a) + 1.0)
    return exact, bound


def simplex_integral_mc(spec: SimplexIntegralSpec, n_samples: int = 200_000,
                        seed: int = 0, chunk_index: int = 0) -> EstimateRecord:
    """Brute-force Monte Carlo oracle for the simplex integral.

    Plain sorted-uniform sampling; the estimator has finite variance only
    for a < 1/2, which the caller must respect.
    """
    a, n, T = spec.a, spec.n, spec.T
    if a >= 0.5:
        raise ValidationError(
            f"plain MC has infinite variance for a = {a} >= 1/2")
    bits = np.random.Philox(key=seed, counter=[0, 3, chunk_index, n])
    rng = np.random.Generator(bits)
    s = np.sort(rng.uniform(0.0, T, size=(n_samples, n)), axis=1)
    prev = np.hstack([np.zeros((n_samples, 1)), s[:, :-1]])
    nxt = np.hstack([s[:, 1:], np.full((n_samples, 1), T)])
    f = np.prod(np.minimum(nxt - s, s) ** (-a), axis=1)
    samples = f * T ** n / math.factorial(n)
    fp = fingerprint({"a": a, "n": n, "T": T, "estimator": "simplex_mc"})
    return EstimateRecord.from_samples(samples, fp, seed, index=chunk_index)


def moment_bound_exponent(params: HurstParams) -> dict:
    """Moment-growth exponent gamma0 and admissible tail exponent p0.

    gamma0 = (1/2 + H)(d - 1/(2H)); the main reading gives p0 = 1/(2
    gamma0), consistent with both quoted special cases (p0 = 1/2 at
    H = 1/2, d = 2; p0 = 2H/(1+2H) on the curve Hd = 1). The displayed
    alternative with d/2 - 1/(4H) inside the bracket evaluates to twice
    that; both are reported, labeled, without adjudication.
    """
    H, d = params.H, params.d
    if not (1.0 <= params.hd < 1.5):
        raise ValidationError(
            f"moment bound applies for 1 <= Hd < 3/2, got Hd = {params.hd}")
    gamma0 = (0.5 + H) * (d - 1.0 / (2.0 * H))
    p0 = 0.5 / gamma0
    return {
        "gamma0": gamma0,
        "p0": p0,
        "p0_display_variant": 0.5 / ((0.5 + H) * (0.5 * d - 1.0 / (4.0 * H))),
        "p0_hd1_special": 2.0 * H / (1.0 + 2.0 * H) if params.hd == 1.0
        else None,
    }


def exp_moment_transfer_check(m_abs, qv, p: float = 1.0,
                              n_lambda: int = 8,
                              n_bootstrap: int = 200,
                              seed: int = 0) -> dict:
    """Empirical exponential-moment transfer diagnostic.

    Given ensemble pairs (|M_T|, <M>_T), fits an exponential rate alpha to
    the top decile of <M>_T^p (mean-excess estimator), reports the
    admissible threshold lambda* = sqrt(alpha / 2) for p = 1, and probes
    the empirical moment generating function of |M_T| on a lambda grid
    below the threshold. Stability means no single sample dominates the
    MGF average and the bootstrap spread stays moderate. A diagnostic,
    not a proof.
    """
    if not (0.0 < p <= 1.0):
        raise ValidationError(f"p must be in (0, 1], got {p}")
    m_abs = np.abs(np.asarray(m_abs, dtype=float))
    qv = np.asarray(qv, dtype=float)
    if m_abs.shape != qv.shape or m_abs.ndim != 1:
        raise ValidationError("need matching 1-d sample arrays")
    n = m_abs.size
    if n < 50:
        return {"conclusive": False, "reason": "fewer than 50 samples"}
    x = np.sort(qv ** p)
    threshold = x[int(0.9 * n)]
    excess = x[x > threshold] - threshold
    if excess.size < 10:
        return {"conclusive": False, "reason": "insufficient tail data"}
    alpha_hat = 1.0 / float(excess.mean())
    lambda_star = math.sqrt(alpha_hat / 2.0)
    lam_grid = np.linspace(0.1, 0.9, n_lambda) * lambda_star \
        if p == 1.0 else np.linspace(0.1, 0.9, n_lambda)
    rng = np.random.Generator(np.random.Philox(key=seed))
    rows = []
    all_stable = True
    for lam in lam_grid:
        e = np.exp(lam * m_abs)
        mgf = float(e.mean())
        dominance = float(e.max() / e.sum())
        boot = np.empty(n_bootstrap)
        for b in range(n_bootstrap):
            boot[b] = e[rng.integers(0, n, n)].mean()
        lo, hi = np.quantile(boot, [0.025, 0.975])
        stable = dominance < 0.5 and hi / lo < 2.0
        all_stable = all_stable and stable
        rows.append({"lambda": float(lam), "mgf": mgf,
                     "ci": (float(lo), float(hi)),
                     "max_dominance": dominance, "stable": stable})
    return {
        "conclusive": True,
        "p": p,
        "alpha_hat": alpha_hat,
        "lambda_star": lambda_star,
        "rows": rows,
        "all_stable": all_stable,
    }
