"""Path simulation and exact Gaussian conditioning.

Two samplers are provided: the Volterra discretization driven by ordinary
Brownian increments (the representation every downstream identity is built
on) and a dense Cholesky sampler with the exact covariance, used as a law
oracle. Conditional laws, the local-nondeterminism certificate and the
determinant factorization all reduce to exact Gaussian linear algebra on
the closed-form covariance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .kernel import FbmKernel
from .params import HurstParams, ValidationError


def validate_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError("grid must be a 1-d array with at least 2 nodes")
    if grid[0] != 0.0:
        raise ValidationError("grid must start at t = 0")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing")
    return grid


def uniform_grid(params: HurstParams, n_steps: int) -> np.ndarray:
    """The canonical grid 0, T/N, ..., T."""
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    return np.linspace(0.0, params.T, n_steps + 1)


@dataclass(frozen=True)
class DrivingPath:
    """Sampled increments of the driving d-dimensional Brownian motion W.

    grid has N+1 nodes starting at 0; increments is the N x d matrix of
    forward increments W(t_{j+1}) - W(t_j).
    """

    grid: np.ndarray
    increments: np.ndarray
    seed: int

    def __post_init__(self):
        grid = validate_grid(self.grid)
        if self.increments.shape[0] != grid.size - 1:
            raise ValidationError("increments must have one row per grid cell")


@dataclass(frozen=True)
class FbmPath:
    """Sampled fractional path; values is (N+1) x d with B(0) = 0."""

    grid: np.ndarray
    values: np.ndarray
    provenance: str

    def __post_init__(self):
        grid = validate_grid(self.grid)
        if self.values.shape != (grid.size, self.values.shape[1]):
            raise ValidationError("values must have one row per grid node")
        if np.any(self.values[0] != 0.0):
            raise ValidationError("path must start at the origin")


@dataclass(frozen=True)
class ConditionalLaw:
    """Conditional law of B(t) - B(s) given the driving path up to time r.

    The law is normal with the given mean vector and a scalar variance
    shared across coordinates.
    """

    mean: np.ndarray
    variance: float


def driving_increments(grid, seed: int, d: int, path_index: int = 0) -> np.ndarray:
    """Brownian increments from a counter-based generator.

    Each (path, coordinate) pair owns a disjoint counter block, so any
    subset of an ensemble can be regenerated independently and in any
    order.
    """
    grid = validate_grid(grid)
    dt = np.diff(grid)
    out = np.empty((dt.size, d))
    for j in range(d):
        bits = np.random.Philox(key=seed, counter=[0, 0, path_index, j])
        out[:, j] = np.random.Generator(bits).standard_normal(dt.size)
    return out * np.sqrt(dt)[:, None]


def midpoints(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    return 0.5 * (grid[:-1] + grid[1:])


def simulate_volterra(ctx: FbmKernel, grid, rng_seed: int,
                      path_index: int = 0) -> tuple[FbmPath, DrivingPath]:
    """Sample one fractional path from its moving-average representation.

    The stochastic integral is discretized with left-endpoint Brownian
    increments and the kernel frozen at the cell midpoint; the midpoint
    keeps the i = j-1 cell finite where K(t_j, .) is singular at the right
    edge. Returns the fractional path together with the driving path so
    downstream identities can reuse the same W.
    """
    grid = validate_grid(grid)
    d = ctx.params.d
    dw = driving_increments(grid, rng_seed, d, path_index)
    kappa = ctx.table(grid[1:], midpoints(grid))
    values = np.vstack([np.zeros(d), kappa @ dw])
    path = FbmPath(grid=grid, values=values, provenance="volterra")
    return path, DrivingPath(grid=grid, increments=dw, seed=rng_seed)


def fbm_covariance(params: HurstParams, times) -> np.ndarray:
    """Single-coordinate covariance matrix (t^2H + s^2H - |t-s|^2H) / 2."""
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise ValidationError("times must be nonnegative")
    H2 = 2.0 * params.H
    return 0.5 * (t[:, None] ** H2 + t[None, :] ** H2
                  - np.abs(t[:, None] - t[None, :]) ** H2)


def _chol_with_jitter(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.diag(np.diag(cov))
        try:
            return np.linalg.cholesky(cov + jitter)
        except np.linalg.LinAlgError:
            raise ValidationError(f"{what}: covariance not positive definite "
                                  "even after jitter")


def simulate_cholesky(params: HurstParams, grid, rng_seed: int,
                      path_index: int = 0) -> FbmPath:
    """Exact-law sampler: dense factorization of the closed-form covariance.

    Quadratic memory and cubic setup, intended as a desk-scale oracle for
    the Volterra sampler rather than a production path generator.
    """
    grid = validate_grid(grid)
    if grid.size - 1 > 4096:
        raise ValidationError("cholesky sampler limited to 4096 nodes")
    d = params.d
    chol = _chol_with_jitter(fbm_covariance(params, grid[1:]),
                             "simulate_cholesky")
    z = np.empty((grid.size - 1, d))
    for j in range(d):
        bits = np.random.Philox(key=rng_seed, counter=[0, 1, path_index, j])
        z[:, j] = np.random.Generator(bits).standard_normal(grid.size - 1)
    values = np.vstack([np.zeros(d), chol @ z])
    return FbmPath(grid=grid, values=values, provenance="cholesky")


def _grid_index(grid: np.ndarray, t: float, name: str) -> int:
    idx = int(np.searchsorted(grid, t))
    if idx >= grid.size or grid[idx] != t:
        raise ValidationError(f"{name} = {t} is not a grid node "
                              "(off-grid times are not interpolated)")
    return idx


def conditional_law(ctx: FbmKernel, path: DrivingPath, r: float, s: float,
                    t: float) -> ConditionalLaw:
    """Conditional law of B(t) - B(s) given the driving path up to time r.

    The mean is the stochastic integral of the kernel increment against the
    observed part of W; the variance is the squared L2 norm of the kernel
    increment over the unobserved part, identical across coordinates.
    """
    grid = path.grid
    for name, val in (("r", r), ("s", s), ("t", t)):
        _grid_index(grid, val, name)
    if not (r < t and s < t):
        raise ValidationError("conditional_law requires r < t and s < t")
    mids = midpoints(grid)
    observed = mids < r
    if np.any(observed):
        dk = ctx.increments_at(t, s, mids[observed])
        mean = dk @ path.increments[observed]
    else:
        mean = np.zeros(path.increments.shape[1])
    variance = ctx.integrated_square(r, t)
    if s > r:
        variance += ctx.integrated_square(r, s) \
            - 2.0 * ctx.integrated_cross(t, s, r, s)
    return ConditionalLaw(mean=np.asarray(mean, dtype=float),
                          variance=float(variance))


def conditional_variance_given(params: HurstParams, times, target: float,
                               given_idx) -> float:
    """Var(B(target) | B(times[i]), i in given_idx) by exact conditioning.

    Single coordinate; Schur complement of the closed-form covariance.
    """
    times = np.asarray(times, dtype=float)
    given_idx = np.asarray(given_idx, dtype=int)
    pts = np.concatenate([[target], times[given_idx]])
    cov = fbm_covariance(params, pts)
    if given_idx.size == 0:
        return float(cov[0, 0])
    chol = _chol_with_jitter(cov[1:, 1:], "conditional_variance_given")
    w = np.linalg.solve(chol, cov[1:, 0])
    return float(cov[0, 0] - w @ w)


def lnd_certificate(params: HurstParams, grid) -> dict:
    """Certify local nondeterminism on a finite grid.

    For each interior node t and each separation r with 0 < r < t ^ (T-t),
    the variance of B(t) conditional on every grid sample at distance >= r
    is computed by exact conditioning, and the report carries the infimum
    of Var / r^2H over the scan together with where it is attained.
    """
    grid = validate_grid(grid)
    if grid.size < 64:
        raise ValidationError("certificate needs at least 64 grid nodes")
    times = grid[1:]
    cov = fbm_covariance(params, times)
    T = times[-1]
    k2_hat = np.inf
    worst = None
    for i, t in enumerate(times):
        rmax = min(t, T - t)
        if rmax <= 0:
            continue
        gaps = np.unique(np.abs(times - t))
        for r in gaps[(gaps > 0) & (gaps < rmax)]:
            given = np.flatnonzero(np.abs(times - t) >= r)
            chol = _chol_with_jitter(cov[np.ix_(given, given)],
                                     "lnd_certificate")
            w = np.linalg.solve(chol, cov[given, i])
            var = cov[i, i] - w @ w
            ratio = var / r ** (2.0 * params.H)
            if ratio < k2_hat:
                k2_hat = ratio
                worst = {"t": float(t), "r": float(r), "variance": float(var)}
    if worst is None:
        raise ValidationError("grid leaves no admissible (t, r) pair")
    return {"k2_hat": float(k2_hat), "worst_triple": worst,
            "n_nodes": int(times.size), "H": params.H}


@dataclass(frozen=True)
class DetQReport:
    value: float
    factorized: float
    condition_number: float
    ill_conditioned: bool


def det_q_factorized(params: HurstParams, s_times, t_times) -> DetQReport:
    """Determinant of the covariance of the increments B(t_i) - B(s_i).

    Computed twice: directly, and as the product of sequential conditional
    variances (the squared Cholesky diagonal); the two must agree. A
    condition number above 1e12 sets the warning flag instead of raising.
    """
    s = np.asarray(s_times, dtype=float)
    t = np.asarray(t_times, dtype=float)
    if s.shape != t.shape or s.ndim != 1:
        raise ValidationError("s_times and t_times must be equal-length 1-d")
    n = s.size
    if n > 6:
        raise ValidationError("det_q_factorized supports n <= 6")
    if np.any(s <= 0) or np.any(s >= t) or np.any(t > params.T):
        raise ValidationError("need 0 < s_i < t_i <= T for every pair")
    pts = np.concatenate([t, s])
    big = fbm_covariance(params, pts)
    # Cov(B(t_i)-B(s_i), B(t_j)-B(s_j)) by inclusion-exclusion on the blocks
    q = big[:n, :n] - big[:n, n:] - big[n:, :n] + big[n:, n:]
    cond = float(np.linalg.cond(q))
    direct = float(np.linalg.det(q))
    chol = _chol_with_jitter(q, "det_q_factorized")
    factorized = float(np.prod(np.diag(chol) ** 2))
    if not np.isclose(direct, factorized, rtol=1e-8, atol=1e-300):
        raise ValidationError(
            f"det factorization mismatch: {direct} vs {factorized}")
    flagged = cond > 1e12
    if flagged:
        warnings.warn(f"det_q_factorized: condition number {cond:.3e}",
                      RuntimeWarning, stacklevel=2)
    return DetQReport(value=direct, factorized=factorized,
                      condition_number=cond, ill_conditioned=flagged)
