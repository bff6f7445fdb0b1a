"""Model parameters and shared value types."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field


class ValidationError(ValueError):
    """A configuration or parameter invariant is violated."""


class ToleranceError(RuntimeError):
    """A quadrature or certificate failed to reach its target tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class HurstParams:
    """Hurst index H, dimension d and time horizon T of the model.

    The two regime flags partition the parameter space the same way the
    existence results do: the local time itself exists iff H*d < 1, and the
    centered (renormalized) version exists iff H*d < 3/2, with the integral
    representation additionally requiring H < min(3/(2d), 2/(d+1)).
    """

    H: float
    d: int
    T: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.H < 1.0):
            raise ValidationError(f"H must be in (0,1), got {self.H}")
        if self.d < 1:
            raise ValidationError(f"d must be >= 1, got {self.d}")
        if self.T <= 0:
            raise ValidationError(f"T must be positive, got {self.T}")

    @property
    def hd(self) -> float:
        return self.H * self.d

    @property
    def subcritical(self) -> bool:
        """True when the un-renormalized local time exists (H*d < 1)."""
        return self.hd < 1.0

    @property
    def renormalizable(self) -> bool:
        """True when the integral representation applies (1 <= Hd < 3/2
        and H below min(3/(2d), 2/(d+1)))."""
        return (1.0 <= self.hd < 1.5) and self.H < min(
            1.5 / self.d, 2.0 / (self.d + 1)
        )


@dataclass(frozen=True)
class MollifierConfig:
    """Heat-kernel bandwidth and the decreasing schedule used in limit studies."""

    epsilon: float
    schedule: tuple[float, ...] = ()

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        sched = tuple(self.schedule)
        if any(e <= 0 for e in sched):
            raise ValidationError("epsilon schedule entries must be positive")
        if any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValidationError("epsilon schedule must be strictly decreasing")
        object.__setattr__(self, "schedule", sched)

    @staticmethod
    def geometric(params: HurstParams, n_levels: int = 11, ratio: float = 0.5):
        """Default schedule eps_k = ratio^k * T^(2H), matched to the natural
        variance scale of increments over [0, T]."""
        base = params.T ** (2 * params.H)
        sched = tuple(base * ratio**k for k in range(n_levels))
        return MollifierConfig(epsilon=sched[0], schedule=sched)


def fingerprint(payload: dict) -> str:
    """Stable hex fingerprint of a configuration dictionary.

    Keys are sorted so field order does not matter.
    """
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class EstimateRecord:
    """A mergeable Monte Carlo estimate.

    The record keeps its raw (index, count, sum, sum-of-squares) chunks so
    that merging is exact: pooled statistics are always reduced over the
    chunks in canonical index order with exact (fsum) accumulation, which
    makes merge commutative and associative to the bit.
    """

    fingerprint: str
    seed: int
    chunks: tuple[tuple[int, int, float, float], ...] = field(default_factory=tuple)

    @staticmethod
    def from_samples(samples, fingerprint: str, seed: int, index: int = 0):
        x = [float(v) for v in samples]
        return EstimateRecord(
            fingerprint=fingerprint,
            seed=seed,
            chunks=((index, len(x), math.fsum(x), math.fsum(v * v for v in x)),),
        )

    @property
    def n_samples(self) -> int:
        return sum(c[1] for c in self.chunks)

    def _reduced(self) -> tuple[int, float, float]:
        ordered = sorted(self.chunks)
        n = sum(c[1] for c in ordered)
        s = math.fsum(c[2] for c in ordered)
        ss = math.fsum(c[3] for c in ordered)
        return n, s, ss

    @property
    def value(self) -> float:
        n, s, _ = self._reduced()
        if n == 0:
            return math.nan
        return s / n

    @property
    def std_error(self) -> float:
        n, s, ss = self._reduced()
        if n < 2:
            return math.inf
        var = max(ss / n - (s / n) ** 2, 0.0) * n / (n - 1)
        return math.sqrt(var / n)

    def merge(self, other: "EstimateRecord") -> "EstimateRecord":
        if other.n_samples == 0:
            return self
        if self.n_samples == 0:
            return other
        if other.fingerprint != self.fingerprint:
            raise ValidationError(
                f"cannot merge estimates with fingerprints "
                f"{self.fingerprint!r} and {other.fingerprint!r}"
            )
        return EstimateRecord(
            fingerprint=self.fingerprint,
            seed=self.seed,
            chunks=tuple(sorted(set(self.chunks) | set(other.chunks))),
        )


def merge_partials(records: list[EstimateRecord]) -> EstimateRecord:
    """Pool partial estimates; identity on empty chunks, exact and order-free."""
    if not records:
        raise ValidationError("nothing to merge")
    out = records[0]
    for rec in records[1:]:
        out = out.merge(rec)
    return out
