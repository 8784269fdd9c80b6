"""Weight and degree distributions used by the anonymizers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import InvalidParameter

WEIGHT_TOLERANCE = 1e-9
_GUARD_STEP = 1e-6
_MAX_RESAMPLES = 100
_MAX_REJECTIONS = 10_000


def _clamp(w):
    return np.clip(w, 0.0, 1.0)


class WeightDistribution(Protocol):
    def sample(self, rng: np.random.Generator, anchors: np.ndarray) -> np.ndarray:
        """One weight per anchor; NaN anchors mean the edge has no original weight."""


@dataclass(frozen=True)
class Uniform01:
    def sample(self, rng: np.random.Generator, anchors: np.ndarray) -> np.ndarray:
        return rng.random(len(anchors))


@dataclass(frozen=True)
class EmpiricalKde:
    """Gaussian KDE over observed weights, clamped to [0, 1].

    An edge that carried a weight originally draws from the kernel centred on
    that weight; an edge without one draws from the full mixture.
    """

    samples: tuple[float, ...]
    bandwidth: float = 0.02

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise InvalidParameter("bandwidth must be positive")

    @classmethod
    def fit(cls, weights: Sequence[float], bandwidth: float = 0.02) -> EmpiricalKde:
        ws = tuple(float(w) for w in weights)
        if not ws:
            ws = (0.5,)
        return cls(ws, bandwidth)

    def sample(self, rng: np.random.Generator, anchors: np.ndarray) -> np.ndarray:
        anchors = np.asarray(anchors, dtype=np.float64)
        pool = np.asarray(self.samples, dtype=np.float64)
        centres = pool[rng.integers(0, len(pool), size=len(anchors))]
        centres = np.where(np.isnan(anchors), centres, anchors)
        return _clamp(centres + rng.normal(0.0, self.bandwidth, size=len(anchors)))


def sample_distinct_weights(
    dist: WeightDistribution, rng: np.random.Generator, anchors: np.ndarray
) -> np.ndarray:
    """Draw weights that differ from every non-NaN anchor by more than the tolerance.

    Colliding draws are redrawn up to a fixed number of times; anything still
    colliding is nudged deterministically away from its anchor.
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    out = np.asarray(dist.sample(rng, anchors), dtype=np.float64)
    has = ~np.isnan(anchors)
    for _ in range(_MAX_RESAMPLES):
        bad = has & (np.abs(out - anchors) <= WEIGHT_TOLERANCE)
        if not bad.any():
            return out
        out[bad] = dist.sample(rng, anchors[bad])
    bad = has & (np.abs(out - anchors) <= WEIGHT_TOLERANCE)
    if bad.any():
        up = anchors[bad] + _GUARD_STEP
        out[bad] = np.where(up <= 1.0, up, anchors[bad] - _GUARD_STEP)
    return out


class DegreeDistribution(Protocol):
    def draw(self, rng: np.random.Generator) -> int: ...


@dataclass(frozen=True)
class PointMass:
    value: int

    def draw(self, rng: np.random.Generator) -> int:
        return int(self.value)


@dataclass(frozen=True)
class NegativeBinomial:
    """Failures before the ``r``-th success with success probability ``p``."""

    r: float
    p: float

    def __post_init__(self):
        if not self.r > 0 or not 0 < self.p <= 1:
            raise InvalidParameter(f"bad negative binomial parameters r={self.r}, p={self.p}")

    @classmethod
    def fit(cls, samples: Sequence[int]) -> NegativeBinomial:
        """Method-of-moments fit; under-dispersed data falls back to a near-Poisson shape."""
        xs = np.asarray(samples, dtype=np.float64)
        mean = float(xs.mean()) if len(xs) else 1.0
        mean = max(mean, 1e-3)
        var = float(xs.var()) if len(xs) > 1 else mean
        if var > mean * (1 + 1e-9):
            return cls(mean * mean / (var - mean), mean / var)
        r = 1e3 * mean
        return cls(r, r / (r + mean))

    def draw(self, rng: np.random.Generator) -> int:
        return int(rng.negative_binomial(self.r, self.p))


@dataclass(frozen=True)
class TruncatedSupport:
    """Condition ``inner`` on ``1 <= d <= n`` by rejection."""

    inner: DegreeDistribution
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameter("truncation bound must be >= 1")

    def draw(self, rng: np.random.Generator) -> int:
        for _ in range(_MAX_REJECTIONS):
            d = self.inner.draw(rng)
            if 1 <= d <= self.n:
                return d
        # the inner law puts (almost) no mass on the support; fall back to its edge
        return int(min(max(self.inner.draw(rng), 1), self.n))


def fit_degree_distribution(degrees: Sequence[int], n: int) -> TruncatedSupport:
    return TruncatedSupport(NegativeBinomial.fit(degrees), max(int(n), 1))
