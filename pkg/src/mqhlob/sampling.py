"""Geometric-with-spikes laws for sizes, offsets and unseen deep volumes.

A ``GeomWithSpikes`` is a mixture: with probability equal to the total spike
mass one of the spike values is returned (proportionally to its mass),
otherwise a plain geometric on ``{support_min, support_min+1, ...}`` is drawn.

The scalar draw is compiled so the simulation loop and the Python API share
the exact same code path and the same generator stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import optimize

from .core import DomainError, MQHError

REJECTION_BUDGET = 10_000
MAX_SPIKES = 5

KAPPA_SPIKES = ((1, 0.05), (10, 0.05), (100, 0.05))
DEEP_SPIKES = ((1, 0.03), (10, 0.03), (100, 0.03), (500, 0.03), (1000, 0.03))


class SamplingError(MQHError):
    pass


@dataclass(frozen=True)
class GeomWithSpikes:
    p: float
    support_min: int = 1
    spikes: tuple = ()

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise DomainError(f"geometric parameter must lie in (0, 1], got {self.p}")
        spikes = tuple((int(v), float(w)) for v, w in self.spikes)
        object.__setattr__(self, "spikes", spikes)
        if len(spikes) > MAX_SPIKES:
            raise DomainError(f"at most {MAX_SPIKES} spikes supported")
        for v, w in spikes:
            if v < self.support_min:
                raise DomainError(f"spike at {v} lies below the support minimum {self.support_min}")
            if w < 0:
                raise DomainError("spike masses must be non-negative")
        if self.spike_mass >= 1.0:
            raise DomainError("total spike mass must be < 1")

    @property
    def spike_mass(self) -> float:
        return sum(w for _, w in self.spikes)

    @property
    def mean(self) -> float:
        base = self.support_min + (1 - self.p) / self.p
        return (1 - self.spike_mass) * base + sum(v * w for v, w in self.spikes)

    def pmf(self, k):
        k = np.asarray(k, dtype=np.int64)
        out = np.zeros(k.shape, dtype=float)
        ok = k >= self.support_min
        j = (k - self.support_min)[ok]
        if self.p == 1.0:
            base = (j == 0).astype(float)
        else:
            base = self.p * np.exp(j * math.log1p(-self.p))
        out[ok] = (1 - self.spike_mass) * base
        for v, w in self.spikes:
            out[k == v] += w
        return out if out.ndim else float(out)

    def cdf(self, k):
        """P(X <= k)."""
        k = np.asarray(k, dtype=np.int64)
        j = k - self.support_min + 1
        base = np.where(j <= 0, 0.0, 1.0 - np.exp(np.maximum(j, 0) * math.log1p(-self.p))
                        if self.p < 1 else (j > 0).astype(float))
        out = (1 - self.spike_mass) * base
        for v, w in self.spikes:
            out = out + w * (k >= v)
        return out if np.ndim(out) else float(out)

    def mass_between(self, lo: int, hi: int | None) -> float:
        upper = 1.0 if hi is None else self.cdf(hi)
        return float(upper - self.cdf(lo - 1))

    def packed(self):
        vals = np.zeros(MAX_SPIKES, dtype=np.int64)
        cum = np.zeros(MAX_SPIKES)
        acc = 0.0
        for i, (v, w) in enumerate(self.spikes):
            acc += w
            vals[i] = v
            cum[i] = acc
        return float(self.p), int(self.support_min), len(self.spikes), vals, cum

    def sample(self, rng: np.random.Generator, size: int | None = None):
        p, smin, n, vals, cum = self.packed()
        if size is None:
            return int(_draw(p, smin, n, vals, cum, rng))
        return _draw_many(p, smin, n, vals, cum, rng, int(size))


DistributionSpec = GeomWithSpikes


@dataclass(frozen=True)
class DeepVolumeDist:
    per_level: GeomWithSpikes = field(default_factory=lambda: GeomWithSpikes(0.05, 1, DEEP_SPIKES))

    def mean(self, m_deep: int) -> float:
        return m_deep * self.per_level.mean


# -- compiled scalar draws -------------------------------------------------

@njit(cache=True)
def _draw(p, smin, nspk, vals, cum, rng):
    if nspk > 0:
        u = rng.random()
        for j in range(nspk):
            if u < cum[j]:
                return vals[j]
    if p >= 1.0:
        return smin
    v = rng.random()
    return smin + np.int64(math.floor(math.log1p(-v) / math.log1p(-p)))


@njit(cache=True)
def _draw_many(p, smin, nspk, vals, cum, rng, n):
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _draw(p, smin, nspk, vals, cum, rng)
    return out


@njit(cache=True)
def _draw_bounded(p, smin, nspk, vals, cum, rng, lo, hi):
    """Rejection draw in [lo, hi]; hi < 0 means unbounded. Returns -1 on budget exhaustion."""
    for _ in range(REJECTION_BUDGET):
        k = _draw(p, smin, nspk, vals, cum, rng)
        if k >= lo and (hi < 0 or k <= hi):
            return k
    return -1


@njit(cache=True)
def _deep_volume(p, smin, nspk, vals, cum, rng, m):
    tot = 0
    for _ in range(m):
        tot += _draw(p, smin, nspk, vals, cum, rng)
    return tot


# -- public API --------------------------------------------------------------

# below this admissible mass rejection is too slow and the range is sampled exactly
EXACT_BELOW = 1e-2


def _draw_exact(dist: GeomWithSpikes, lo: int, hi, rng) -> int:
    lo = max(lo, dist.support_min)
    if hi is not None:
        k = np.arange(lo, int(hi) + 1)
        w = dist.pmf(k)
        return int(rng.choice(k, p=w / w.sum()))
    # open range: the geometric tail above lo is a shifted geometric
    spikes = [(v, w) for v, w in dist.spikes if v >= lo]
    tail = (1 - dist.spike_mass) * (1 - dist.p) ** (lo - dist.support_min)
    u = rng.random() * (tail + sum(w for _, w in spikes))
    for v, w in spikes:
        if u < w:
            return int(v)
        u -= w
    return lo + int(rng.geometric(dist.p)) - 1


def sample_bounded(dist: GeomWithSpikes, lo: int, hi: int | None, rng: np.random.Generator) -> int:
    """Draw from ``dist`` conditioned on [lo, hi] by rejection.

    ``hi=None`` (or infinity) leaves the range open above.
    """
    if hi is not None and math.isinf(hi):
        hi = None
    if hi is not None and lo > hi:
        raise DomainError(f"empty range [{lo}, {hi}]")
    mass = dist.mass_between(lo, hi)
    if mass <= 0.0:
        raise SamplingError(f"no probability mass in [{lo}, {hi}]")
    if mass < EXACT_BELOW:
        return _draw_exact(dist, int(lo), hi, rng)
    k = _draw_bounded(*dist.packed(), rng, int(lo), -1 if hi is None else int(hi))
    if k < 0:
        raise SamplingError(f"rejection budget of {REJECTION_BUDGET} draws exhausted for [{lo}, {hi}]")
    return int(k)


def sample_deep_volume(dist: DeepVolumeDist, m_deep: int, rng: np.random.Generator) -> int:
    if m_deep < 1:
        raise DomainError(f"deep width must be >= 1, got {m_deep}")
    return int(_deep_volume(*dist.per_level.packed(), rng, int(m_deep)))


@dataclass(frozen=True)
class GeometricFit:
    p: float
    se: float
    n: int

    def ci(self, z: float = 1.96):
        return max(0.0, self.p - z * self.se), min(1.0, self.p + z * self.se)


def fit_geometric_mle(samples, support_min: int = 1) -> GeometricFit:
    """Closed-form MLE ``1 / (mean - support_min + 1)`` with observed-information SE."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DomainError("cannot fit an empty sample")
    if np.any(x < support_min):
        raise DomainError(f"samples must be >= {support_min}")
    n = x.size
    p = 1.0 / (x.mean() - support_min + 1.0)
    # observed information at the MLE is n / (p^2 (1-p))
    se = math.sqrt(p * p * (1 - p) / n)
    return GeometricFit(p, se, n)


def fit_truncated_geometric_mle(samples, upper, support_min: int = 1) -> GeometricFit:
    """Geometric MLE when each observation k_i was drawn conditioned on k_i <= upper_i.

    Draws in the simulator are truncated by rejection, so the plain 1/mean
    estimator is biased towards 1 whenever the bounds bite.
    """
    x = np.asarray(samples, dtype=float) - support_min
    u = np.asarray(upper, dtype=float) - support_min
    if x.size == 0:
        raise DomainError("cannot fit an empty sample")
    if np.any(x < 0) or np.any(x > u):
        raise DomainError("samples must lie inside their truncation bounds")
    n = x.size
    sx = x.sum()
    if sx == 0:
        return GeometricFit(1.0, 0.0, n)
    u1 = u + 1

    def nll(p):
        q = 1 - p
        return -(n * math.log(p) + sx * math.log(q) - np.sum(np.log1p(-q ** u1)))

    res = optimize.minimize_scalar(nll, bounds=(1e-9, 1 - 1e-12), method="bounded",
                                   options={"xatol": 1e-12})
    p = float(res.x)
    h = 1e-5 * max(p, 1e-3)
    lo, hi = max(p - h, 1e-10), min(p + h, 1 - 1e-13)
    curv = (nll(hi) - 2 * nll(p) + nll(lo)) / ((hi - p) * (p - lo))
    se = math.sqrt(1.0 / curv) if curv > 0 else float("nan")
    return GeometricFit(p, se, n)
