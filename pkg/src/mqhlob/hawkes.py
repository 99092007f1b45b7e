"""Non-linear multivariate Hawkes process with power-law kernels.

Intensity of type i at time t::

    lambda_i(t) = max(0, g_i(s) * (mu_i + sum_j sum_{t_k < t} phi_{j->i}(t - t_k)))

where g_i is the in-spread multiplier ``(delta (s-1) / alpha)^beta`` for the
two in-spread types and 1 otherwise. Kernels are ``a (1 + c t)^(-b)`` cut at a
per-kernel horizon. Simulation is Ogata thinning; the dominating rate only
keeps the positive kernels, which decay monotonically between events.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import MIRROR, N_TYPES, DomainError, EventType, MQHError

DEFAULT_TRUNCATION = 1000.0
RATE_OVERFLOW = 1e9

ST_OK, ST_END, ST_OVERFLOW = 0, 1, 2


class InfiniteNormError(MQHError, ValueError):
    pass


class SimulationError(MQHError):
    pass


@dataclass(frozen=True)
class PowerLawKernel:
    a: float
    b: float
    c: float
    truncation_horizon: float = DEFAULT_TRUNCATION

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        v = self.a * (1.0 + self.c * t) ** (-self.b)
        return np.where((t >= 0) & (t <= self.truncation_horizon), v, 0.0)

    def integral(self, t0: float, t1: float) -> float:
        """Integral of the (truncated) kernel over [t0, t1]."""
        lo, hi = max(t0, 0.0), min(t1, self.truncation_horizon)
        if hi <= lo or self.a == 0.0:
            return 0.0
        if self.b == 1.0:
            return self.a / self.c * (math.log1p(self.c * hi) - math.log1p(self.c * lo))
        e = 1.0 - self.b
        return self.a / (self.c * e) * ((1 + self.c * hi) ** e - (1 + self.c * lo) ** e)

    def norm(self, truncated: bool = True) -> float:
        """Signed integral; ``truncated=False`` gives the untruncated a/(c(b-1))."""
        if self.a == 0.0:
            return 0.0
        if self.b <= 1.0:
            raise InfiniteNormError(f"kernel with b={self.b} <= 1 has an infinite norm")
        full = self.a / (self.c * (self.b - 1.0))
        if not truncated or math.isinf(self.truncation_horizon):
            return full
        return full * (1.0 - (1.0 + self.c * self.truncation_horizon) ** (1.0 - self.b))

    def tail_mass(self) -> float:
        """Fraction of the untruncated norm lost to the cutoff."""
        if self.a == 0.0 or math.isinf(self.truncation_horizon):
            return 0.0
        return (1.0 + self.c * self.truncation_horizon) ** (1.0 - self.b)

    @staticmethod
    def horizon_for_tail(b: float, c: float, tail: float = 1e-3) -> float:
        """Smallest cutoff whose lost fraction of the norm is ``tail``."""
        return (tail ** (1.0 / (1.0 - b)) - 1.0) / c


@dataclass(eq=False)
class HawkesSpec:
    """Exogenous rates and kernel parameters. Matrices are indexed [target, source]."""
    mu: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    horizon: np.ndarray
    is_alpha: float = 1.0
    is_beta: float = 1.0
    tick_size: float = 0.01
    symmetric: bool = False
    is_types: tuple = field(default=None)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        d = self.mu.size
        for name in ("a", "b", "c", "horizon"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (d, d)).copy()
            setattr(self, name, arr)
        if self.is_types is None:
            self.is_types = (int(EventType.LO_ask_IS), int(EventType.LO_bid_IS)) if d == N_TYPES else ()
        self.is_types = tuple(int(i) for i in self.is_types)
        if np.any(self.mu < 0):
            raise DomainError("exogenous intensities must be non-negative")
        if not (self.is_alpha > 0 and self.is_beta > 0 and self.tick_size > 0):
            raise DomainError("in-spread alpha, beta and tick size must be positive")
        nz = self.a != 0
        if np.any(self.c[nz] <= 0) or np.any(self.horizon[nz] <= 0):
            raise DomainError("kernel time scales and horizons must be positive")
        if self.symmetric and d == N_TYPES and not self.is_mirror_symmetric():
            raise DomainError("symmetric flag set but ask and bid parameters differ")

    @property
    def dim(self) -> int:
        return self.mu.size

    @classmethod
    def zeros(cls, mu, **kw) -> "HawkesSpec":
        mu = np.asarray(mu, dtype=float)
        d = mu.size
        return cls(mu=mu, a=np.zeros((d, d)), b=np.full((d, d), 2.0), c=np.ones((d, d)),
                   horizon=np.full((d, d), DEFAULT_TRUNCATION), **kw)

    def kernel(self, target: int, source: int) -> PowerLawKernel:
        return PowerLawKernel(self.a[target, source], self.b[target, source],
                              self.c[target, source], self.horizon[target, source])

    @property
    def kernels(self):
        return [[self.kernel(i, j) for j in range(self.dim)] for i in range(self.dim)]

    def is_mirror_symmetric(self, tol: float = 1e-12) -> bool:
        if self.dim != N_TYPES:
            return False
        m = MIRROR
        ok = np.allclose(self.mu, self.mu[m], atol=tol)
        for arr in (self.a, self.b, self.c, self.horizon):
            ok &= np.allclose(arr, arr[np.ix_(m, m)], atol=tol)
        return bool(ok)

    def multiplier(self, spread_ticks: int) -> np.ndarray:
        g = np.ones(self.dim)
        f = is_multiplier(spread_ticks, self.tick_size, self.is_alpha, self.is_beta)
        for i in self.is_types:
            g[i] = f
        return g

    def tables(self):
        """Flat per-source adjacency lists of the non-null kernels, for the compiled loop."""
        d = self.dim
        ptr = np.zeros(d + 1, dtype=np.int64)
        idx, pa, pb, pc, ph = [], [], [], [], []
        for j in range(d):
            for i in range(d):
                if self.a[i, j] != 0.0:
                    idx.append(i)
                    pa.append(self.a[i, j])
                    pb.append(self.b[i, j])
                    pc.append(self.c[i, j])
                    ph.append(self.horizon[i, j])
            ptr[j + 1] = len(idx)
        hmax = float(max(ph)) if ph else 0.0
        return (ptr, np.array(idx, dtype=np.int64), np.array(pa, dtype=float), np.array(pb, dtype=float),
                np.array(pc, dtype=float), np.array(ph, dtype=float), hmax)


def is_multiplier(spread_ticks: int, tick_size: float, alpha: float, beta: float) -> float:
    if spread_ticks < 1:
        raise DomainError("spread must be >= 1 tick")
    return (tick_size * (spread_ticks - 1) / alpha) ** beta


class EventHistory:
    """Per-type jump times with a windowed lookup.

    Only events younger than the longest kernel horizon can contribute, so each
    type keeps a start pointer into its (sorted) list that is advanced lazily.
    """

    def __init__(self, dim: int = N_TYPES):
        self.times: list[list[float]] = [[] for _ in range(dim)]
        self._start = [0] * dim
        self.last = -math.inf

    def add(self, t: float, k: int):
        if t < self.last:
            raise DomainError(f"event at {t} precedes the last event at {self.last}")
        tk = self.times[int(k)]
        if tk and t <= tk[-1]:
            raise DomainError("timestamps must be strictly increasing per type")
        tk.append(float(t))
        self.last = float(t)

    def window(self, k: int, t: float, hmax: float) -> np.ndarray:
        tk = self.times[k]
        s = self._start[k]
        while s < len(tk) and t - tk[s] > hmax:
            s += 1
        self._start[k] = s
        return np.asarray(tk[s:], dtype=float)

    def excitation(self, spec: HawkesSpec, t: float, positive_only: bool = False) -> np.ndarray:
        hmax = float(spec.horizon[spec.a != 0].max()) if np.any(spec.a != 0) else 0.0
        out = np.zeros(spec.dim)
        for j in range(spec.dim):
            if not self.times[j]:
                continue
            w = self.window(j, t, hmax)
            w = w[w < t]
            if w.size == 0:
                continue
            dt = t - w
            for i in range(spec.dim):
                a = spec.a[i, j]
                if a == 0.0 or (positive_only and a < 0):
                    continue
                live = dt <= spec.horizon[i, j]
                out[i] += a * np.sum((1.0 + spec.c[i, j] * dt[live]) ** (-spec.b[i, j]))
        return out


def intensity(spec: HawkesSpec, history: EventHistory, spread_ticks: int, t: float) -> np.ndarray:
    if t < history.last:
        raise DomainError(f"intensity requested at {t}, before the last event at {history.last}")
    g = spec.multiplier(spread_ticks)
    return np.maximum(0.0, g * (spec.mu + history.excitation(spec, t)))


@dataclass(frozen=True)
class NormReport:
    norms: np.ndarray       # |integral|, [target, source]
    signed: np.ndarray
    spectral_radius: float
    stable: bool
    max_tail_mass: float


def kernel_norm_matrix(spec: HawkesSpec, spread_ticks: int | None = None) -> NormReport:
    """Kernel norms with truncation, and the spectral radius of the signed matrix.

    With ``spread_ticks`` the in-spread rows are scaled by the multiplier at
    that spread, which is how stability of the coupled model is diagnosed.
    """
    d = spec.dim
    signed = np.zeros((d, d))
    tail = 0.0
    for i in range(d):
        for j in range(d):
            if spec.a[i, j] == 0.0:
                continue
            k = spec.kernel(i, j)
            if k.b <= 1.0:
                raise InfiniteNormError(
                    f"kernel {_label(j, d)} -> {_label(i, d)} has b={k.b} <= 1 (infinite norm)")
            signed[i, j] = k.norm()
            tail = max(tail, k.tail_mass())
    if spread_ticks is not None:
        signed = signed * spec.multiplier(spread_ticks)[:, None]
    radius = float(np.max(np.abs(np.linalg.eigvals(signed)))) if d else 0.0
    return NormReport(np.abs(signed), signed, radius, radius < 1.0, tail)


def _label(k: int, d: int) -> str:
    return EventType(k).name if d == N_TYPES else str(k)


def check_stability(spec: HawkesSpec, spread_ticks: int | None = None) -> NormReport:
    rep = kernel_norm_matrix(spec, spread_ticks)
    if not rep.stable:
        warnings.warn(f"kernel norm matrix has spectral radius {rep.spectral_radius:.3f} >= 1",
                      RuntimeWarning, stacklevel=3)
    return rep


# -- compiled thinning -------------------------------------------------------

@njit(cache=True)
def _excite(t, buf_t, buf_k, head, tail, mask, ptr, idx, pa, pb, pc, ph, full, pos):
    full[:] = 0.0
    pos[:] = 0.0
    for e in range(head, tail):
        te = buf_t[e & mask]
        dt = t - te
        if dt < 0.0:
            continue
        j = buf_k[e & mask]
        for r in range(ptr[j], ptr[j + 1]):
            if dt <= ph[r]:
                v = pa[r] * math.exp(-pb[r] * math.log1p(pc[r] * dt))
                i = idx[r]
                full[i] += v
                if v > 0.0:
                    pos[i] += v


@njit(cache=True)
def _trim(t, buf_t, head, tail, mask, hmax):
    while head < tail and t - buf_t[head & mask] > hmax:
        head += 1
    return head


@njit(cache=True)
def _push(t, k, buf_t, buf_k, head, tail):
    """Append to the ring buffer, doubling it when full. Returns (buf_t, buf_k, head, tail)."""
    cap = buf_t.size
    if tail - head >= cap:
        nt = np.empty(2 * cap)
        nk = np.empty(2 * cap, dtype=np.int64)
        m = cap - 1
        for e in range(head, tail):
            nt[e - head] = buf_t[e & m]
            nk[e - head] = buf_k[e & m]
        tail = tail - head
        head = 0
        buf_t, buf_k = nt, nk
    m = buf_t.size - 1
    buf_t[tail & m] = t
    buf_k[tail & m] = k
    return buf_t, buf_k, head, tail + 1


@njit(cache=True)
def _next_event(t, horizon, mu, mult, buf_t, buf_k, head, tail, ptr, idx, pa, pb, pc, ph, hmax,
                full, pos, rng):
    """Thinning step from time t. Returns (t_next, type, status, head)."""
    d = mu.size
    mask = buf_t.size - 1
    head = _trim(t, buf_t, head, tail, mask, hmax)
    _excite(t, buf_t, buf_k, head, tail, mask, ptr, idx, pa, pb, pc, ph, full, pos)
    while True:
        bound = 0.0
        for i in range(d):
            x = mu[i] + pos[i]
            if x > 0.0:
                bound += mult[i] * x
        if bound <= 0.0:
            return horizon, -1, ST_END, head
        if bound > RATE_OVERFLOW:
            return t, -1, ST_OVERFLOW, head
        t = t - math.log(1.0 - rng.random()) / bound
        if t > horizon:
            return horizon, -1, ST_END, head
        head = _trim(t, buf_t, head, tail, mask, hmax)
        _excite(t, buf_t, buf_k, head, tail, mask, ptr, idx, pa, pb, pc, ph, full, pos)
        total = 0.0
        for i in range(d):
            x = mult[i] * (mu[i] + full[i])
            if x > 0.0:
                total += x
        u = rng.random() * bound
        if u < total:
            acc = 0.0
            last = -1
            for i in range(d):
                x = mult[i] * (mu[i] + full[i])
                if x > 0.0:
                    acc += x
                    last = i
                    if u < acc:
                        return t, i, ST_OK, head
            return t, last, ST_OK, head


@njit(cache=True)
def _simulate_const(horizon, mu, mult, ptr, idx, pa, pb, pc, ph, hmax, rng, max_events):
    d = mu.size
    buf_t = np.empty(1024)
    buf_k = np.empty(1024, dtype=np.int64)
    head = 0
    tail = 0
    full = np.zeros(d)
    pos = np.zeros(d)
    out_t = np.empty(1024)
    out_k = np.empty(1024, dtype=np.int64)
    n = 0
    t = 0.0
    status = ST_OK
    while n < max_events:
        t, k, status, head = _next_event(t, horizon, mu, mult, buf_t, buf_k, head, tail,
                                         ptr, idx, pa, pb, pc, ph, hmax, full, pos, rng)
        if status != ST_OK:
            break
        buf_t, buf_k, head, tail = _push(t, k, buf_t, buf_k, head, tail)
        if n == out_t.size:
            nt = np.empty(2 * n)
            nk = np.empty(2 * n, dtype=np.int64)
            nt[:n] = out_t
            nk[:n] = out_k
            out_t, out_k = nt, nk
        out_t[n] = t
        out_k[n] = k
        n += 1
    return out_t[:n], out_k[:n], status


def simulate(spec: HawkesSpec, horizon: float, seed=None, spread_query=None,
             max_events: int = 50_000_000):
    """Simulate on [0, horizon] by thinning.

    ``spread_query(t, history_times, history_types)`` is called after every
    accepted event and must return the spread used for the in-spread
    multiplier until the next event. Without it the multiplier is 1, so the
    process is a plain non-linear Hawkes process.

    Returns ``(times, types)`` as numpy arrays.
    """
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    check_stability(spec)
    ptr, idx, pa, pb, pc, ph, hmax = spec.tables()
    if spread_query is None:
        ts, ks, status = _simulate_const(float(horizon), spec.mu, np.ones(spec.dim), ptr, idx, pa, pb,
                                         pc, ph, hmax, rng, int(max_events))
        if status == ST_OVERFLOW:
            raise SimulationError("dominating rate overflow")
        return ts, ks
    buf_t = np.empty(1024)
    buf_k = np.empty(1024, dtype=np.int64)
    head = tail = 0
    full, pos = np.zeros(spec.dim), np.zeros(spec.dim)
    times, types = [], []
    t = 0.0
    mult = spec.multiplier(int(spread_query(0.0, times, types)))
    while len(times) < max_events:
        t, k, status, head = _next_event(t, float(horizon), spec.mu, mult, buf_t, buf_k, head, tail,
                                         ptr, idx, pa, pb, pc, ph, hmax, full, pos, rng)
        if status == ST_OVERFLOW:
            raise SimulationError("dominating rate overflow")
        if status == ST_END:
            break
        buf_t, buf_k, head, tail = _push(t, k, buf_t, buf_k, head, tail)
        times.append(t)
        types.append(k)
        mult = spec.multiplier(int(spread_query(t, times, types)))
    return np.asarray(times), np.asarray(types, dtype=np.int64)


def compensator(spec: HawkesSpec, times, types, spread=None, grid: int = 16) -> np.ndarray:
    """Integrated intensity of every type over each inter-event gap.

    Row r of the ``(n_events, d)`` result integrates over (t_{r-1}, t_r], with
    t_{-1} = 0. ``spread`` optionally gives the spread prevailing on each gap.
    Rows whose kernels are all non-negative are integrated in closed form
    (the clip is inactive there); the others use Gauss-Legendre nodes on the
    clipped integrand.
    """
    times = np.asarray(times, dtype=float)
    types = np.asarray(types, dtype=np.int64)
    d = spec.dim
    n = times.size
    out = np.zeros((n, d))
    analytic = np.all(spec.a >= 0, axis=1)
    xg, wg = np.polynomial.legendre.leggauss(grid)
    hist = EventHistory(d)
    hmax = float(spec.horizon[spec.a != 0].max()) if np.any(spec.a != 0) else 0.0
    prev = 0.0
    for r in range(n):
        t1 = times[r]
        g = spec.multiplier(int(spread[r])) if spread is not None else np.ones(d)
        if t1 > prev:
            acc = spec.mu * (t1 - prev)
            windows = [hist.window(j, prev, hmax) for j in range(d)]
            for i in np.flatnonzero(analytic):
                for j in range(d):
                    if spec.a[i, j] != 0.0 and windows[j].size:
                        acc[i] += _kernel_integral(spec, i, j, prev - windows[j], t1 - windows[j])
            out[r, analytic] = (g * acc)[analytic]
            if not np.all(analytic):
                half, mid = 0.5 * (t1 - prev), 0.5 * (t1 + prev)
                vals = np.zeros(d)
                for x, w in zip(xg, wg):
                    tt = mid + half * x
                    vals += w * np.maximum(0.0, g * (spec.mu + _window_excitation(spec, windows, tt)))
                out[r, ~analytic] = (half * vals)[~analytic]
        hist.add(t1, types[r])
        prev = t1
    return out


def _kernel_integral(spec, i, j, lo, hi):
    a, b, c, h = spec.a[i, j], spec.b[i, j], spec.c[i, j], spec.horizon[i, j]
    lo = np.maximum(lo, 0.0)
    hi = np.minimum(hi, h)
    ok = hi > lo
    if not np.any(ok):
        return 0.0
    lo, hi = lo[ok], hi[ok]
    if b == 1.0:
        return float(a / c * np.sum(np.log1p(c * hi) - np.log1p(c * lo)))
    e = 1.0 - b
    return float(a / (c * e) * np.sum((1 + c * hi) ** e - (1 + c * lo) ** e))


def _window_excitation(spec, windows, t):
    out = np.zeros(spec.dim)
    for j, w in enumerate(windows):
        if w.size == 0:
            continue
        dt = t - w[w < t]
        for i in range(spec.dim):
            if spec.a[i, j] != 0.0:
                live = dt[dt <= spec.horizon[i, j]]
                out[i] += spec.a[i, j] * np.sum((1.0 + spec.c[i, j] * live) ** (-spec.b[i, j]))
    return out


def rescaled_interarrivals(spec: HawkesSpec, times, types, spread=None) -> list[np.ndarray]:
    """Per type, compensator increments between its consecutive events (Exp(1) under the model)."""
    types = np.asarray(types, dtype=np.int64)
    comp = compensator(spec, times, types, spread)
    cum = np.cumsum(comp, axis=0)
    res = []
    for i in range(spec.dim):
        at = np.flatnonzero(types == i)
        res.append(np.diff(cum[at, i]) if at.size > 1 else np.empty(0))
    return res
