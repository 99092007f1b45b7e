"""Stylized-fact metrics over event logs and book snapshots.

Everything here works the same on simulated logs and on logs built from
classified vendor data. Time weighting always uses the duration each state
was in force: row ``r`` of a log holds from its own time to the next row's.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DomainError, EventType
from .eventlog import INIT_TYPE, EventLog


class RegimeError(DomainError):
    pass


# -- time weighted series -------------------------------------------------------

@dataclass(frozen=True)
class WeightedSeries:
    """Piecewise-constant path: ``values[i]`` holds on [breakpoints[i], breakpoints[i+1]).

    The last segment is closed at ``total_duration``, which is an end time on
    the same clock as the breakpoints. Repeated breakpoints are allowed and
    simply carry zero weight.
    """
    breakpoints: np.ndarray
    values: np.ndarray
    total_duration: float

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape or t.ndim != 1:
            raise DomainError("breakpoints and values must be 1-d arrays of equal length")
        if t.size and (np.any(np.diff(t) < 0) or self.total_duration < t[-1]):
            raise DomainError("breakpoints must be non-decreasing and end before total_duration")

    @property
    def durations(self) -> np.ndarray:
        if self.breakpoints.size == 0:
            return np.zeros(0)
        return np.diff(np.append(self.breakpoints, float(self.total_duration)))

    @classmethod
    def from_log(cls, log: EventLog, values) -> "WeightedSeries":
        return cls(log["time"], values, log.duration)


def time_weighted_mean(series: WeightedSeries) -> float:
    w = series.durations
    if w.size == 0 or w.sum() <= 0:
        raise DomainError("time-weighted mean of an empty series")
    return float(np.dot(series.values, w) / w.sum())


def _weighted_moments(x, w):
    x = np.asarray(x, dtype=float)
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    if x.size == 0 or w.sum() <= 0:
        raise DomainError("empty sample")
    m = float(np.dot(x, w) / w.sum())
    var = float(np.dot((x - m) ** 2, w) / w.sum())
    return m, var


def index_of_dispersion(data, weights=None) -> float:
    """Variance over mean. ``data`` may be samples, a value array with ``weights`` or a ``WeightedSeries``."""
    if isinstance(data, WeightedSeries):
        data, weights = data.values, data.durations
    m, var = _weighted_moments(data, weights)
    if m == 0:
        raise DomainError("index of dispersion undefined for zero mean")
    return var / m


def spread_series(log: EventLog) -> WeightedSeries:
    return WeightedSeries.from_log(log, log.spread)


def spread_distribution(log: EventLog):
    """(spread values, time-weighted probabilities)."""
    s = spread_series(log)
    vals, inv = np.unique(s.values.astype(np.int64), return_inverse=True)
    w = np.bincount(inv, weights=s.durations)
    return vals, w / w.sum()


# -- trade induced mid moves ------------------------------------------------------

@dataclass(frozen=True)
class TradeMidChanges:
    changes: np.ndarray  # |dmid| in currency for every market order, zeros included
    mean: float  # over the orders that moved the mid
    n_orders: int
    tick_size: float

    @property
    def empty(self) -> bool:
        return self.n_orders == 0

    def histogram(self):
        """(move in half ticks, count) over the non-zero moves."""
        half = np.rint(self.changes[self.changes > 0] * 2 / self.tick_size).astype(np.int64)
        vals, counts = np.unique(half, return_counts=True)
        return vals, counts


NO_TRADES = TradeMidChanges(np.zeros(0), float("nan"), 0, 0.01)


def trade_mid_changes(log: EventLog) -> TradeMidChanges:
    """Mid-price moves caused by market orders only.

    Cancels and in-spread orders are left out, so the metric does not depend
    on the spread they close or open. The mean is over orders that moved the
    mid, matching a distribution whose smallest value is half a tick.
    """
    typ = log["type"]
    rows = np.flatnonzero(np.isin(typ, (EventType.MO_ask, EventType.MO_bid)))
    rows = rows[rows > 0]
    if rows.size == 0:
        return NO_TRADES
    mid2 = log.mid_half_ticks
    d = np.abs(mid2[rows] - mid2[rows - 1]) * log.tick_size / 2
    nz = d[d > 0]
    return TradeMidChanges(d, float(nz.mean()) if nz.size else float("nan"), int(rows.size), log.tick_size)


def mo_to_best_ratio(log: EventLog, bins=None):
    """Market order size over the same-side top volume just before it. Returns (ratios, density, edges)."""
    typ = log["type"]
    rows = np.flatnonzero(np.isin(typ, (EventType.MO_ask, EventType.MO_bid)))
    rows = rows[rows > 0]
    if rows.size == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0)
    q = np.where(typ[rows] == EventType.MO_ask, log["q_top_ask"][rows - 1], log["q_top_bid"][rows - 1])
    ok = q > 0
    r = log["size"][rows][ok] / q[ok]
    if bins is None:
        bins = np.linspace(0, max(2.0, float(np.ceil(r.max()))), 41)
    dens, edges = np.histogram(r, bins=bins, density=True)
    return r, dens, edges


# -- book frames, shape and sparsity -------------------------------------------------

@dataclass(frozen=True)
class BookFrames:
    """A time-weighted sequence of book pictures.

    ``dist2[n, side, k]`` is the distance of level ``k`` from the mid in half
    ticks and ``vol`` its volume (0 for an absent level). Side 0 is ask,
    1 is bid; levels are best first.
    """
    times: np.ndarray
    end: float
    dist2: np.ndarray
    vol: np.ndarray
    resolution: str = "level"

    def __post_init__(self):
        if self.dist2.shape != self.vol.shape or self.dist2.ndim != 3 or self.dist2.shape[1] != 2:
            raise DomainError("frames need matching (n, 2, K) distance and volume arrays")

    def __len__(self):
        return self.times.size

    @property
    def weights(self) -> np.ndarray:
        return np.diff(np.append(self.times, self.end))

    @property
    def bins(self) -> np.ndarray:
        # whole ticks from the mid; half-tick distances land in bin 1
        return (self.dist2 + 1) // 2

    @classmethod
    def from_log(cls, log: EventLog, rows=None) -> "BookFrames":
        """Meta-queue pictures: each meta-queue's volume sits at its best level."""
        c = log.columns
        s = log.spread
        d = np.empty((len(log), 2, 2), dtype=np.int64)
        v = np.empty((len(log), 2, 2), dtype=np.int64)
        for j, side in enumerate(("ask", "bid")):
            d[:, j, 0] = s
            d[:, j, 1] = s + 2 * c["m_top_" + side]
            v[:, j, 0] = c["q_top_" + side]
            v[:, j, 1] = c["q_deep_" + side]
        t = log["time"]
        if rows is not None:
            t, d, v = t[rows], d[rows], v[rows]
        return cls(np.asarray(t, dtype=float), log.duration, d, v, "meta-queue")

    @classmethod
    def from_snapshots(cls, snapshots, end: float | None = None) -> "BookFrames":
        """From the simulator's snapshot dicts, or from dicts with an explicit level list.

        A generic snapshot looks like ``{"time": t, "levels": [[side, dist2, volume], ...]}``
        with side "ask"/"bid" and the distance from the mid in half ticks.
        """
        snaps = list(snapshots)
        if not snaps:
            raise DomainError("no snapshots")
        times = np.array([float(s["time"]) for s in snaps])
        if "levels" in snaps[0]:
            k = max(max(sum(1 for lv in s["levels"] if lv[0] == side) for side in ("ask", "bid")) for s in snaps)
            d = np.zeros((len(snaps), 2, max(k, 1)), dtype=np.int64)
            v = np.zeros_like(d)
            res = "level"
            for n, s in enumerate(snaps):
                for j, side in enumerate(("ask", "bid")):
                    lv = sorted((int(x[1]), int(x[2])) for x in s["levels"] if x[0] == side)
                    for i, (dd, vv) in enumerate(lv):
                        d[n, j, i], v[n, j, i] = dd, vv
        else:
            d = np.zeros((len(snaps), 2, 2), dtype=np.int64)
            v = np.zeros_like(d)
            res = "meta-queue"
            for n, s in enumerate(snaps):
                for j, side in enumerate(("ask", "bid")):
                    sd = s[side]
                    d[n, j] = (s["spread"], s["spread"] + 2 * sd["m_top"])
                    v[n, j] = (sd["q_top"], sd["q_deep"])
        if end is None:
            end = times[-1] + (times[-1] - times[-2] if len(times) > 1 else 1.0)
        return cls(times, float(end), d, v, res)

    @classmethod
    def from_lobster(cls, books, tick_size: float = 0.01) -> "BookFrames":
        """``books`` is a list of (time, BookSnapshotRow) at full level resolution."""
        from .io import _tick_units
        unit = _tick_units(tick_size)
        k = books[0][1].depth
        n = len(books)
        d = np.zeros((n, 2, k), dtype=np.int64)
        v = np.zeros((n, 2, k), dtype=np.int64)
        keep = np.ones(n, dtype=bool)
        for i, (_, b) in enumerate(books):
            a, bd = b.levels("ask"), b.levels("bid")
            if not a or not bd:
                keep[i] = False
                continue
            mid2 = a[0][0] + bd[0][0]
            for j, lv in enumerate((a, bd)):
                for r, (p, sz) in enumerate(lv):
                    d[i, j, r] = abs(2 * p - mid2) // unit
                    v[i, j, r] = sz
        times = np.array([t for t, _ in books])
        end = times[-1]
        return cls(times[keep], float(end), d[keep], v[keep])


@dataclass(frozen=True)
class ShapeProfile:
    offsets: np.ndarray  # whole ticks from the mid, starting at 1
    mass: np.ndarray
    side: str = "both"
    resolution: str = "level"  # "meta-queue" when built from meta-queue pictures

    def __post_init__(self):
        if abs(self.mass.sum() - 1.0) > 1e-9:
            raise DomainError("shape mass must sum to one")

    @property
    def argmax(self) -> int:
        return int(self.offsets[int(np.argmax(self.mass))])

    def quantile(self, p: float) -> int:
        cdf = np.cumsum(self.mass)
        return int(self.offsets[min(int(np.searchsorted(cdf, p - 1e-12)), len(cdf) - 1)])

    @property
    def quartiles(self):
        return tuple(self.quantile(p) for p in (0.25, 0.5, 0.75))

    def dense(self, size: int | None = None) -> np.ndarray:
        """Mass on offsets 1..size as a plain vector."""
        size = int(self.offsets.max()) if size is None else size
        out = np.zeros(size)
        m = self.offsets <= size
        out[self.offsets[m] - 1] = self.mass[m]
        return out


def _frames(source) -> BookFrames:
    if isinstance(source, BookFrames):
        return source
    if isinstance(source, EventLog):
        return BookFrames.from_log(source)
    return BookFrames.from_snapshots(source)


def _row_shapes(fr: BookFrames, side: str):
    """Per-frame (bin, normalised mass) arrays flattened over the chosen sides, plus a mask of usable frames."""
    sl = {"both": slice(0, 2), "ask": slice(0, 1), "bid": slice(1, 2)}[side]
    b = fr.bins[:, sl, :].reshape(len(fr), -1)
    v = fr.vol[:, sl, :].reshape(len(fr), -1).astype(float)
    tot = v.sum(axis=1)
    ok = tot > 0
    q = np.zeros_like(v)
    q[ok] = v[ok] / tot[ok, None]
    return b, q, ok


def average_shape(source, side: str = "both") -> ShapeProfile:
    """Time-weighted mean of the normalised volume-vs-distance profile."""
    fr = _frames(source)
    b, q, ok = _row_shapes(fr, side)
    w = fr.weights * ok
    if w.sum() <= 0:
        raise DomainError("no frame with positive volume and duration")
    if np.any(b[q > 0] < 1):
        raise DomainError("volume found at the mid itself")
    nb = int(b.max()) + 1
    acc = np.bincount(b.ravel(), weights=(q * w[:, None]).ravel(), minlength=nb)
    acc = acc / acc.sum()
    off = np.flatnonzero(acc > 0)
    return ShapeProfile(off.astype(np.int64), acc[off], side, fr.resolution)


@dataclass(frozen=True)
class SparsityReport:
    empty_levels: dict  # rank -> (values, time-weighted probabilities)
    wasserstein_mean: float
    wasserstein_var: float
    distances: np.ndarray = field(repr=False)


def _l1_to_mean(b, q, qbar):
    """Per-frame sum over x of |qbar(x) - q(x)| without building dense rows.

    Entries of one frame that share a bin are merged first.
    """
    n, k = b.shape
    tot = np.zeros_like(q)
    first = np.ones((n, k), dtype=bool)
    for j in range(k):
        same = b == b[:, j:j + 1]
        tot[:, j] = (q * same).sum(axis=1)
        if j:
            first[:, j] = ~np.any(same[:, :j], axis=1)
    qb = qbar[np.clip(b, 0, qbar.size - 1)] * (b < qbar.size)
    contrib = np.where(first, np.abs(qb - tot) - qb, 0.0)
    return 1.0 + contrib.sum(axis=1)


def sparsity_metrics(source, side: str = "both") -> SparsityReport:
    """Empty levels between successive quotes and the time-weighted L1 distance to the average shape.

    The distance is named after the earth mover's distance but, as in the
    metric's usual statement, it is the plain L1 sum with unit bin width, so
    it lies in [0, 2].
    """
    fr = _frames(source)
    shape = average_shape(fr, side)
    qbar = shape.dense(int(fr.bins.max()) + 1)
    qbar = np.concatenate([[0.0], qbar])  # index by bin directly
    b, q, ok = _row_shapes(fr, side)
    w = fr.weights * ok
    dist = _l1_to_mean(b, q, qbar)
    m = float(np.dot(dist, w) / w.sum())
    var = float(np.dot((dist - m) ** 2, w) / w.sum())
    # empty levels between level r and r+1, pooled over sides
    gaps = {}
    sides = {"both": (0, 1), "ask": (0,), "bid": (1,)}[side]
    k = fr.dist2.shape[2]
    for r in range(k - 1):
        vals, wts = [], []
        for j in sides:
            present = (fr.vol[:, j, r] > 0) & (fr.vol[:, j, r + 1] > 0)
            g = (fr.dist2[:, j, r + 1] - fr.dist2[:, j, r]) // 2 - 1
            vals.append(g[present])
            wts.append(w[present])
        vals, wts = np.concatenate(vals), np.concatenate(wts)
        if wts.sum() > 0:
            u, inv = np.unique(vals, return_inverse=True)
            p = np.bincount(inv, weights=wts)
            gaps[r + 1] = (u, p / p.sum())
    return SparsityReport(gaps, m, var, dist)


def wasserstein_sparsity(qbar, q) -> float:
    """L1 distance between two probability vectors on a common unit-width grid."""
    qbar, q = np.asarray(qbar, dtype=float), np.asarray(q, dtype=float)
    n = max(qbar.size, q.size)
    return float(np.abs(np.pad(qbar, (0, n - qbar.size)) - np.pad(q, (0, n - q.size))).sum())


# -- leverage ----------------------------------------------------------------------

LINEAR_LIMIT = 10


def leverage_edges(shape: ShapeProfile | None = None, upper: float | None = None, n_log: int = 6) -> np.ndarray:
    """Bin edges for |offset|: one bin per tick up to 10, then log-spaced up to the shape's 95% quantile."""
    if upper is None:
        upper = shape.quantile(0.95) if shape is not None else 100
    lin = np.arange(0, LINEAR_LIMIT + 1, dtype=float)
    if upper <= LINEAR_LIMIT + 1:
        return np.append(lin, LINEAR_LIMIT + 1)
    lg = np.unique(np.round(np.geomspace(LINEAR_LIMIT + 1, upper, n_log + 1)))
    return np.concatenate([lin, lg])


def _offset_bin(d, edges):
    a = np.abs(d)
    i = np.searchsorted(edges, a, side="right") - 1
    i = np.clip(i, 0, edges.size - 2)
    return np.sign(d) * i


_KIND = {"LO_D": "LO", "LO_T": "LO", "IS": "LO", "CO_D": "CO", "CO_T": "CO", "MO": "MO"}


def event_cells(log: EventLog, edges) -> list:
    """(kind, side, signed offset bin) per event; in-spread orders sit at negative distance."""
    rows = np.arange(log.events().start, len(log))
    typ = log["type"][rows]
    off = log["offset"][rows].astype(np.int64)
    is_in = np.isin(typ, (EventType.LO_ask_IS, EventType.LO_bid_IS))
    is_mo = np.isin(typ, (EventType.MO_ask, EventType.MO_bid))
    d = np.where(is_in, -off, np.where(is_mo, 0, off))
    bins = _offset_bin(d, edges)
    out = []
    for t, bn in zip(typ.tolist(), bins.tolist()):
        e = EventType(t)
        sign = 1 if e.side == 0 else -1
        out.append((_KIND[e.family], e.side.name.lower(), int(sign * bn)))
    return out


@dataclass(frozen=True)
class LeverageGrid:
    labels: list
    ratio: np.ndarray  # [first, second], NaN where undefined
    counts: np.ndarray  # joint counts of consecutive pairs
    first_counts: np.ndarray
    second_counts: np.ndarray
    edges: np.ndarray | None = None

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.ratio)

    def cell(self, first, second) -> float:
        i, j = self.labels.index(first), self.labels.index(second)
        return float(self.ratio[i, j])

    def ratio_se(self) -> np.ndarray:
        n = self.counts.sum()
        p2 = self.second_counts / n
        with np.errstate(divide="ignore", invalid="ignore"):
            pc = self.counts / self.first_counts[:, None]
            se = np.sqrt(pc * (1 - pc) / self.first_counts[:, None]) / p2[None, :]
        return np.where(self.defined, se, np.nan)


def leverage_grid(source, edges=None) -> LeverageGrid:
    """Ratio of conditional to unconditional next-event probability, P(e2 | e1) / P(e2).

    ``source`` is an event log (cells from type and offset bin) or any
    sequence of hashable labels.
    """
    if isinstance(source, EventLog):
        if edges is None:
            edges = leverage_edges(average_shape(source))
        labels_seq = event_cells(source, edges)
    else:
        labels_seq = list(source)
    if len(labels_seq) < 2:
        raise DomainError("need at least two events")
    labels = sorted(set(labels_seq), key=repr)
    index = {lab: i for i, lab in enumerate(labels)}
    codes = np.array([index[x] for x in labels_seq])
    n = len(labels)
    joint = np.zeros((n, n), dtype=np.int64)
    np.add.at(joint, (codes[:-1], codes[1:]), 1)
    first = joint.sum(axis=1)
    second = joint.sum(axis=0)
    total = joint.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = joint * total / (first[:, None] * second[None, :])
    ratio = np.where((first[:, None] > 0) & (second[None, :] > 0), ratio, np.nan)
    return LeverageGrid(labels, ratio, joint, first, second, None if edges is None else np.asarray(edges))


# -- regressions and proxies ----------------------------------------------------------

@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r2: float
    n: int

    def __iter__(self):
        return iter((self.slope, self.intercept, self.r2))


def loglog_slope(x, y) -> PowerLawFit:
    """Least squares of log y on log x. Two points give the exact line."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise DomainError("need at least two (x, y) pairs of equal length")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log regression needs strictly positive values")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise DomainError("x values are all equal")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    sst = ((ly - ly.mean()) ** 2).sum()
    r2 = 1.0 - (resid ** 2).sum() / sst if sst > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), float(r2), int(x.size))


def epsilon_proxy(mean_spread: float) -> float:
    """Relative tick size proxy 1 / mean spread (the proportionality constant is dropped)."""
    if not mean_spread > 1:
        raise RegimeError(f"mean spread {mean_spread} <= 1 tick: large-tick regime, proxy undefined")
    return 1.0 / float(mean_spread)


# -- state dependence and autocorrelation ------------------------------------------------

@dataclass(frozen=True)
class IndependenceTable:
    event_types: list
    bin_edges: np.ndarray
    ratio: np.ndarray  # [event, bin], NaN for flagged bins
    lower: np.ndarray
    upper: np.ndarray
    counts: np.ndarray
    flagged: np.ndarray


def independence_ratio(log: EventLog, extractor, bins, min_count: int = 30, z: float = 1.96) -> IndependenceTable:
    """P(e, v) / (P(e) P(v)) with v the pre-event value of a state variable.

    ``extractor(log)`` returns one value per log row (the post-event state);
    the value attached to an event is the one on the previous row. Bins with
    fewer than ``min_count`` events are flagged and reported as NaN.
    """
    rows = np.arange(max(1, log.events().start), len(log))
    vals = np.asarray(extractor(log))[rows - 1]
    typ = log["type"][rows]
    edges = np.asarray(bins, dtype=float)
    vb = np.searchsorted(edges, vals, side="right") - 1
    keep = (vb >= 0) & (vb < edges.size - 1)
    vb, typ = vb[keep], typ[keep]
    types = sorted(set(typ.tolist()))
    nb = edges.size - 1
    counts = np.zeros((len(types), nb), dtype=np.int64)
    ti = {t: i for i, t in enumerate(types)}
    np.add.at(counts, (np.array([ti[t] for t in typ.tolist()], dtype=np.int64), vb), 1)
    n = counts.sum()
    pe = counts.sum(axis=1) / n
    nv = counts.sum(axis=0)
    flagged = np.broadcast_to(nv < min_count, counts.shape).copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = counts / nv[None, :]
        ratio = cond / pe[:, None]
        se = np.sqrt(cond * (1 - cond) / nv[None, :]) / pe[:, None]
    ratio = np.where(flagged, np.nan, ratio)
    return IndependenceTable([EventType(t).name for t in types], edges, ratio,
                             np.where(flagged, np.nan, ratio - z * se), np.where(flagged, np.nan, ratio + z * se),
                             counts, flagged)


@dataclass(frozen=True)
class ACFResult:
    values: np.ndarray  # lags 0..max_lag
    band: float


def acf(series, max_lag: int) -> ACFResult:
    x = np.asarray(series, dtype=float)
    n = x.size
    if max_lag < 1 or n <= max_lag:
        raise DomainError(f"series of length {n} too short for lag {max_lag}")
    x = x - x.mean()
    den = np.dot(x, x)
    if den == 0:
        raise DomainError("autocorrelation undefined for a constant series")
    vals = np.array([np.dot(x[:n - k], x[k:]) / den for k in range(max_lag + 1)])
    return ACFResult(vals, 1.96 / math.sqrt(n))


# -- scaling helpers and the report ---------------------------------------------------------

def scaling_metrics(log: EventLog) -> dict:
    """Mean spread, proxy, dispersion, mean trade move, shape peak and sparsity for one run."""
    s = spread_series(log)
    sbar = time_weighted_mean(s)
    tm = trade_mid_changes(log)
    shape = average_shape(log)
    sp = sparsity_metrics(log)
    out = {"mean_spread": sbar, "dispersion": index_of_dispersion(s), "r_mid": tm.mean,
           "argmax_shape": shape.argmax, "sparsity": sp.wasserstein_mean, "n_events": log.n_events}
    out["epsilon_proxy"] = 1.0 / sbar if sbar > 1 else float("nan")
    return out


@dataclass
class MetricReport:
    scalars: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (np.floating,)):
                return clean(float(v))
            return v
        body = {"scalars": {k: clean(v) for k, v in self.scalars.items()}, "notes": self.notes,
                "tables": sorted(self.tables)}
        return json.dumps(body, indent=2, sort_keys=True)

    def write(self, out_dir) -> list:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = [out / "report.json"]
        files[0].write_text(self.to_json() + "\n")
        for name, (header, rows) in sorted(self.tables.items()):
            p = out / f"{name}.csv"
            with open(p, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(header)
                for r in rows:
                    w.writerow([_fmt(v) for v in r])
            files.append(p)
        return files


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    return v


def metric_report(log: EventLog, frames: BookFrames | None = None, intraday_bucket: float = 1800.0) -> MetricReport:
    """All metrics for one log. ``frames`` overrides the meta-queue pictures for shape and sparsity."""
    rep = MetricReport()
    s = spread_series(log)
    rep.scalars["mean_spread"] = time_weighted_mean(s)
    rep.scalars["spread_dispersion"] = index_of_dispersion(s)
    rep.scalars["n_events"] = log.n_events
    rep.scalars["duration"] = log.duration - log.start_time
    vals, prob = spread_distribution(log)
    rep.tables["spread_pdf"] = (["spread_ticks", "probability"], list(zip(vals.tolist(), prob.tolist())))
    rows = np.arange(log.events().start, len(log))
    cnt = np.bincount(log["type"][rows], minlength=12)
    rep.tables["event_counts"] = (["event_type", "count"], [(e.name, int(cnt[e])) for e in EventType])

    tm = trade_mid_changes(log)
    rep.scalars["r_mid"] = tm.mean
    rep.scalars["n_market_orders"] = tm.n_orders
    hv, hc = tm.histogram() if not tm.empty else (np.zeros(0), np.zeros(0))
    rep.tables["trade_mid_moves"] = (["half_ticks", "count"], list(zip(hv.tolist(), hc.tolist())))

    src = frames if frames is not None else log
    try:
        shape = average_shape(src)
        q1, q2, q3 = shape.quartiles
        rep.scalars.update(shape_argmax=shape.argmax, shape_q1=q1, shape_q2=q2, shape_q3=q3)
        rep.notes["shape_resolution"] = shape.resolution
        rep.tables["shape_profile"] = (["offset_ticks", "mass"], list(zip(shape.offsets.tolist(),
                                                                          shape.mass.tolist())))
        sp = sparsity_metrics(src)
        rep.scalars["sparsity_mean"] = sp.wasserstein_mean
        rep.scalars["sparsity_var"] = sp.wasserstein_var
        rep.tables["empty_levels"] = (["rank", "empty_levels", "probability"],
                                      [(r, int(u), float(p)) for r, (us, ps) in sorted(sp.empty_levels.items())
                                       for u, p in zip(us, ps)])
        edges = leverage_edges(shape)
    except DomainError as e:
        rep.notes["shape_error"] = str(e)
        edges = leverage_edges(None)

    if log.n_events >= 2:
        lev = leverage_grid(log, edges)
        lrows = []
        for i, a in enumerate(lev.labels):
            for j, b in enumerate(lev.labels):
                if lev.counts[i, j] or lev.defined[i, j]:
                    lrows.append((*a, *b, int(lev.counts[i, j]), float(lev.ratio[i, j])))
        rep.tables["leverage"] = (["kind1", "side1", "bin1", "kind2", "side2", "bin2", "count", "ratio"], lrows)

    r, dens, ed = mo_to_best_ratio(log)
    rep.scalars["mo_to_best_mean"] = float(r.mean()) if r.size else float("nan")
    rep.tables["mo_to_best_ratio"] = (["bin_lo", "bin_hi", "density"],
                                      list(zip(ed[:-1].tolist(), ed[1:].tolist(), dens.tolist())))

    t0 = log.start_time
    buckets = np.floor((s.breakpoints - t0) / intraday_bucket).astype(np.int64)
    w = s.durations
    irows = []
    for bkt in np.unique(buckets):
        m = buckets == bkt
        if w[m].sum() > 0:
            irows.append((float(t0 + bkt * intraday_bucket), float(np.dot(s.values[m], w[m]) / w[m].sum())))
    rep.tables["intraday_spread"] = (["bucket_start", "mean_spread"], irows)
    return rep


__all__ = [
    "RegimeError", "WeightedSeries", "time_weighted_mean", "index_of_dispersion", "spread_series",
    "spread_distribution", "TradeMidChanges", "NO_TRADES", "trade_mid_changes", "mo_to_best_ratio", "BookFrames",
    "ShapeProfile", "average_shape", "SparsityReport", "sparsity_metrics", "wasserstein_sparsity",
    "leverage_edges", "event_cells", "LeverageGrid", "leverage_grid", "PowerLawFit", "loglog_slope",
    "epsilon_proxy", "IndependenceTable", "independence_ratio", "ACFResult", "acf", "scaling_metrics",
    "MetricReport", "metric_report", "INIT_TYPE",
]
