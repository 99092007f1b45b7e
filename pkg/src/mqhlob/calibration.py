"""Estimating the in-spread power law, the offset and size laws, and binned kernel norms from a log."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import N_TYPES, DomainError, EventType, MQHError
from .eventlog import EventLog
from .hawkes import HawkesSpec
from .sampling import DEEP_SPIKES, GeometricFit, fit_geometric_mle, fit_truncated_geometric_mle


class InsufficientDataError(MQHError, ValueError):
    pass


IS_CODES = (int(EventType.LO_ask_IS), int(EventType.LO_bid_IS))
MO_CODES = (int(EventType.MO_ask), int(EventType.MO_bid))
CO_T_CODES = (int(EventType.CO_ask_T), int(EventType.CO_bid_T))
LO_T_CODES = (int(EventType.LO_ask_T), int(EventType.LO_bid_T))


@dataclass
class PowerLawCalibration:
    alpha: float
    beta: float
    intercept: float
    baseline: float  # total in-spread rate at multiplier one, both sides together
    baseline_source: str
    r2: float
    beta_se: float
    levels: np.ndarray = field(repr=False)
    rates: np.ndarray = field(repr=False)
    occupancy: np.ndarray = field(repr=False)


def is_baseline_from_spec(spec: HawkesSpec, log: EventLog) -> float:
    """Time-averaged in-spread intensity before the spread multiplier, summed over both sides.

    Kernels feeding the in-spread types are non-negative in every sensible
    configuration, so the clip at zero never binds and the average is the
    exogenous rate plus each source's event rate times its kernel norm.
    """
    rows = np.arange(log.events().start, len(log))
    dur = log.duration - log.start_time
    counts = np.bincount(log["type"][rows], minlength=spec.dim).astype(float)
    total = 0.0
    for i in spec.is_types:
        total += spec.mu[i]
        for j in range(spec.dim):
            if spec.a[i, j] != 0:
                total += counts[j] / dur * spec.kernel(i, j).norm()
    return float(total)


def calibrate_is_power_law(log: EventLog, bin_width: float = 0.01, spec: HawkesSpec | None = None,
                           baseline: float | None = None, min_occupancy: float = 1.0,
                           min_levels: int = 3) -> PowerLawCalibration:
    """Fit rate(s) = baseline * (tick (s - 1) / alpha) ** beta from binned in-spread arrivals.

    Arrivals are counted in ``bin_width`` bins, each bin takes the spread in
    force at its start, one-tick spreads are excluded, and the log rate per
    spread level is regressed on log(s - 1) weighted by the time spent at
    that level. The regression only fixes ``baseline * alpha ** -beta``; the
    baseline comes from ``baseline``, else from ``spec`` (exogenous rate plus
    excitation), else from the empirical mean in-spread rate.
    """
    if not bin_width > 0:
        raise DomainError("bin width must be positive")
    t = log["time"]
    t0, t1 = log.start_time, log.duration
    nb = int(math.floor((t1 - t0) / bin_width))
    if nb < 1:
        raise InsufficientDataError("log shorter than one bin")
    starts = t0 + np.arange(nb) * bin_width
    idx = np.searchsorted(t, starts, side="right") - 1
    spread = log.spread[np.clip(idx, 0, len(log) - 1)]
    rows = np.flatnonzero(np.isin(log["type"], IS_CODES))
    b = np.floor((t[rows] - t0) / bin_width).astype(np.int64)
    b = b[(b >= 0) & (b < nb)]
    counts = np.bincount(b, minlength=nb)
    levels, inv = np.unique(spread, return_inverse=True)
    occ = np.bincount(inv) * bin_width
    n_is = np.bincount(inv, weights=counts)
    keep = (levels > 1) & (occ >= min_occupancy) & (n_is > 0)
    if keep.sum() < min_levels:
        raise InsufficientDataError(f"need in-spread arrivals at >= {min_levels} spread levels above one tick, "
                                    f"found {int(keep.sum())}")
    lv, occ_k, rate = levels[keep], occ[keep], n_is[keep] / occ[keep]
    x, y, w = np.log(lv - 1.0), np.log(rate), occ_k / occ_k.sum()
    xm, ym = np.dot(w, x), np.dot(w, y)
    sxx = np.dot(w, (x - xm) ** 2)
    beta = float(np.dot(w, (x - xm) * (y - ym)) / sxx)
    intercept = float(ym - beta * xm)
    resid = y - intercept - beta * x
    syy = np.dot(w, (y - ym) ** 2)
    r2 = float(1 - np.dot(w, resid ** 2) / syy) if syy > 0 else 1.0
    neff = 1.0 / np.sum(w ** 2)
    beta_se = float(math.sqrt(np.dot(w, resid ** 2) / max(neff - 2, 1) / sxx)) if neff > 2 else float("nan")
    if baseline is not None:
        lam0, src = float(baseline), "given"
    elif spec is not None:
        lam0, src = is_baseline_from_spec(spec, log), "spec"
    else:
        lam0, src = float(len(rows) / (t1 - t0)), "empirical-mean"
    if not lam0 > 0:
        raise DomainError("baseline in-spread rate must be positive")
    if beta <= 0:
        raise InsufficientDataError(f"non-positive slope {beta:.3f}: no in-spread power law in this log")
    tick = log.tick_size
    alpha = float(tick * math.exp(-(intercept - math.log(lam0)) / beta))
    return PowerLawCalibration(alpha, beta, intercept, lam0, src, r2, beta_se, lv, rate, occ_k)


# -- offsets -------------------------------------------------------------------------

@dataclass
class EtaEstimates:
    in_spread: GeometricFit | None
    top: GeometricFit | None
    promotion: GeometricFit | None
    common: GeometricFit | None
    counts: dict
    flagged: list


def eta_observations(log: EventLog):
    """Per family: (values, upper truncation bounds, support minimum)."""
    typ = log["type"]
    start = max(1, log.events().start)
    out = {}
    rows = np.flatnonzero(np.isin(typ, IS_CODES))
    rows = rows[rows >= start]
    out["in_spread"] = (log["offset"][rows], log.spread[rows - 1] - 1, 1)

    rows = np.flatnonzero(np.isin(typ, LO_T_CODES))
    rows = rows[rows >= start]
    ask = typ[rows] == EventType.LO_ask_T
    mt_pre = np.where(ask, log["m_top_ask"][rows - 1], log["m_top_bid"][rows - 1])
    out["top"] = (log["offset"][rows], mt_pre - 1, 0)

    # width of the promoted top after exactly one depletion
    rows = np.flatnonzero(np.isin(typ, CO_T_CODES + MO_CODES) & (log["depleted_levels"] == 1))
    rows = rows[rows >= start]
    ask = np.isin(typ[rows], (EventType.CO_ask_T, EventType.MO_ask))

    def pick(name, r):
        return np.where(ask, log[name + "_ask"][r], log[name + "_bid"][r])

    jump = np.where(ask, log["ask"][rows] - log["ask"][rows - 1], log["bid"][rows - 1] - log["bid"][rows])
    mt_old, md_old, qd_old = pick("m_top", rows - 1), pick("m_deep", rows - 1), pick("q_deep", rows - 1)
    mt_new, md_new = pick("m_top", rows), pick("m_deep", rows)
    w = mt_new - (mt_old - jump)
    cap_new = (2 * log.m_half_depth - log.spread[rows]) // 2
    fallback = (md_new == 1) & (mt_new == cap_new - 1)
    ok = (qd_old >= 2) & (w >= 1) & (w <= md_old) & ~fallback
    out["promotion"] = (w[ok], md_old[ok], 1)
    return out


def calibrate_eta(log: EventLog, min_obs: int = 100, truncated: bool = True) -> EtaEstimates:
    """Geometric fits of the three offset laws and of one common parameter.

    Offsets in the simulator are drawn conditioned on fitting inside the
    book, so the default likelihood accounts for each draw's upper bound.
    """
    obs = eta_observations(log)
    fits, counts, flagged = {}, {}, []
    pool_x, pool_u, pool_s = [], [], []
    for name, (x, u, smin) in obs.items():
        x, u = np.asarray(x, dtype=float), np.asarray(u, dtype=float)
        good = (x >= smin) & (u >= x)
        x, u = x[good], u[good]
        counts[name] = int(x.size)
        if x.size < min_obs:
            fits[name] = None
            flagged.append(name)
            continue
        fits[name] = fit_truncated_geometric_mle(x, u, smin) if truncated else fit_geometric_mle(x, smin)
        pool_x.append(x)
        pool_u.append(u)
        pool_s.append(np.full(x.size, smin, dtype=float))
    common = None
    if pool_x:
        x, u, s = np.concatenate(pool_x), np.concatenate(pool_u), np.concatenate(pool_s)
        common = fit_truncated_geometric_mle(x, u, s) if truncated else fit_geometric_mle(x - s + 1, 1)
    return EtaEstimates(fits["in_spread"], fits["top"], fits["promotion"], common, counts, flagged)


# -- sizes and unseen deep volume ---------------------------------------------------------

def _p_with_spikes(mean: float, spikes, support_min: int = 1) -> float:
    w = sum(m for _, m in spikes)
    sv = sum(v * m for v, m in spikes)
    base_mean = (mean - sv) / (1 - w)  # mean of the geometric part
    if base_mean <= support_min:
        return 1.0
    return 1.0 / (base_mean - support_min + 1)


def calibrate_kappa(log: EventLog, spikes=None, min_obs: int = 30) -> dict:
    """Geometric parameter of each family's order size.

    With ``spikes`` (value, mass) known, the geometric part is backed out of
    the sample mean; otherwise a plain geometric is fitted. Cancel sizes are
    capped by the queue they hit and are reported but biased towards 1.
    """
    rows = np.arange(max(1, log.events().start), len(log))
    typ, size = log["type"][rows], log["size"][rows]
    out = {}
    for fam in ("LO_D", "CO_D", "LO_T", "CO_T", "MO", "IS"):
        codes = [int(e) for e in EventType if e.family == fam]
        x = size[np.isin(typ, codes)]
        x = x[x >= 1]
        if x.size < min_obs:
            out[fam] = None
            continue
        out[fam] = _p_with_spikes(float(x.mean()), spikes) if spikes else fit_geometric_mle(x).p
    return out


def calibrate_deep_volume(log: EventLog, spikes=DEEP_SPIKES, min_levels: int = 1000) -> float | None:
    """Per-level geometric parameter of the unseen deep volume, from the replenishment ledger."""
    rows = np.arange(max(1, log.events().start), len(log))
    typ = log["type"][rows]
    m = (log["replenished"][rows] > 0) & (log["purged"][rows] == 0) & (log["depleted_levels"][rows] <= 1)
    r = rows[m]
    if r.size == 0:
        return None
    ask = typ[m] < 6
    md = np.where(ask, log["m_deep_ask"][r], log["m_deep_bid"][r])
    if md.sum() < min_levels:
        return None
    per_level = log["replenished"][r].sum() / md.sum()
    w = sum(m for _, m in spikes or ())
    if (per_level - sum(v * m for v, m in spikes or ())) / (1 - w) <= 1:
        return None  # spike values alone explain the mean; the geometric part is not identified
    return _p_with_spikes(float(per_level), spikes or ())


# -- binned kernel norms ------------------------------------------------------------------

@dataclass
class KernelEstimate:
    norms: np.ndarray  # [target, source], clipped at zero
    raw_norms: np.ndarray
    spectral_radius: float
    mu: np.ndarray
    lag_coefficients: np.ndarray = field(repr=False)  # [lag, target, source]
    bin_width: float = 0.0
    regularized: bool = False


def bin_counts(log: EventLog, bin_width: float, dim: int = N_TYPES) -> np.ndarray:
    rows = np.arange(log.events().start, len(log))
    t0, t1 = log.start_time, log.duration
    nb = int(math.floor((t1 - t0) / bin_width))
    b = np.floor((log["time"][rows] - t0) / bin_width).astype(np.int64)
    k = log["type"][rows]
    ok = (b >= 0) & (b < nb)
    X = np.zeros((nb, dim))
    np.add.at(X, (b[ok], k[ok]), 1.0)
    return X


def estimate_kernels_binned(source, bin_width: float = 0.05, lag_count: int = 40, ridge: float = 0.0,
                            dim: int = N_TYPES) -> KernelEstimate:
    """Vector autoregression of binned counts, solved through the lagged covariances.

    This is a plain least-squares simplification of non-parametric kernel
    estimation: the sum of the lag coefficients estimates each kernel norm,
    negative sums are clipped to zero. ``source`` is a log or an already
    binned count matrix.
    """
    X = bin_counts(source, bin_width, dim) if isinstance(source, EventLog) else np.asarray(source, dtype=float)
    n, d = X.shape
    L = int(lag_count)
    if n <= 10 * L:
        raise InsufficientDataError(f"{n} bins are too few for {L} lags")
    m = X.mean(axis=0)
    Z = X - m
    gam = [Z[l:].T @ Z[:n - l] / n for l in range(L + 1)]  # gam[l][i, j] = cov(x_i(t), x_j(t - l))
    R = np.empty((d * L, d * L))
    for p in range(L):
        for q in range(L):
            lag = q - p
            R[p * d:(p + 1) * d, q * d:(q + 1) * d] = gam[lag].T if lag >= 0 else gam[-lag]
    rhs = np.hstack([gam[l] for l in range(1, L + 1)])  # (d, d L)
    reg = False
    R_s = R + ridge * np.eye(d * L) if ridge else R
    try:
        cond = np.linalg.cond(R_s)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned")
        coef = np.linalg.solve(R_s.T, rhs.T).T
    except np.linalg.LinAlgError:
        lam = max(ridge, 1e-6 * np.trace(R) / (d * L) + 1e-12)
        warnings.warn(f"singular lag design, falling back to ridge {lam:.3g}", RuntimeWarning, stacklevel=2)
        coef = np.linalg.solve((R + lam * np.eye(d * L)).T, rhs.T).T
        reg = True
    A = coef.reshape(d, L, d).transpose(1, 0, 2)  # [lag, target, source]
    raw = A.sum(axis=0)
    norms = np.clip(raw, 0, None)
    intercept = m - raw @ m
    rho = float(np.max(np.abs(np.linalg.eigvals(norms)))) if d else 0.0
    return KernelEstimate(norms, raw, rho, intercept / bin_width, A, bin_width, reg)


# -- everything together --------------------------------------------------------------------

@dataclass
class CalibrationResult:
    alpha: float
    beta: float
    eta_hats: tuple  # (in-spread, top, promotion); None where undersampled
    eta_common: float | None
    kappa_hats: dict
    q_hat_deep: float | None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError("alpha and beta must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    def config_fragment(self) -> dict:
        """Partial run config carrying the estimated critical parameters."""
        frag = {"hawkes": {"is_alpha": self.alpha, "is_beta": self.beta}, "handlers": {}}
        names = ("eta_is", "eta_t", "eta_t1")
        smin = (1, 0, 1)
        for name, p, s in zip(names, self.eta_hats, smin):
            p = p if p is not None else self.eta_common
            if p is not None:
                frag["handlers"][name] = {"p": min(1.0, max(p, 1e-6)), "support_min": s}
        return frag


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    raise TypeError(type(v))


def calibrate(log: EventLog, spec: HawkesSpec | None = None, bin_width: float = 0.01, min_obs: int = 100,
              kappa_spikes=None) -> CalibrationResult:
    pl = calibrate_is_power_law(log, bin_width, spec=spec)
    eta = calibrate_eta(log, min_obs)

    def p(f):
        return None if f is None else float(f.p)

    diag = {
        "intercept": pl.intercept, "baseline": pl.baseline, "baseline_source": pl.baseline_source,
        "r2": pl.r2, "beta_se": pl.beta_se, "spread_levels": int(pl.levels.size),
        "eta_counts": eta.counts, "eta_flagged": eta.flagged,
        "eta_se": {k: (None if f is None else f.se) for k, f in
                   (("in_spread", eta.in_spread), ("top", eta.top), ("promotion", eta.promotion),
                    ("common", eta.common))},
        "alpha_units": "currency (same unit as the tick size)",
    }
    return CalibrationResult(pl.alpha, pl.beta, (p(eta.in_spread), p(eta.top), p(eta.promotion)), p(eta.common),
                             calibrate_kappa(log, kappa_spikes), calibrate_deep_volume(log), diag)


__all__ = [
    "InsufficientDataError", "PowerLawCalibration", "is_baseline_from_spec", "calibrate_is_power_law",
    "EtaEstimates", "eta_observations", "calibrate_eta", "calibrate_kappa", "calibrate_deep_volume",
    "KernelEstimate", "bin_counts", "estimate_kernels_binned", "CalibrationResult", "calibrate",
]
