"""Batch experiments behind the command line: one function per command.

Each command writes plain CSV/JSON artifacts under an output directory and
returns a summary dict. Runs are independent given their seeds, so sweeps
can fan out over processes without changing any output byte.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy import stats

from . import analytics as an
from .calibration import calibrate
from .core import DomainError, EventType
from .dynamics import run_simulation, snapshots_from_log
from .io import (RunConfig, load_lobster, read_event_log, read_run_config, reference_config, run_config_to_dict,
                 write_event_log, write_snapshots)

OUTPUT_ENV = "MQH_OUTPUT_ROOT"

# s-bar cut-offs between the large/medium and medium/small regimes, in ticks
LARGE_TICK_MAX = 2.0
SMALL_TICK_MIN = 10.0

# calibrated (alpha, beta, eta) per asset, with the regime each asset belongs to
CALIBRATED_ASSETS = {
    "SIRI": (0.0102, 0.98, 0.99, "large-tick"), "BAC": (0.0103, 0.49, 0.98, "large-tick"),
    "INTC": (0.0130, 0.94, 0.98, "large-tick"), "CSCO": (0.0250, 0.60, 0.99, "large-tick"),
    "ORCL": (0.0190, 0.18, 0.97, "large-tick"), "MSFT": (0.0230, 0.19, 0.98, "medium-tick"),
    "ABBV": (0.0440, 0.46, 0.79, "medium-tick"), "PM": (0.2750, 0.35, 0.77, "medium-tick"),
    "AAPL": (0.1350, 0.59, 0.92, "medium-tick"), "IBM": (0.2350, 0.59, 0.71, "medium-tick"),
    "TSLA": (1.3610, 0.48, 0.19, "small-tick"), "CHTR": (1.4100, 0.41, 0.15, "small-tick"),
    "AMZN": (1.9630, 0.41, 0.09, "small-tick"), "GOOG": (3.2670, 0.50, 0.09, "small-tick"),
    "BKNG": (3.7410, 0.46, 0.03, "small-tick"),
}

# slopes of dispersion, mean trade move and shape peak against the tick proxy
TARGET_SLOPES = {"dispersion": -1.43, "r_mid": -1.05, "argmax_shape": -1.57}
EMPIRICAL_SLOPES = {"dispersion": -1.36, "r_mid": -0.95, "argmax_shape": -1.50}

DEFAULT_ALPHA_GRID = (0.01, 0.05, 0.25, 1.0, 4.0)
DEFAULT_BETA_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_SEEDS = 3


class UsageError(DomainError):
    """Bad command arguments, reported with exit code 2."""


def regime(mean_spread: float) -> str:
    if not math.isfinite(mean_spread):
        return "failed"
    if mean_spread < LARGE_TICK_MAX:
        return "large-tick"
    if mean_spread < SMALL_TICK_MIN:
        return "medium-tick"
    return "small-tick"


def output_dir(out, command: str) -> Path:
    if out is None:
        out = Path(os.environ.get(OUTPUT_ENV, "mqh_output")) / command
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def load_config(config) -> RunConfig:
    if config is None:
        return reference_config()
    if isinstance(config, RunConfig):
        return config
    return read_run_config(config)


def _dump(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if isinstance(v, float) and not math.isfinite(v) else
                        (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for v in r])


def _map(fn, tasks, jobs: int = 1):
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))


# -- single runs ------------------------------------------------------------------------

def _simulate(cfg_dict, seed, horizon, alpha=None, beta=None, eta=None, init=None):
    cfg = read_run_config(cfg_dict).with_critical(alpha, beta, eta)
    init = cfg.init if init is None else replace(cfg.init, **init)
    return run_simulation(cfg.spec, cfg.handlers, init, horizon, seed=seed, m_half_depth=cfg.m_half_depth)


def _spread_task(task):
    cfg_dict, seed, horizon, a, b, e = task
    try:
        log = _simulate(cfg_dict, seed, horizon, a, b, e).log
        return an.time_weighted_mean(an.spread_series(log))
    except Exception:  # a failed cell is marked, the sweep goes on
        return float("nan")


def _scaling_task(task):
    cfg_dict, seed, horizon, a, b, e = task
    log = _simulate(cfg_dict, seed, horizon, a, b, e).log
    return an.scaling_metrics(log)


def _ergodic_task(task):
    cfg_dict, seed, horizon, init, burn_in, sample_dt = task
    log = _simulate(cfg_dict, seed, horizon, init=init).log
    t = log["time"]
    keep = t >= burn_in
    first = max(int(np.argmax(keep)) - 1, 0) if keep.any() else len(log) - 1
    sub = log.slice(slice(first, len(log)))
    times = sub["time"].copy()
    times[0] = burn_in
    s = an.WeightedSeries(times, sub.spread, log.duration)
    grid = np.arange(burn_in, log.duration, sample_dt)
    idx = np.searchsorted(log["time"], grid, side="right") - 1
    md = np.concatenate([log["m_deep_ask"][idx], log["m_deep_bid"][idx]])
    return an.time_weighted_mean(s), md


# -- commands -----------------------------------------------------------------------------

def cmd_simulate(config=None, out=None, seed=None, horizon=None, snapshot_every: int = 1000) -> dict:
    cfg = load_config(config)
    seed = cfg.seed if seed is None else seed
    seed = 0 if seed is None else int(seed)
    horizon = cfg.horizon if horizon is None else float(horizon)
    out = output_dir(out, "simulate")
    res = run_simulation(cfg.spec, cfg.handlers, cfg.init, horizon, seed=seed, m_half_depth=cfg.m_half_depth)
    log = res.log
    write_event_log(log, out / "events.csv")
    write_snapshots(snapshots_from_log(log, snapshot_every), out / "snapshots.jsonl")
    rep = an.metric_report(log)
    rep.write(out / "report")
    rows = np.arange(log.events().start, len(log))
    cnt = np.bincount(log["type"][rows], minlength=12)
    summary = {
        "command": "simulate", "seed": seed, "horizon": horizon, "m_half_depth": cfg.m_half_depth,
        "mean_spread": rep.scalars["mean_spread"], "regime": regime(rep.scalars["mean_spread"]),
        "n_events": log.n_events, "status": res.status,
        "event_counts": {e.name: int(cnt[e]) for e in EventType},
    }
    cdict = run_config_to_dict(cfg)
    cdict.update(seed=seed, horizon=horizon)
    _dump(cdict, out / "config.json")
    _dump(summary, out / "summary.json")
    return summary


def cmd_ergodicity(config=None, s0_list=(5, 55, 105), m0_list=(0.05, 0.5, 0.95), out=None, seed=None,
                   horizon=None, seeds: int = DEFAULT_SEEDS, burn_in: float | None = None,
                   sample_dt: float = 200.0, jobs: int = 1) -> dict:
    """Long-run spread from several starting spreads, and the deep-width law from several starting widths."""
    cfg = load_config(config)
    base = 0 if (seed if seed is not None else cfg.seed) is None else int(seed if seed is not None else cfg.seed)
    horizon = cfg.horizon if horizon is None else float(horizon)
    burn_in = 0.1 * horizon if burn_in is None else float(burn_in)
    out = output_dir(out, "ergodicity")
    cd = run_config_to_dict(cfg)
    tasks, keys = [], []
    for s0 in s0_list:
        for k in range(seeds):
            tasks.append((cd, base + k, horizon, {"s0": int(s0)}, burn_in, sample_dt))
            keys.append(("s0", s0, k))
    for m0 in m0_list:
        for k in range(seeds):
            tasks.append((cd, base + 1000 + k, horizon, {"m0_top": float(m0), "m0_deep": float(m0)},
                          burn_in, sample_dt))
            keys.append(("m0", m0, k))
    results = _map(_ergodic_task, tasks, jobs)
    spread_rows, means, md_pool = [], {}, {}
    for (kind, v, k), (sbar, md) in zip(keys, results):
        if kind == "s0":
            spread_rows.append((v, base + k, sbar))
            means.setdefault(v, []).append(sbar)
        else:
            md_pool.setdefault(v, []).append(md)
    long_run = {v: float(np.mean(x)) for v, x in means.items()}
    pairs = []
    vals = list(long_run.items())
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            (a, ma), (b, mb) = vals[i], vals[j]
            pairs.append((a, b, ma, mb, abs(ma - mb) / (0.5 * (ma + mb))))
    ks_rows = []
    mds = {v: np.concatenate(x) for v, x in md_pool.items()}
    keys_m = list(mds)
    for i in range(len(keys_m)):
        for j in range(i + 1, len(keys_m)):
            r = stats.ks_2samp(mds[keys_m[i]], mds[keys_m[j]])
            ks_rows.append((keys_m[i], keys_m[j], float(r.statistic), float(r.pvalue)))
    _write_csv(out / "spread_runs.csv", ["s0", "seed", "mean_spread"], spread_rows)
    _write_csv(out / "spread_pairs.csv", ["s0_a", "s0_b", "mean_a", "mean_b", "relative_gap"], pairs)
    _write_csv(out / "deep_width_ks.csv", ["m0_a", "m0_b", "ks_statistic", "p_value"], ks_rows)
    summary = {
        "command": "ergodicity", "horizon": horizon, "burn_in": burn_in, "seeds": seeds, "base_seed": base,
        "sample_dt": sample_dt, "long_run_mean_spread": {str(k): v for k, v in long_run.items()},
        "max_relative_gap": max((p[4] for p in pairs), default=None),
        "min_ks_p_value": min((r[3] for r in ks_rows), default=None),
        "comparisons": len(pairs) + len(ks_rows),
    }
    _dump(summary, out / "summary.json")
    return summary


def cmd_phase_diagram(config=None, alpha_grid=DEFAULT_ALPHA_GRID, beta_grid=DEFAULT_BETA_GRID, out=None,
                      seed=None, horizon=None, seeds: int = DEFAULT_SEEDS, jobs: int = 1,
                      overlay: bool = True) -> dict:
    """Median mean spread and regime label on an (alpha, beta) grid, plus the calibrated assets."""
    alpha_grid, beta_grid = [float(a) for a in alpha_grid], [float(b) for b in beta_grid]
    if not alpha_grid or not beta_grid:
        raise UsageError("phase diagram needs non-empty alpha and beta grids")
    cfg = load_config(config)
    base = int(seed if seed is not None else (cfg.seed or 0))
    horizon = cfg.horizon if horizon is None else float(horizon)
    out = output_dir(out, "phase-diagram")
    cd = run_config_to_dict(cfg)
    tasks, keys = [], []
    for b in beta_grid:
        for a in alpha_grid:
            for k in range(seeds):
                tasks.append((cd, base + k, horizon, a, b, None))
                keys.append(("grid", a, b, None))
    assets = list(CALIBRATED_ASSETS.items()) if overlay else []
    for name, (a, b, e, _) in assets:
        for k in range(seeds):
            tasks.append((cd, base + k, horizon, a, b, e))
            keys.append((name, a, b, e))
    sbars = _map(_spread_task, tasks, jobs)
    cells = {}
    for key, s in zip(keys, sbars):
        cells.setdefault(key, []).append(s)

    def med(xs):
        xs = [x for x in xs if math.isfinite(x)]
        return float(np.median(xs)) if xs else float("nan")

    grid_rows, by_beta = [], {}
    for b in beta_grid:
        for a in alpha_grid:
            m = med(cells[("grid", a, b, None)])
            grid_rows.append((a, b, m, regime(m)))
            by_beta.setdefault(b, []).append(m)
    rho = {}
    for b, ms in by_beta.items():
        ok = np.isfinite(ms)
        rho[str(b)] = float(stats.spearmanr(np.array(alpha_grid)[ok], np.array(ms)[ok])[0]) if ok.sum() > 2 \
            else float("nan")
    overlay_rows = []
    for name, (a, b, e, label) in assets:
        m = med(cells[(name, a, b, e)])
        overlay_rows.append((name, a, b, e, m, regime(m), label))
    _write_csv(out / "phase_grid.csv", ["alpha", "beta", "mean_spread", "regime"], grid_rows)
    _write_csv(out / "calibrated_assets.csv",
               ["asset", "alpha", "beta", "eta", "mean_spread", "regime", "empirical_regime"], overlay_rows)
    summary = {
        "command": "phase-diagram", "horizon": horizon, "seeds": seeds, "base_seed": base,
        "aggregation": "median over seeds", "thresholds": {"large_below": LARGE_TICK_MAX,
                                                           "small_from": SMALL_TICK_MIN},
        "spearman_by_beta": {k: _clean(v) for k, v in rho.items()},
        "assets": {r[0]: {"mean_spread": _clean(r[4]), "regime": r[5]} for r in overlay_rows},
        "failed_cells": int(sum(1 for r in grid_rows if r[3] == "failed")),
    }
    _dump(summary, out / "summary.json")
    return summary


def path_grid(alpha_range, beta_range, eta_range, n: int):
    """Points along a path: alpha and eta geometric, beta linear between the two ends."""
    a = np.geomspace(*alpha_range, n)
    b = np.linspace(*beta_range, n)
    e = np.geomspace(*eta_range, n)
    return [(float(x), float(y), float(z)) for x, y, z in zip(a, b, e)]


def cmd_scaling(config=None, grid=None, out=None, seed=None, horizon=None, seeds: int = 1, jobs: int = 1) -> dict:
    """Regress dispersion, mean trade move and shape peak on the tick proxy across (alpha, beta, eta) points."""
    cfg = load_config(config)
    grid = default_scaling_grid() if grid is None else [tuple(map(float, p)) for p in grid]
    if len(grid) < 2:
        raise DomainError("scaling needs at least two grid points")
    base = int(seed if seed is not None else (cfg.seed or 0))
    horizon = cfg.horizon if horizon is None else float(horizon)
    out = output_dir(out, "scaling")
    cd = run_config_to_dict(cfg)
    tasks = [(cd, base + 7919 * i + k, horizon, a, b, e) for i, (a, b, e) in enumerate(grid) for k in range(seeds)]
    res = _map(_scaling_task, tasks, jobs)
    keys = ("mean_spread", "dispersion", "r_mid", "argmax_shape", "sparsity")
    rows = []
    for i, (a, b, e) in enumerate(grid):
        rs = res[i * seeds:(i + 1) * seeds]
        agg = {k: float(np.nanmedian([r[k] for r in rs])) for k in keys}
        rows.append((a, b, e, *(agg[k] for k in keys)))
    arr = np.array([r[3:] for r in rows], dtype=float)
    usable = arr[:, 0] >= LARGE_TICK_MAX
    _write_csv(out / "scaling_points.csv", ["alpha", "beta", "eta", *keys, "usable"],
               [(*r, bool(u)) for r, u in zip(rows, usable)])
    if usable.sum() < 5:
        raise an.RegimeError(f"only {int(usable.sum())} grid points outside the large-tick regime; need >= 5")
    eps = 1.0 / arr[usable, 0]
    slopes, fits = {}, {}
    for j, k in enumerate(keys[1:4], start=1):
        y = arr[usable, j]
        ok = np.isfinite(y) & (y > 0)
        f = an.loglog_slope(eps[ok], y[ok])
        slopes[k], fits[k] = f.slope, f
    rho = float(stats.spearmanr(eps, arr[usable, 4])[0])
    table = [(k, slopes[k], fits[k].r2, TARGET_SLOPES[k], EMPIRICAL_SLOPES[k]) for k in slopes]
    _write_csv(out / "slopes.csv", ["metric", "slope", "r2", "reference_simulated", "reference_empirical"], table)
    summary = {"command": "scaling", "horizon": horizon, "seeds": seeds, "base_seed": base,
               "n_points": len(grid), "n_usable": int(usable.sum()), "slopes": slopes,
               "r2": {k: f.r2 for k, f in fits.items()}, "sparsity_spearman": rho,
               "reference_simulated": TARGET_SLOPES, "reference_empirical": EMPIRICAL_SLOPES}
    _dump(summary, out / "summary.json")
    return summary


def default_scaling_grid():
    return path_grid(*DEFAULT_SCALING_PATH)


# (alpha range, beta range, eta range, points); see the README for how it was chosen
DEFAULT_SCALING_PATH = ((0.1, 3.7), (0.6, 0.45), (0.9, 0.05), 12)


def _load_inputs(inputs, shape_median, tick_size):
    inputs = [Path(p) for p in inputs]
    for p in inputs:
        if not p.exists():
            raise FileNotFoundError(f"input file not found: {p}")
    if len(inputs) == 1:
        return read_event_log(inputs[0]), None, None
    if len(inputs) == 2:
        log, st, frames = load_lobster(inputs[0], inputs[1], shape_median, tick_size)
        return log, st, frames
    raise UsageError("give one event log CSV or a LOBSTER message/orderbook pair")


def cmd_report(inputs, out=None, shape_median: float = 10.0, tick_size: float = 0.01) -> dict:
    out = output_dir(out, "report")
    log, st, frames = _load_inputs(inputs, shape_median, tick_size)
    if log.n_events == 0:
        raise DomainError("no classifiable events in the input")
    rep = an.metric_report(log, frames)
    files = rep.write(out)
    summary = {"command": "report", "n_events": log.n_events, "files": sorted(p.name for p in files),
               "mean_spread": rep.scalars["mean_spread"]}
    if st is not None:
        write_event_log(log, out / "events.csv")
        summary["classification"] = {"classified": st.classified, "dropped_deep": st.dropped_deep,
                                     "skipped": st.skipped, "hidden": st.hidden, "crosses": st.crosses,
                                     "halts": st.halts, "outside_session": st.outside_session,
                                     "dropped_fraction": st.dropped_fraction}
    _dump(summary, out / "summary.json")
    return summary


def cmd_calibrate(inputs, out=None, config=None, shape_median: float = 10.0, tick_size: float = 0.01,
                  bin_width: float = 0.01) -> dict:
    out = output_dir(out, "calibrate")
    log, st, _ = _load_inputs(inputs, shape_median, tick_size)
    spec = load_config(config).spec if config is not None else None
    res = calibrate(log, spec=spec, bin_width=bin_width)
    (out / "calibration.json").write_text(res.to_json() + "\n")
    _dump(res.config_fragment(), out / "config_fragment.json")
    summary = {"command": "calibrate", "alpha": res.alpha, "beta": res.beta, "eta_hats": list(res.eta_hats),
               "eta_common": res.eta_common, "baseline_source": res.diagnostics["baseline_source"]}
    _dump(summary, out / "summary.json")
    return summary


__all__ = [
    "UsageError", "OUTPUT_ENV", "LARGE_TICK_MAX", "SMALL_TICK_MIN", "CALIBRATED_ASSETS", "TARGET_SLOPES", "EMPIRICAL_SLOPES",
    "regime", "output_dir", "load_config", "path_grid", "default_scaling_grid", "DEFAULT_SCALING_PATH",
    "cmd_simulate", "cmd_ergodicity", "cmd_phase_diagram", "cmd_scaling", "cmd_report", "cmd_calibrate",
]
