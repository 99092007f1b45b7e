"""Command line entry point: ``mqhlob <command> [options]``.

Exit codes: 0 on success, 1 on a runtime failure, 2 on bad usage, a bad
config or a missing input file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .analytics import RegimeError
from .core import DomainError, MQHError
from .experiments import UsageError
from .io import ConfigError

log = logging.getLogger("mqhlob")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def parse_grid(text: str | None) -> dict:
    """``--grid`` is a JSON file, a JSON object, or ``key=v1,v2;key2=...``."""
    if text is None:
        return {}
    p = Path(text)
    try:
        if p.suffix == ".json" or p.exists():
            if not p.exists():
                raise FileNotFoundError(f"grid file not found: {p}")
            return json.loads(p.read_text())
        if text.lstrip().startswith("{"):
            return json.loads(text)
        out = {}
        for part in text.split(";"):
            if not part.strip():
                continue
            key, _, vals = part.partition("=")
            if not vals:
                raise UsageError(f"bad grid term {part!r}; expected key=v1,v2,...")
            out[key.strip()] = _floats(vals)
        return out
    except (ValueError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot parse --grid: {e}") from e


def _scaling_points(g: dict):
    if not g:
        return None
    if "points" in g:
        pts = g["points"]
        if pts and not isinstance(pts[0], (list, tuple)):  # flattened triples from key=value form
            pts = [pts[i:i + 3] for i in range(0, len(pts), 3)]
        return [tuple(p) for p in pts]
    if {"alpha", "beta", "eta"} <= set(g) and "n" in g:
        n = g["n"][0] if isinstance(g["n"], list) else g["n"]
        return ex.path_grid(g["alpha"], g["beta"], g["eta"], int(n))
    if {"alpha", "beta", "eta"} <= set(g):
        if not len(g["alpha"]) == len(g["beta"]) == len(g["eta"]):
            raise UsageError("alpha, beta and eta lists must have equal length")
        return list(zip(g["alpha"], g["beta"], g["eta"]))
    raise UsageError("scaling grid needs points=... or alpha/beta/eta lists")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mqhlob", description="Meta-queue Hawkes order book simulator and toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, seed=True):
        if config:
            sp.add_argument("--config", help="run config JSON (default: the shipped reference config)")
        sp.add_argument("--out", help=f"output directory (default: ${ex.OUTPUT_ENV}/<command>)")
        if seed:
            sp.add_argument("--seed", type=int)
            sp.add_argument("--horizon", type=float, help="simulated seconds per run")

    sp = sub.add_parser("simulate", help="one run: event log, snapshots, metric report")
    common(sp)
    sp.add_argument("--snapshot-every", type=int, default=1000)

    for name, hlp in (("ergodicity", "spread and deep-width laws from different starting books"),
                      ("phase-diagram", "regime map over an (alpha, beta) grid"),
                      ("scaling", "stylized-fact slopes against the tick proxy")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--grid", help="JSON file, JSON object, or key=v1,v2;key2=...")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seeds", type=int, default=None, help="runs per grid point")
        if name == "phase-diagram":
            sp.add_argument("--no-overlay", action="store_true", help="skip the calibrated asset points")

    for name, hlp in (("report", "metric report for an event log CSV or a LOBSTER pair"),
                      ("calibrate", "estimate the critical parameters from a log")):
        sp = sub.add_parser(name, help=hlp)
        common(sp, config=(name == "calibrate"), seed=False)
        sp.add_argument("inputs", nargs="+", help="events.csv, or message.csv orderbook.csv")
        sp.add_argument("--shape-median", type=float, default=10.0,
                        help="median of the average shape in ticks, sets the modelled depth for LOBSTER input")
        sp.add_argument("--tick-size", type=float, default=0.01)
    return p


def run(args) -> dict:
    cmd = args.command
    if cmd == "simulate":
        return ex.cmd_simulate(args.config, args.out, args.seed, args.horizon, args.snapshot_every)
    if cmd in ("ergodicity", "phase-diagram", "scaling"):
        g = parse_grid(args.grid)
        kw = dict(config=args.config, out=args.out, seed=args.seed, horizon=args.horizon, jobs=args.jobs)
        if args.seeds is not None:
            kw["seeds"] = args.seeds
        if cmd == "ergodicity":
            if "s0" in g:
                kw["s0_list"] = [int(v) for v in g["s0"]]
            if "m0" in g:
                kw["m0_list"] = g["m0"]
            return ex.cmd_ergodicity(**kw)
        if cmd == "phase-diagram":
            if "alpha" in g:
                kw["alpha_grid"] = g["alpha"]
            if "beta" in g:
                kw["beta_grid"] = g["beta"]
            return ex.cmd_phase_diagram(overlay=not args.no_overlay, **kw)
        return ex.cmd_scaling(grid=_scaling_points(g), **kw)
    if cmd == "report":
        return ex.cmd_report(args.inputs, args.out, args.shape_median, args.tick_size)
    return ex.cmd_calibrate(args.inputs, args.out, args.config, args.shape_median, args.tick_size)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with 2 on bad usage
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = run(args)
    except (UsageError, ConfigError, FileNotFoundError) as e:
        print(f"mqhlob: error: {e}", file=sys.stderr)
        return 2
    except (MQHError, RegimeError, DomainError, OSError, ValueError) as e:
        print(f"mqhlob: {args.command} failed: {e}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
