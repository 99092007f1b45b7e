"""File formats: LOBSTER input, the toolkit's event log CSV, snapshot JSON-lines and run configs.

Event log CSV
    A few ``# key=value`` header lines (tick_size, m_half_depth, horizon,
    start), then a header row with ``eventlog.COLUMNS`` and one row per event.
    Times are written with ``repr`` so a write/read/write cycle is
    byte-identical. Row 0 is the ``INIT`` row carrying the starting book.

Run config (JSON)
    ``hawkes``: mu (12 rates, in type order), kernels (list of
    source/target/a/b/c[/horizon]), is_alpha, is_beta, tick_size, symmetric.
    With ``symmetric`` each kernel is also installed on its bid/ask mirror.
    ``handlers``: one geometric-with-spikes law per mark, ``init``,
    ``m_half_depth``, ``seed``, ``horizon``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np

from .core import N_TYPES, DomainError, EventRecord, EventType, MQHError, TickPrice
from .dynamics import HandlerConfig, InitConfig
from .eventlog import COLUMNS, INIT_TYPE, EventLog
from .hawkes import PowerLawKernel, HawkesSpec
from .sampling import DeepVolumeDist, GeomWithSpikes


class ConfigError(DomainError):
    pass


class LobsterParseError(MQHError, ValueError):
    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


# -- event logs ----------------------------------------------------------------

_META_KEYS = ("tick_size", "m_half_depth", "horizon", "start")


def write_event_log(log: EventLog, path):
    path = Path(path)
    cols = [log[c] for c in COLUMNS]
    with open(path, "w", newline="") as f:
        f.write(f"# tick_size={log.tick_size!r}\n")
        f.write(f"# m_half_depth={int(log.m_half_depth)}\n")
        for key in ("horizon", "start"):
            if key in log.meta:
                f.write(f"# {key}={float(log.meta[key])!r}\n")
        f.write(",".join(COLUMNS) + "\n")
        times = cols[0].tolist()
        ints = np.column_stack(cols[1:]).tolist() if len(log) else []
        for t, row in zip(times, ints):
            f.write(repr(float(t)) + "," + ",".join(str(v) for v in row) + "\n")
    return path


def read_event_log(path) -> EventLog:
    meta = {}
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, val = lines[i][1:].strip().partition("=")
        meta[key.strip()] = val.strip()
        i += 1
    if i >= len(lines):
        raise DomainError(f"{path}: no header row")
    header = lines[i].split(",")
    if tuple(header) != COLUMNS:
        raise DomainError(f"{path}: unexpected columns {header}")
    body = [ln.split(",") for ln in lines[i + 1:] if ln]
    cols = {}
    if body:
        arr = list(zip(*body))
        cols["time"] = np.array([float(v) for v in arr[0]])
        for j, name in enumerate(COLUMNS[1:], start=1):
            cols[name] = np.array([int(v) for v in arr[j]], dtype=np.int64)
    else:
        cols = {c: np.zeros(0) for c in COLUMNS}
    extra = {k: float(meta[k]) for k in ("horizon", "start") if k in meta}
    return EventLog(cols, float(meta.get("tick_size", 0.01)), int(meta.get("m_half_depth", 0)), extra)


def write_snapshots(snapshots, path):
    with open(path, "w") as f:
        for snap in snapshots:
            f.write(json.dumps(snap, sort_keys=True) + "\n")
    return Path(path)


def read_snapshots(path):
    with open(path) as f:
        return [json.loads(ln) for ln in f if ln.strip()]


# -- run configs -----------------------------------------------------------------

_DIST = {
    "type": "object",
    "required": ["p"],
    "properties": {
        "p": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "support_min": {"type": "integer", "minimum": 0},
        "spikes": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                              "items": {"type": "number"}}},
    },
    "additionalProperties": False,
}

_TYPE_NAMES = [e.name for e in EventType]

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["hawkes"],
    "properties": {
        "hawkes": {
            "type": "object",
            "required": ["mu", "is_alpha", "is_beta"],
            "properties": {
                "mu": {"type": "array", "items": {"type": "number", "minimum": 0},
                       "minItems": N_TYPES, "maxItems": N_TYPES},
                "kernels": {"type": "array", "items": {
                    "type": "object",
                    "required": ["source", "target", "a", "b", "c"],
                    "properties": {
                        "source": {"enum": _TYPE_NAMES}, "target": {"enum": _TYPE_NAMES},
                        "a": {"type": "number"}, "b": {"type": "number", "exclusiveMinimum": 1},
                        "c": {"type": "number", "exclusiveMinimum": 0},
                        "horizon": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "additionalProperties": False}},
                "is_alpha": {"type": "number", "exclusiveMinimum": 0},
                "is_beta": {"type": "number", "exclusiveMinimum": 0},
                "tick_size": {"type": "number", "exclusiveMinimum": 0},
                "symmetric": {"type": "boolean"},
                "tail_mass": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "additionalProperties": False,
        },
        "handlers": {
            "type": "object",
            "properties": {name: _DIST for name in ("eta_is", "eta_t", "eta_t1", "kappa_is", "kappa_t",
                                                    "kappa_mo", "kappa_d", "deep_volume")},
            "additionalProperties": False,
        },
        "init": {
            "type": "object",
            "properties": {"s0": {"type": "integer", "minimum": 1},
                           "m0_top": {"type": "number"}, "m0_deep": {"type": "number"},
                           "bid_price": {"type": "integer"}},
            "additionalProperties": False,
        },
        "m_half_depth": {"type": "integer", "minimum": 3},
        "seed": {"type": ["integer", "null"]},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "notes": {"type": "string"},
    },
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    spec: HawkesSpec
    handlers: HandlerConfig = field(default_factory=HandlerConfig)
    init: InitConfig = field(default_factory=InitConfig)
    m_half_depth: int = 60
    seed: int | None = None
    horizon: float = 1e4
    raw: dict = field(default_factory=dict, repr=False)

    def with_critical(self, alpha=None, beta=None, eta=None) -> "RunConfig":
        """Copy with new in-spread (alpha, beta) and/or one common offset parameter."""
        spec = self.spec
        spec = HawkesSpec(spec.mu.copy(), spec.a.copy(), spec.b.copy(), spec.c.copy(), spec.horizon.copy(),
                          spec.is_alpha if alpha is None else float(alpha),
                          spec.is_beta if beta is None else float(beta),
                          spec.tick_size, spec.symmetric, spec.is_types)
        h = self.handlers
        if eta is not None:
            h = replace(h, eta_is=replace(h.eta_is, p=float(eta)), eta_t=replace(h.eta_t, p=float(eta)),
                        eta_t1=replace(h.eta_t1, p=float(eta)))
        return replace(self, spec=spec, handlers=h)

    def to_dict(self) -> dict:
        return run_config_to_dict(self)


def _path_str(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        parts.append(missing)
    return ".".join(parts) or "<root>"


def validate_config(raw: dict):
    v = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(v.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = [f"{_path_str(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid run config:\n  " + "\n  ".join(msgs))


def _dist(d: dict | None, default: GeomWithSpikes) -> GeomWithSpikes:
    if d is None:
        return default
    return GeomWithSpikes(float(d["p"]), int(d.get("support_min", default.support_min)),
                          tuple((int(v), float(w)) for v, w in d.get("spikes", default.spikes)))


def _dist_dict(g: GeomWithSpikes) -> dict:
    out = {"p": g.p, "support_min": g.support_min}
    if g.spikes:
        out["spikes"] = [[v, w] for v, w in g.spikes]
    return out


def run_config_from_dict(raw: dict) -> RunConfig:
    validate_config(raw)
    hk = raw["hawkes"]
    mu = np.array(hk["mu"], dtype=float)
    sym = bool(hk.get("symmetric", False))
    tail = float(hk.get("tail_mass", 1e-3))
    spec = HawkesSpec.zeros(mu, is_alpha=float(hk["is_alpha"]), is_beta=float(hk["is_beta"]),
                            tick_size=float(hk.get("tick_size", 0.01)))
    seen = set()
    for j, k in enumerate(hk.get("kernels", [])):
        src, tgt = EventType[k["source"]], EventType[k["target"]]
        hor = k.get("horizon") or PowerLawKernel.horizon_for_tail(k["b"], k["c"], tail)
        pairs = [(tgt, src)]
        if sym:
            pairs.append((tgt.mirror(), src.mirror()))
        for t_, s_ in pairs:
            if (t_, s_) in seen:
                raise ConfigError(f"hawkes.kernels.{j}: duplicate kernel {s_.name} -> {t_.name}")
            seen.add((t_, s_))
            spec.a[t_, s_], spec.b[t_, s_], spec.c[t_, s_] = k["a"], k["b"], k["c"]
            spec.horizon[t_, s_] = hor
    try:
        spec = HawkesSpec(spec.mu, spec.a, spec.b, spec.c, spec.horizon, spec.is_alpha, spec.is_beta,
                          spec.tick_size, sym)
    except DomainError as e:
        raise ConfigError(f"hawkes: {e}") from None
    hd = raw.get("handlers", {})
    base = HandlerConfig()
    try:
        handlers = HandlerConfig(
            eta_is=_dist(hd.get("eta_is"), base.eta_is), eta_t=_dist(hd.get("eta_t"), base.eta_t),
            eta_t1=_dist(hd.get("eta_t1"), base.eta_t1), kappa_is=_dist(hd.get("kappa_is"), base.kappa_is),
            kappa_t=_dist(hd.get("kappa_t"), base.kappa_t), kappa_mo=_dist(hd.get("kappa_mo"), base.kappa_mo),
            kappa_d=_dist(hd.get("kappa_d"), base.kappa_d),
            deep_volume=DeepVolumeDist(_dist(hd.get("deep_volume"), base.deep_volume.per_level)))
        init = InitConfig(**raw.get("init", {}))
    except DomainError as e:
        raise ConfigError(f"handlers/init: {e}") from None
    return RunConfig(spec=spec, handlers=handlers, init=init, m_half_depth=int(raw.get("m_half_depth", 60)),
                     seed=raw.get("seed"), horizon=float(raw.get("horizon", 1e4)), raw=raw)


def read_run_config(source) -> RunConfig:
    """Load a run config from a path, a JSON string or an already-parsed dict."""
    if isinstance(source, dict):
        return run_config_from_dict(source)
    p = Path(source)
    try:
        text = p.read_text()
    except (OSError, ValueError):
        text = str(source)
        if not text.lstrip().startswith("{"):
            raise
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    return run_config_from_dict(raw)


def run_config_to_dict(cfg: RunConfig) -> dict:
    sp = cfg.spec
    kernels = []
    done = set()
    for s_ in range(sp.dim):
        for t_ in range(sp.dim):
            if sp.a[t_, s_] == 0 or (t_, s_) in done:
                continue
            kernels.append({"source": EventType(s_).name, "target": EventType(t_).name,
                            "a": float(sp.a[t_, s_]), "b": float(sp.b[t_, s_]), "c": float(sp.c[t_, s_]),
                            "horizon": float(sp.horizon[t_, s_])})
            done.add((t_, s_))
            if sp.symmetric:
                from .core import MIRROR
                done.add((int(MIRROR[t_]), int(MIRROR[s_])))
    h = cfg.handlers
    return {
        "hawkes": {"mu": [float(x) for x in sp.mu], "kernels": kernels, "is_alpha": float(sp.is_alpha),
                   "is_beta": float(sp.is_beta), "tick_size": float(sp.tick_size), "symmetric": bool(sp.symmetric)},
        "handlers": {"eta_is": _dist_dict(h.eta_is), "eta_t": _dist_dict(h.eta_t), "eta_t1": _dist_dict(h.eta_t1),
                     "kappa_is": _dist_dict(h.kappa_is), "kappa_t": _dist_dict(h.kappa_t),
                     "kappa_mo": _dist_dict(h.kappa_mo), "kappa_d": _dist_dict(h.kappa_d),
                     "deep_volume": _dist_dict(h.deep_volume.per_level)},
        "init": {"s0": cfg.init.s0, "m0_top": cfg.init.m0_top, "m0_deep": cfg.init.m0_deep,
                 "bid_price": cfg.init.bid_price},
        "m_half_depth": int(cfg.m_half_depth), "seed": cfg.seed, "horizon": float(cfg.horizon),
    }


def write_run_config(cfg: RunConfig, path):
    Path(path).write_text(json.dumps(run_config_to_dict(cfg), indent=2) + "\n")
    return Path(path)


def reference_config_path() -> Path:
    return Path(__file__).parent / "data" / "reference_config.json"


def reference_config() -> RunConfig:
    return read_run_config(reference_config_path())


# -- LOBSTER -----------------------------------------------------------------------

LOBSTER_KINDS = {1: "submission", 2: "cancellation", 3: "deletion", 4: "visible_execution",
                 5: "hidden_execution", 6: "cross", 7: "halt"}
PRICE_SCALE = 10_000  # LOBSTER prices are currency * 1e4
EMPTY_ASK, EMPTY_BID = 9_999_999_999, -9_999_999_999


@dataclass(frozen=True)
class RawLobsterEvent:
    time: float
    kind: str
    order_id: int
    size: int
    price: int
    direction: str  # "buy" or "sell"
    line: int = 0


@dataclass(frozen=True)
class BookSnapshotRow:
    ask_prices: tuple
    ask_sizes: tuple
    bid_prices: tuple
    bid_sizes: tuple

    @property
    def depth(self) -> int:
        return len(self.ask_prices)

    def levels(self, side: str):
        """Occupied (price, size) pairs of one side, best first."""
        px, sz = (self.ask_prices, self.ask_sizes) if side == "ask" else (self.bid_prices, self.bid_sizes)
        return [(p, s) for p, s in zip(px, sz) if s > 0 and p not in (EMPTY_ASK, EMPTY_BID)]


def _tick_units(tick_size: float) -> int:
    u = tick_size * PRICE_SCALE
    if abs(u - round(u)) > 1e-9 or round(u) < 1:
        raise DomainError(f"tick size {tick_size} is not a whole number of 1e-4 currency units")
    return int(round(u))


def _parse_book(row, line, unit):
    if len(row) == 0 or len(row) % 4:
        raise LobsterParseError(f"orderbook row has {len(row)} columns, expected a multiple of 4", line)
    try:
        v = [int(x) for x in row]
    except ValueError:
        raise LobsterParseError("non-integer orderbook field", line) from None
    ap, asz, bp, bsz = v[0::4], v[1::4], v[2::4], v[3::4]
    for p, s in zip(ap + bp, asz + bsz):
        if s > 0 and p not in (EMPTY_ASK, EMPTY_BID) and p % unit:
            raise LobsterParseError(f"price {p} is not on the tick grid", line)
    book = BookSnapshotRow(tuple(ap), tuple(asz), tuple(bp), tuple(bsz))
    a, b = book.levels("ask"), book.levels("bid")
    if a and b and a[0][0] <= b[0][0]:
        raise LobsterParseError(f"crossed book: ask {a[0][0]} <= bid {b[0][0]}", line)
    for lv, sign in ((a, 1), (b, -1)):
        px = [p for p, _ in lv]
        if any(sign * (q - p) <= 0 for p, q in zip(px, px[1:])):
            raise LobsterParseError("prices not monotone within a side", line)
    return book


def _parse_message(row, line, unit, last_time):
    if len(row) < 6:
        raise LobsterParseError(f"message row has {len(row)} columns, expected 6", line)
    try:
        t = float(row[0])
        kind, oid, size, price, direc = (int(x) for x in row[1:6])
    except ValueError:
        raise LobsterParseError("malformed message field", line) from None
    if not math.isfinite(t) or t < last_time:
        raise LobsterParseError(f"time {t} goes backwards (previous {last_time})", line)
    if kind not in LOBSTER_KINDS:
        raise LobsterParseError(f"unknown event kind {kind}", line)
    if direc not in (1, -1):
        raise LobsterParseError(f"direction must be 1 or -1, got {direc}", line)
    if kind != 7 and price % unit:
        raise LobsterParseError(f"price {price} is not on the tick grid", line)
    return RawLobsterEvent(t, LOBSTER_KINDS[kind], oid, size, price, "buy" if direc == 1 else "sell", line)


def parse_lobster(message_file, orderbook_file, tick_size: float = 0.01):
    """Lazily yield aligned ``(RawLobsterEvent, BookSnapshotRow)`` pairs.

    The book row is the state after the message, as in the vendor format.
    """
    unit = _tick_units(tick_size)
    last = -math.inf
    with open(message_file, newline="") as fm, open(orderbook_file, newline="") as fb:
        rm, rb = csv.reader(fm), csv.reader(fb)
        line = 0
        while True:
            m = next(rm, None)
            b = next(rb, None)
            line += 1
            if m is None and b is None:
                return
            if m is None or b is None:
                which = "orderbook" if b is None else "message"
                raise LobsterParseError(f"{which} file ended early (files are not row-aligned)", line)
            if not m and not b:
                continue
            ev = _parse_message(m, line, unit, last)
            last = ev.time
            yield ev, _parse_book(b, line, unit)


# -- classification into the 12-type taxonomy ---------------------------------------

@dataclass
class ClassificationStats:
    classified: int = 0
    dropped_deep: int = 0  # beyond the modelled half depth
    skipped: int = 0  # book state did not allow a classification
    hidden: int = 0
    crosses: int = 0
    halts: int = 0
    outside_session: int = 0

    @property
    def considered(self) -> int:
        return self.classified + self.dropped_deep + self.skipped

    @property
    def dropped_fraction(self) -> float:
        n = self.considered
        return (self.dropped_deep + self.skipped) / n if n else 0.0


def _undo(book: BookSnapshotRow, ev: RawLobsterEvent) -> BookSnapshotRow:
    """Reconstruct the book just before ``ev`` from the book just after it."""
    side = "bid" if ev.direction == "buy" else "ask"
    lv = dict(book.levels(side))
    if ev.kind == "submission":
        lv[ev.price] = lv.get(ev.price, 0) - ev.size
    elif ev.kind in ("cancellation", "deletion", "visible_execution"):
        lv[ev.price] = lv.get(ev.price, 0) + ev.size
    lv = {p: s for p, s in lv.items() if s > 0}
    px = sorted(lv, reverse=(side == "bid"))
    k = book.depth
    px = px[:k]
    prices = tuple(px) + ((EMPTY_ASK if side == "ask" else EMPTY_BID),) * (k - len(px))
    sizes = tuple(lv[p] for p in px) + (0,) * (k - len(px))
    if side == "ask":
        return replace(book, ask_prices=prices, ask_sizes=sizes)
    return replace(book, bid_prices=prices, bid_sizes=sizes)


def _book_state(book, side, unit, m_half):
    """(best price ticks, q_top, m_top, q_deep, m_deep) for one side, or None if empty."""
    own = book.levels(side)
    other = book.levels("bid" if side == "ask" else "ask")
    if not own or not other:
        return None
    sgn = 1 if side == "ask" else -1
    best = own[0][0] // unit
    spread = (book.levels("ask")[0][0] - book.levels("bid")[0][0]) // unit
    cap = max(2, (2 * m_half - spread) // 2)
    if len(own) > 1:
        m_top = min(sgn * (own[1][0] // unit - best), cap - 1)
    else:
        m_top = cap - 1
    q_deep = sum(s for p, s in own[1:] if sgn * (p // unit - best) < cap)
    return best, own[0][1], m_top, q_deep, max(1, cap - m_top)


def classify_events(stream, shape_median: float, tick_size: float = 0.01, stats: ClassificationStats | None = None,
                    session=(34_200.0, 57_600.0)):
    """Map LOBSTER pairs onto the 12 event types; yields ``EventRecord``.

    The half depth is ``shape_median - 1`` ticks. Offsets are ticks from the
    same-side best: the improvement for in-spread orders, the distance behind
    the best otherwise. ``record.extra["book"]`` holds the post-event
    meta-queue state ``(bid, ask, q_top_bid, ...)`` in log column order.
    """
    unit = _tick_units(tick_size)
    m_half = max(2, int(math.ceil(shape_median)) - 1)
    stats = stats if stats is not None else ClassificationStats()
    prev = None
    for ev, book in stream:
        pre = prev if prev is not None else _undo(book, ev)
        prev = book
        if session is not None and not (session[0] <= ev.time <= session[1]):
            stats.outside_session += 1
            continue
        if ev.kind == "hidden_execution":
            stats.hidden += 1
            continue
        if ev.kind == "cross":
            stats.crosses += 1
            continue
        if ev.kind == "halt":
            stats.halts += 1
            continue
        side = "bid" if ev.direction == "buy" else "ask"
        pre_st = _book_state(pre, side, unit, m_half)
        post = [_book_state(book, s, unit, m_half) for s in ("bid", "ask")]
        if pre_st is None or post[0] is None or post[1] is None:
            stats.skipped += 1
            continue
        a1, b1 = pre.levels("ask")[0][0] // unit, pre.levels("bid")[0][0] // unit
        spread = a1 - b1
        best, _, m_top, _, _ = pre_st
        p = ev.price // unit
        d = (p - best) if side == "ask" else (best - p)
        within = 2 * d + spread <= 2 * m_half
        ask_side = side == "ask"
        fam = None
        if ev.kind == "submission":
            if d < 0:
                if (ask_side and p > b1) or (not ask_side and p < a1):
                    fam, off = "IS", -d
            elif d < m_top:
                fam, off = "LO_T", d
            elif within:
                fam, off = "LO_D", d
            else:
                stats.dropped_deep += 1
                continue
        elif ev.kind in ("cancellation", "deletion"):
            if d == 0:
                fam, off = "CO_T", 0
            elif d > 0 and within:
                fam, off = "CO_D", d
            elif d > 0:
                stats.dropped_deep += 1
                continue
        elif ev.kind == "visible_execution" and d == 0:
            fam, off = "MO", 0
        if fam is None:
            stats.skipped += 1
            continue
        name = {"IS": "LO_{}_IS", "LO_T": "LO_{}_T", "LO_D": "LO_{}_D", "CO_T": "CO_{}_T",
                "CO_D": "CO_{}_D", "MO": "MO_{}"}[fam].format(side)
        et = EventType[name]
        (bb, bqt, bmt, bqd, bmd), (ab, aqt, amt, aqd, amd) = post
        stats.classified += 1
        moved = (ab != a1) if ask_side else (bb != b1)
        yield EventRecord(
            time=ev.time, event_type=et, size=int(ev.size), offset_ticks=int(off),
            mid_before=TickPrice(a1 + b1, tick_size), mid_after=TickPrice(ab + bb, tick_size),
            spread_before=int(spread), spread_after=int(ab - bb),
            depleted_levels=int(fam == "MO" and moved),
            added=int(ev.size) if fam in ("IS", "LO_T", "LO_D") else 0,
            removed=int(ev.size) if fam in ("CO_T", "CO_D", "MO") else 0,
            extra={"book": (bb, ab, bqt, aqt, bmt, amt, bqd, aqd, bmd, amd), "m_half_depth": m_half,
                   "book_before": _state_tuple(pre, unit, m_half)})


def _state_tuple(book, unit, m_half):
    (bb, bqt, bmt, bqd, bmd), (ab, aqt, amt, aqd, amd) = (_book_state(book, s, unit, m_half) for s in ("bid", "ask"))
    return bb, ab, bqt, aqt, bmt, amt, bqd, aqd, bmd, amd


def records_to_log(records, tick_size: float = 0.01, m_half_depth: int | None = None, horizon=None) -> EventLog:
    """Collect classified records into an ``EventLog`` (first record's pre-state becomes the INIT row)."""
    recs = list(records)
    cols = {c: [] for c in COLUMNS}
    if recs and "book_before" in recs[0].extra:
        cols["time"].append(recs[0].time)
        cols["type"].append(INIT_TYPE)
        for name, v in zip(COLUMNS[2:], (0, 0) + tuple(recs[0].extra["book_before"]) + (0,) * 5):
            cols[name].append(int(v))
    for r in recs:
        if m_half_depth is None:
            m_half_depth = r.extra.get("m_half_depth", 0)
        cols["time"].append(r.time)
        cols["type"].append(int(r.event_type))
        cols["size"].append(r.size)
        cols["offset"].append(r.offset_ticks)
        for name, v in zip(COLUMNS[4:14], r.extra["book"]):
            cols[name].append(int(v))
        cols["depleted_levels"].append(r.depleted_levels)
        for name in ("added", "removed", "purged", "replenished"):
            cols[name].append(getattr(r, name))
    meta = {}
    if recs:
        meta["start"] = float(recs[0].time)
        meta["horizon"] = float(horizon if horizon is not None else recs[-1].time)
    arrays = {c: np.asarray(v) for c, v in cols.items()}
    if not recs:
        arrays = {c: np.zeros(0) for c in COLUMNS}
    log = EventLog(arrays, tick_size, int(m_half_depth or 0), meta)
    return log


def load_lobster(message_file, orderbook_file, shape_median: float, tick_size: float = 0.01,
                 session=(34_200.0, 57_600.0)):
    """Parse, classify and collect a LOBSTER pair. Returns ``(EventLog, ClassificationStats, frames)``.

    ``frames`` is a ``analytics.BookFrames`` built from the raw book rows for
    shape and sparsity metrics at full level resolution.
    """
    from .analytics import BookFrames
    stats = ClassificationStats()
    books = []

    def tee():
        for ev, book in parse_lobster(message_file, orderbook_file, tick_size):
            if session is None or session[0] <= ev.time <= session[1]:
                books.append((ev.time, book))
            yield ev, book

    recs = list(classify_events(tee(), shape_median, tick_size, stats, session))
    log = records_to_log(recs, tick_size)
    frames = BookFrames.from_lobster(books, tick_size) if books else None
    return log, stats, frames


__all__ = [
    "ConfigError", "LobsterParseError", "write_event_log", "read_event_log", "write_snapshots", "read_snapshots",
    "CONFIG_SCHEMA", "RunConfig", "validate_config", "run_config_from_dict", "read_run_config",
    "run_config_to_dict", "write_run_config", "reference_config", "reference_config_path",
    "RawLobsterEvent", "BookSnapshotRow", "parse_lobster", "ClassificationStats", "classify_events",
    "records_to_log", "load_lobster", "INIT_TYPE",
]
