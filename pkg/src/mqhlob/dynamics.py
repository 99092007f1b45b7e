"""Meta-queue event handlers and the coupled Hawkes/book simulation loop.

The book is carried as a flat int64 vector (see ``core.STATE_LEN``) so the
handlers can run compiled inside the event loop. Each handler mutates the
vector in place and fills a small info vector::

    [size, offset, depleted_levels, added, removed, purged, replenished]

The depth constraint is kept in integer form: per side
``m_top + m_deep <= (2 M - s) // 2``. The spread is clamped at ``2 M - 4`` so
that bound never drops below 2 and both meta-queues always fit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import core
from .core import (DEFAULT_PRICE_ANCHOR, N_TYPES, DomainError, EventType, LobState, MQHError, Side,
                   StateCorruptionError)
from .eventlog import COLUMNS, INIT_TYPE, EventLog
from .hawkes import ST_END, ST_OVERFLOW, HawkesSpec, SimulationError, _next_event, _push, check_stability
from .sampling import (KAPPA_SPIKES, REJECTION_BUDGET, DeepVolumeDist, GeomWithSpikes,
                       SamplingError, _draw, _draw_bounded)

# flat layout, duplicated as module constants so numba folds them
S_SPREAD, S_BID, S_M = 0, 1, 2
QT, MT, QD, MD = 0, 1, 2, 3

# distribution table rows
ETA_IS, ETA_T, ETA_T1, KAPPA_IS, KAPPA_T, KAPPA_MO, KAPPA_D, DEEP = range(8)

# info vector slots
I_SIZE, I_OFFSET, I_DEPLETED, I_ADDED, I_REMOVED, I_PURGED, I_REPLENISHED = range(7)

# handler families
F_LO_D, F_CO_D, F_LO_T, F_CO_T, F_MO, F_IS = range(6)
FAMILY_OF = np.array([F_LO_D, F_CO_D, F_LO_T, F_CO_T, F_MO, F_IS,
                      F_IS, F_LO_T, F_CO_T, F_MO, F_LO_D, F_CO_D], dtype=np.int64)

# status codes
OK, END, OVERFLOW, INVARIANT, EXHAUSTED, BUDGET, PRECONDITION = 0, 1, 2, 3, 4, 5, 6
MAX_WATERFALL = 100_000


class LiquidityExhaustionError(MQHError):
    pass


class InvariantError(StateCorruptionError):
    pass


class PreconditionError(MQHError, ValueError):
    pass


# -- purge and partition -----------------------------------------------------

@njit(cache=True)
def _round_ratio(q, a, b):
    # round(q a / b) half away from zero, for non-negative integers
    return (2 * q * a + b) // (2 * b)


@njit(cache=True)
def _xi(q, purged, total):
    if purged <= 0:
        return 0
    if purged >= total:
        return q
    v = _round_ratio(q, purged, total)
    if v > q - 1:
        v = q - 1
    return max(v, 0)


@njit(cache=True)
def _partition(q, new_levels, old_levels):
    if new_levels >= old_levels:
        return q
    v = _round_ratio(q, new_levels, old_levels)
    if v > q - 1:
        v = q - 1
    if v < 1:
        v = 1
    return v


def xi_uniform(q: int, purged_levels: int, total_levels: int) -> int:
    """Shares removed when ``purged_levels`` of ``total_levels`` flat levels are cut."""
    if total_levels < 1 or not 0 <= purged_levels <= total_levels:
        raise DomainError("need 0 <= purged_levels <= total_levels and total_levels >= 1")
    return int(_xi(int(q), int(purged_levels), int(total_levels)))


def partition_uniform(q_deep: int, new_top_levels: int, old_deep_levels: int) -> int:
    """Shares handed to a new top of ``new_top_levels`` carved out of a flat deep queue."""
    if not 1 <= new_top_levels <= old_deep_levels or q_deep < 1:
        raise DomainError("need 1 <= new_top_levels <= old_deep_levels and q_deep >= 1")
    return int(_partition(int(q_deep), int(new_top_levels), int(old_deep_levels)))


# -- compiled draws ------------------------------------------------------------

@njit(cache=True)
def _bounded(di, lo, hi, dp, dsmin, dn, dvals, dcum, rng):
    return _draw_bounded(dp[di], dsmin[di], dn[di], dvals[di], dcum[di], rng, lo, hi)


@njit(cache=True)
def _internal(di, lo, hi, dp, dsmin, dn, dvals, dcum, rng, forced, fptr):
    """Draw used by the handlers themselves; scripted values in ``forced`` take priority."""
    if fptr[0] < forced.size:
        v = forced[fptr[0]]
        fptr[0] += 1
        if v < lo or (hi >= 0 and v > hi):
            return -2
        return v
    return _bounded(di, lo, hi, dp, dsmin, dn, dvals, dcum, rng)


@njit(cache=True)
def _deep_draw(m, dp, dsmin, dn, dvals, dcum, rng, forced, fptr):
    if fptr[0] < forced.size:
        v = forced[fptr[0]]
        fptr[0] += 1
        return v if v >= 1 else -2
    tot = 0
    for _ in range(m):
        tot += _draw(dp[DEEP], dsmin[DEEP], dn[DEEP], dvals[DEEP], dcum[DEEP], rng)
    return tot


# -- handlers ----------------------------------------------------------------

@njit(cache=True)
def _cap(st):
    return (2 * st[S_M] - st[S_SPREAD]) // 2


@njit(cache=True)
def _restore_side(st, side, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr):
    b = 3 + 4 * side
    cap = _cap(st)
    mt = st[b + MT]
    md = st[b + MD]
    if mt + md <= cap:
        return OK
    if cap - mt >= 1:
        new_md = cap - mt
        dq = _xi(st[b + QD], md - new_md, md)
        st[b + QD] -= dq
        st[b + MD] = new_md
        info[I_PURGED] += dq
        return OK
    # the top alone no longer fits: drop the whole deep queue and narrow the top
    info[I_PURGED] += st[b + QD]
    st[b + MT] = cap - 1
    st[b + MD] = 1
    v = _deep_draw(1, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)
    if v < 0:
        return BUDGET
    st[b + QD] = v
    info[I_REPLENISHED] += v
    return OK


@njit(cache=True)
def _restore(st, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr):
    r = _restore_side(st, 0, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)
    if r != OK:
        return r
    return _restore_side(st, 1, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)


@njit(cache=True)
def _move_best(st, side, ticks):
    # widen (ticks > 0) or tighten (ticks < 0) the spread by moving this side's best
    st[S_SPREAD] += ticks
    if side == 1:
        st[S_BID] -= ticks


@njit(cache=True)
def _refill_deep(st, side, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr):
    """Give the side a fresh deep queue drawn from the unseen-volume law."""
    b = 3 + 4 * side
    cap = _cap(st)
    if cap - st[b + MT] >= 1:
        st[b + MD] = cap - st[b + MT]
    else:
        st[b + MT] = cap - 1
        st[b + MD] = 1
    v = _deep_draw(st[b + MD], dp, dsmin, dn, dvals, dcum, rng, forced, fptr)
    if v < 0:
        return BUDGET
    st[b + QD] = v
    info[I_REPLENISHED] += v
    return OK


@njit(cache=True)
def _deplete_top(st, side, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr):
    """The top queue has just emptied: the best retreats and deep liquidity is promoted."""
    b = 3 + 4 * side
    mt_old = st[b + MT]
    smax = 2 * st[S_M] - 4
    jump = min(mt_old, smax - st[S_SPREAD])
    if jump < 0:
        jump = 0
    _move_best(st, side, jump)
    rest = mt_old - jump  # empty levels the spread could not absorb stay in the top
    md = st[b + MD]
    qd = st[b + QD]
    eta = _internal(ETA_T1, 1, md, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)
    if eta < 0:
        return BUDGET
    info[I_DEPLETED] += 1
    if eta < md and qd >= 2:
        q_new = _partition(qd, eta, md)
        st[b + QT] = q_new
        st[b + MT] = eta + rest
        st[b + QD] = qd - q_new
        st[b + MD] = md - eta
        return OK
    st[b + QT] = qd
    st[b + MT] = md + rest
    return _refill_deep(st, side, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)


@njit(cache=True)
def _apply(st, k, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr, marks):
    """Apply event type k. ``marks`` = (eta, kappa); -1 entries are drawn here."""
    for i in range(info.size):
        info[i] = 0
    side = 0 if k < 6 else 1
    b = 3 + 4 * side
    fam = FAMILY_OF[k]
    r = OK
    if fam == F_LO_D:
        kap = marks[1] if marks[1] >= 0 else _bounded(KAPPA_D, 1, -1, dp, dsmin, dn, dvals, dcum, rng)
        if kap < 1:
            return BUDGET
        st[b + QD] += kap
        info[I_SIZE] = kap
        info[I_OFFSET] = st[b + MT]
        info[I_ADDED] = kap
    elif fam == F_CO_D:
        kap = marks[1] if marks[1] >= 0 else _bounded(KAPPA_D, 1, -1, dp, dsmin, dn, dvals, dcum, rng)
        if kap < 1:
            return BUDGET
        kap = min(kap, st[b + QD])
        info[I_SIZE] = kap
        info[I_OFFSET] = st[b + MT]
        info[I_REMOVED] = kap
        st[b + QD] -= kap
        if st[b + QD] == 0:
            st[b + MT] += st[b + MD]
            r = _refill_deep(st, side, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)
    elif fam == F_LO_T:
        mt = st[b + MT]
        eta = marks[0] if marks[0] >= 0 else _bounded(ETA_T, 0, mt - 1, dp, dsmin, dn, dvals, dcum, rng)
        if eta < 0:
            return BUDGET
        if eta > mt - 1:
            return PRECONDITION
        kap = marks[1] if marks[1] >= 0 else _bounded(KAPPA_T, 1, -1, dp, dsmin, dn, dvals, dcum, rng)
        if kap < 1:
            return BUDGET
        info[I_SIZE] = kap
        info[I_OFFSET] = eta
        info[I_ADDED] = kap
        if eta == 0:
            st[b + QT] += kap
        else:
            st[b + MD] += mt - eta
            st[b + MT] = eta
            st[b + QD] += kap
    elif fam == F_CO_T:
        kap = marks[1] if marks[1] >= 0 else _bounded(KAPPA_T, 1, -1, dp, dsmin, dn, dvals, dcum, rng)
        if kap < 1:
            return BUDGET
        kap = min(kap, st[b + QT])
        info[I_SIZE] = kap
        info[I_REMOVED] = kap
        st[b + QT] -= kap
        if st[b + QT] == 0:
            r = _deplete_top(st, side, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)
    elif fam == F_MO:
        kap = marks[1] if marks[1] >= 0 else _bounded(KAPPA_MO, 1, -1, dp, dsmin, dn, dvals, dcum, rng)
        if kap < 1:
            return BUDGET
        info[I_SIZE] = kap
        info[I_REMOVED] = kap
        rem = kap
        n = 0
        while True:
            if rem < st[b + QT]:
                st[b + QT] -= rem
                break
            rem -= st[b + QT]
            st[b + QT] = 0
            r = _deplete_top(st, side, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)
            if r != OK:
                return r
            if rem == 0:
                break
            n += 1
            if n > MAX_WATERFALL:
                return EXHAUSTED
    else:
        s = st[S_SPREAD]
        if s < 2:
            return PRECONDITION
        eta = marks[0] if marks[0] >= 0 else _bounded(ETA_IS, 1, s - 1, dp, dsmin, dn, dvals, dcum, rng)
        if eta < 0:
            return BUDGET
        if eta > s - 1:
            return PRECONDITION
        kap = marks[1] if marks[1] >= 0 else _bounded(KAPPA_IS, 1, -1, dp, dsmin, dn, dvals, dcum, rng)
        if kap < 1:
            return BUDGET
        info[I_SIZE] = kap
        info[I_OFFSET] = eta
        info[I_ADDED] = kap
        st[b + MD] += st[b + MT]
        st[b + QD] += st[b + QT]
        st[b + MT] = eta
        st[b + QT] = kap
        _move_best(st, side, -eta)
    if r != OK:
        return r
    return _restore(st, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr)


@njit(cache=True)
def _valid(st):
    s = st[S_SPREAD]
    if s < 1:
        return False
    cap2 = 2 * st[S_M]
    for side in range(2):
        b = 3 + 4 * side
        if st[b + MT] < 1 or st[b + MD] < 1 or st[b + QT] < 1 or st[b + QD] < 1:
            return False
        if s + 2 * (st[b + MT] + st[b + MD]) > cap2:
            return False
    return True


@njit(cache=True)
def _volume(st):
    return st[3 + QT] + st[3 + QD] + st[7 + QT] + st[7 + QD]


@njit(cache=True)
def _is_mult(s, tick, alpha, beta):
    if s <= 1:
        return 0.0
    return (tick * (s - 1) / alpha) ** beta


@njit(cache=True)
def _run(st, t0, horizon, mu, ptr, idx, pa, pb, pc, ph, hmax, tick, alpha, beta, is_a, is_b,
         dp, dsmin, dn, dvals, dcum, rng, max_events, validate):
    """Coupled loop. Returns (times, types, rows, n, status, final time)."""
    d = mu.size
    buf_t = np.empty(1024)
    buf_k = np.empty(1024, dtype=np.int64)
    head = 0
    tail = 0
    full = np.zeros(d)
    pos = np.zeros(d)
    mult = np.ones(d)
    g = _is_mult(st[S_SPREAD], tick, alpha, beta)
    if is_a >= 0:
        mult[is_a] = g
        mult[is_b] = g
    cap = 4096
    out_t = np.empty(cap)
    out_k = np.empty(cap, dtype=np.int64)
    rows = np.empty((cap, 18), dtype=np.int64)
    info = np.zeros(7, dtype=np.int64)
    forced = np.empty(0, dtype=np.int64)
    fptr = np.zeros(1, dtype=np.int64)
    marks = np.array([-1, -1], dtype=np.int64)
    n = 0
    t = t0
    status = OK
    while n < max_events:
        t, k, hs, head = _next_event(t, horizon, mu, mult, buf_t, buf_k, head, tail,
                                     ptr, idx, pa, pb, pc, ph, hmax, full, pos, rng)
        if hs == ST_END:
            status = END
            break
        if hs == ST_OVERFLOW:
            status = OVERFLOW
            break
        vol0 = _volume(st)
        status = _apply(st, k, info, dp, dsmin, dn, dvals, dcum, rng, forced, fptr, marks)
        if status != OK:
            break
        if validate:
            bal = vol0 + info[I_ADDED] - info[I_REMOVED] - info[I_PURGED] + info[I_REPLENISHED]
            if not _valid(st) or bal != _volume(st):
                status = INVARIANT
        buf_t, buf_k, head, tail = _push(t, k, buf_t, buf_k, head, tail)
        if n == cap:
            cap *= 2
            nt = np.empty(cap)
            nk = np.empty(cap, dtype=np.int64)
            nr = np.empty((cap, 18), dtype=np.int64)
            nt[:n] = out_t
            nk[:n] = out_k
            nr[:n] = rows
            out_t, out_k, rows = nt, nk, nr
        out_t[n] = t
        out_k[n] = k
        _fill_row(rows[n], st, info)
        n += 1
        if status != OK:
            break
        if is_a >= 0:
            g = _is_mult(st[S_SPREAD], tick, alpha, beta)
            mult[is_a] = g
            mult[is_b] = g
    return out_t[:n], out_k[:n], rows[:n], status, t


@njit(cache=True)
def _fill_row(row, st, info):
    # size, offset, bid, ask, qt_b, qt_a, mt_b, mt_a, qd_b, qd_a, md_b, md_a, depleted, ledger x4
    row[0] = info[I_SIZE]
    row[1] = info[I_OFFSET]
    row[2] = st[S_BID]
    row[3] = st[S_BID] + st[S_SPREAD]
    row[4] = st[7 + QT]
    row[5] = st[3 + QT]
    row[6] = st[7 + MT]
    row[7] = st[3 + MT]
    row[8] = st[7 + QD]
    row[9] = st[3 + QD]
    row[10] = st[7 + MD]
    row[11] = st[3 + MD]
    row[12] = info[I_DEPLETED]
    row[13] = info[I_ADDED]
    row[14] = info[I_REMOVED]
    row[15] = info[I_PURGED]
    row[16] = info[I_REPLENISHED]
    row[17] = 0


# -- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class HandlerConfig:
    eta_is: GeomWithSpikes = GeomWithSpikes(0.3)
    eta_t: GeomWithSpikes = GeomWithSpikes(0.5, support_min=0)
    eta_t1: GeomWithSpikes = GeomWithSpikes(0.3)
    kappa_is: GeomWithSpikes = GeomWithSpikes(0.02, 1, KAPPA_SPIKES)
    kappa_t: GeomWithSpikes = GeomWithSpikes(0.02, 1, KAPPA_SPIKES)
    kappa_mo: GeomWithSpikes = GeomWithSpikes(0.02, 1, KAPPA_SPIKES)
    kappa_d: GeomWithSpikes = GeomWithSpikes(0.02, 1, KAPPA_SPIKES)
    deep_volume: DeepVolumeDist = field(default_factory=DeepVolumeDist)
    xi_mode: str = "uniform"
    partition_mode: str = "uniform"

    def __post_init__(self):
        if self.xi_mode != "uniform" or self.partition_mode != "uniform":
            raise DomainError("only the uniform purge and partition rules are implemented")
        if self.eta_is.support_min < 1 or self.eta_t1.support_min < 1:
            raise DomainError("in-spread and promotion offsets start at 1")
        if self.eta_t.support_min != 0:
            raise DomainError("the top offset law starts at 0 (joining the best queue)")

    def dists(self):
        return [self.eta_is, self.eta_t, self.eta_t1, self.kappa_is, self.kappa_t, self.kappa_mo,
                self.kappa_d, self.deep_volume.per_level]

    def tables(self):
        packed = [d.packed() for d in self.dists()]
        dp = np.array([x[0] for x in packed])
        dsmin = np.array([x[1] for x in packed], dtype=np.int64)
        dn = np.array([x[2] for x in packed], dtype=np.int64)
        dvals = np.stack([x[3] for x in packed])
        dcum = np.stack([x[4] for x in packed])
        return dp, dsmin, dn, dvals, dcum


@dataclass(frozen=True)
class InitConfig:
    s0: int = 15
    m0_top: float = 0.5
    m0_deep: float = 0.5
    bid_price: int = DEFAULT_PRICE_ANCHOR

    def __post_init__(self):
        if self.s0 < 1:
            raise DomainError("initial spread must be >= 1")
        for p in (self.m0_top, self.m0_deep):
            if not 0 < p <= 1:
                raise DomainError("initial width parameters must lie in (0, 1]")


def initial_state(init: InitConfig, handlers: HandlerConfig, m_half_depth: int,
                  rng: np.random.Generator) -> np.ndarray:
    from .sampling import sample_bounded, sample_deep_volume
    if init.s0 > 2 * m_half_depth - 4:
        raise DomainError(f"initial spread {init.s0} leaves no room for both meta-queues "
                          f"with half depth {m_half_depth} (need s0 <= {2 * m_half_depth - 4})")
    st = np.zeros(core.STATE_LEN, dtype=np.int64)
    st[S_SPREAD] = init.s0
    st[S_BID] = init.bid_price
    st[S_M] = m_half_depth
    cap = (2 * m_half_depth - init.s0) // 2
    top, deep = GeomWithSpikes(init.m0_top), GeomWithSpikes(init.m0_deep)
    for side in (0, 1):
        b = 3 + 4 * side
        mt = sample_bounded(top, 1, cap - 1, rng)
        md = sample_bounded(deep, 1, cap - mt, rng)
        st[b + MT], st[b + MD] = mt, md
        st[b + QT] = sample_bounded(handlers.kappa_t, 1, None, rng)
        st[b + QD] = sample_deep_volume(handlers.deep_volume, md, rng)
    return st


# -- Python-facing handlers ---------------------------------------------------

_STATUS_MSG = {
    EXHAUSTED: "book liquidity exhausted before the order was filled",
    BUDGET: f"rejection budget of {REJECTION_BUDGET} draws exhausted or scripted draw out of range",
    PRECONDITION: "handler precondition violated",
    INVARIANT: "post-event invariant violated",
    OVERFLOW: "dominating rate overflow",
}


def _raise_status(status: int, where: str = ""):
    msg = _STATUS_MSG.get(status, f"status {status}") + (f" ({where})" if where else "")
    if status == EXHAUSTED:
        raise LiquidityExhaustionError(msg)
    if status == BUDGET:
        raise SamplingError(msg)
    if status == PRECONDITION:
        raise PreconditionError(msg)
    if status == INVARIANT:
        raise InvariantError(msg)
    raise SimulationError(msg)


def apply_event(state: LobState, event_type, eta: int | None = None, kappa: int | None = None,
                handlers: HandlerConfig | None = None, rng=None, forced=(), time: float | None = None,
                strict: bool = True):
    """Apply one event to ``state``; returns ``(new_state, EventRecord)``.

    ``eta``/``kappa`` fix the event's own marks (drawn when None). ``forced``
    scripts the draws the handler makes internally, in order: the new-top
    width after a depletion and any deep-volume replenishment total.
    ``strict=False`` accepts an input book that already breaks the depth
    constraint; the handler's restore step then brings it back in bounds.
    """
    k = EventType(int(event_type))
    handlers = handlers or HandlerConfig()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    st = state.to_array()
    if strict and not _valid(st):
        raise StateCorruptionError(f"input state violates the book invariants: {core.check_constraints(state)}")
    info = np.zeros(7, dtype=np.int64)
    marks = np.array([-1 if eta is None else int(eta), -1 if kappa is None else int(kappa)], dtype=np.int64)
    if kappa is not None and kappa < 1:
        raise DomainError("order size must be >= 1")
    fptr = np.zeros(1, dtype=np.int64)
    status = _apply(st, int(k), info, *handlers.tables(), rng, np.asarray(forced, dtype=np.int64), fptr, marks)
    if status != OK:
        _raise_status(status, k.name)
    t = state.sim_time if time is None else time
    new = LobState.from_array(st, state.tick_size, t)
    rec = core.EventRecord(
        time=t, event_type=k, size=int(info[I_SIZE]), offset_ticks=int(info[I_OFFSET]),
        mid_before=core.mid_price(state), mid_after=core.mid_price(new),
        spread_before=state.spread_ticks, spread_after=new.spread_ticks,
        depleted_levels=int(info[I_DEPLETED]), added=int(info[I_ADDED]), removed=int(info[I_REMOVED]),
        purged=int(info[I_PURGED]), replenished=int(info[I_REPLENISHED]))
    return new, rec


def _side_types(side, ask_type):
    return EventType(int(ask_type)) if Side(side) == Side.ASK else EventType(int(ask_type)).mirror()


def apply_is_limit_order(state, side, eta_is, kappa_is, **kw):
    if state.spread_ticks < 2:
        raise PreconditionError("no room inside a one-tick spread")
    if not 1 <= eta_is <= state.spread_ticks - 1:
        raise PreconditionError(f"in-spread offset {eta_is} outside [1, {state.spread_ticks - 1}]")
    return apply_event(state, _side_types(side, EventType.LO_ask_IS), eta_is, kappa_is, **kw)


def apply_top_limit_order(state, side, eta_t, kappa_t, **kw):
    m_top = state.side(Side(side)).m_top
    if not 0 <= eta_t <= m_top - 1:
        raise PreconditionError(f"top offset {eta_t} outside [0, {m_top - 1}]")
    return apply_event(state, _side_types(side, EventType.LO_ask_T), eta_t, kappa_t, **kw)


def apply_top_cancel(state, side, kappa_co, eta_t1=None, **kw):
    forced = kw.pop("forced", ())
    if eta_t1 is not None:
        forced = (int(eta_t1),) + tuple(forced)
    return apply_event(state, _side_types(side, EventType.CO_ask_T), None, kappa_co, forced=forced, **kw)


def apply_market_order(state, side, kappa_mo, **kw):
    return apply_event(state, _side_types(side, EventType.MO_ask), None, kappa_mo, **kw)


def apply_deep_limit_order(state, side, kappa_d, **kw):
    return apply_event(state, _side_types(side, EventType.LO_ask_D), None, kappa_d, **kw)


def apply_deep_cancel(state, side, kappa_co_d, **kw):
    return apply_event(state, _side_types(side, EventType.CO_ask_D), None, kappa_co_d, **kw)


# -- simulation ----------------------------------------------------------------

@dataclass(eq=False)
class SimulationResult:
    log: EventLog
    final_state: LobState
    status: str
    horizon: float
    seed: object = None

    def snapshots(self, every: int = 100):
        return snapshots_from_log(self.log, every)


def snapshots_from_log(log: EventLog, every: int = 100):
    """Full-state snapshots at rows 0, every, 2*every, ... as plain dicts."""
    if every < 1:
        raise DomainError("snapshot cadence must be >= 1")
    out = []
    for r in range(0, len(log), every):
        st = log.state(r)
        out.append({
            "row": r, "time": float(log["time"][r]), "spread": st.spread_ticks, "m_half_depth": st.m_half_depth,
            "bid": {"price": int(log["bid"][r]), "q_top": st.bid.q_top, "m_top": st.bid.m_top,
                    "q_deep": st.bid.q_deep, "m_deep": st.bid.m_deep},
            "ask": {"price": int(log["ask"][r]), "q_top": st.ask.q_top, "m_top": st.ask.m_top,
                    "q_deep": st.ask.q_deep, "m_deep": st.ask.m_deep},
        })
    return out


def run_simulation(spec: HawkesSpec, handlers: HandlerConfig, init: InitConfig, horizon: float, seed=None,
                   m_half_depth: int = 60, max_events: int = 100_000_000, validate: bool = True,
                   initial: LobState | None = None) -> SimulationResult:
    """Drive the handlers from the Hawkes stream over [0, horizon].

    Deterministic given ``seed``. With ``validate`` every event is checked for
    the depth constraint, positivity and an exact share ledger; a failure
    raises ``InvariantError``.
    """
    if spec.dim != N_TYPES:
        raise DomainError("the book simulation needs a 12-type Hawkes specification")
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if initial is not None:
        st = initial.to_array()
        m_half_depth = initial.m_half_depth
        if not _valid(st):
            raise StateCorruptionError("initial state violates the book invariants")
    else:
        st = initial_state(init, handlers, m_half_depth, rng)
    check_stability(spec, int(st[S_SPREAD]))
    st0 = st.copy()
    ptr, idx, pa, pb, pc, ph, hmax = spec.tables()
    is_a, is_b = (spec.is_types + (-1, -1))[:2]
    times, types, rows, status, t_end = _run(
        st, 0.0, float(horizon), spec.mu, ptr, idx, pa, pb, pc, ph, hmax, spec.tick_size,
        spec.is_alpha, spec.is_beta, is_a, is_b, *handlers.tables(), rng, int(max_events), bool(validate))
    tick = spec.tick_size
    # a run cut short by max_events only covers [0, last event]
    covered = float(horizon) if status == END or not len(times) else float(times[-1])
    log = _assemble_log(st0, times, types, rows, tick, m_half_depth, covered)
    if status not in (OK, END):
        if status == INVARIANT:
            raise InvariantError(f"post-event invariant violated at t={t_end:.6f} "
                                 f"(event {len(times)}, type {EventType(int(types[-1])).name})")
        _raise_status(status, f"t={t_end:.6f}")
    final = LobState.from_array(st, tick, float(times[-1]) if len(times) else 0.0)
    return SimulationResult(log=log, final_state=final,
                            status="horizon" if status == END else "max_events", horizon=float(horizon),
                            seed=None if isinstance(seed, np.random.Generator) else seed)


def _assemble_log(st0, times, types, rows, tick, m_half_depth, horizon) -> EventLog:
    n = len(times)
    cols = {"time": np.concatenate([[0.0], times]), "type": np.concatenate([[INIT_TYPE], types])}
    init_row = np.zeros(18, dtype=np.int64)
    _fill_row(init_row, st0, np.zeros(7, dtype=np.int64))
    allrows = np.vstack([init_row[None, :], rows]) if n else init_row[None, :]
    for j, name in enumerate(COLUMNS[2:]):
        cols[name] = allrows[:, j]
    return EventLog(cols, tick, int(m_half_depth), {"horizon": float(horizon), "start": 0.0})
