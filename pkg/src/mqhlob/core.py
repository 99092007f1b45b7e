"""Meta-queue order book state, event taxonomy and price arithmetic.

Prices are integers. Quotes live on whole ticks; a mid-price is carried in
half-tick units so that it is always exact.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np


class MQHError(Exception):
    """Base class for all toolkit errors."""


class DomainError(MQHError, ValueError):
    pass


class StateCorruptionError(MQHError):
    pass


DEFAULT_PRICE_ANCHOR = 10_000  # ticks; labels only, never enters the dynamics


class EventType(enum.IntEnum):
    LO_ask_D = 0
    CO_ask_D = 1
    LO_ask_T = 2
    CO_ask_T = 3
    MO_ask = 4
    LO_ask_IS = 5
    LO_bid_IS = 6
    LO_bid_T = 7
    CO_bid_T = 8
    MO_bid = 9
    LO_bid_D = 10
    CO_bid_D = 11

    @property
    def side(self) -> "Side":
        return Side.ASK if self.value < 6 else Side.BID

    @property
    def family(self) -> str:
        """One of LO_D, CO_D, LO_T, CO_T, MO, IS."""
        return _FAMILY[self.value]

    def mirror(self) -> "EventType":
        return EventType(int(MIRROR[self.value]))

    @classmethod
    def from_name(cls, name: str) -> "EventType":
        try:
            return cls[name]
        except KeyError:
            raise DomainError(f"unknown event type {name!r}") from None


_FAMILY = ("LO_D", "CO_D", "LO_T", "CO_T", "MO", "IS",
           "IS", "LO_T", "CO_T", "MO", "LO_D", "CO_D")

N_TYPES = 12
IS_TYPES = (EventType.LO_ask_IS, EventType.LO_bid_IS)
# bid/ask reflection of each type index
MIRROR = np.array([10, 11, 7, 8, 9, 6, 5, 2, 3, 4, 0, 1], dtype=np.int64)


class Side(enum.IntEnum):
    ASK = 0
    BID = 1

    def opposite(self) -> "Side":
        return Side(1 - self.value)


@dataclass(frozen=True, order=True)
class TickPrice:
    half_ticks: int
    tick_size_currency: float = 0.01

    def __post_init__(self):
        if not self.tick_size_currency > 0:
            raise DomainError("tick size must be positive")

    @classmethod
    def from_ticks(cls, ticks: int, tick_size: float = 0.01) -> "TickPrice":
        return cls(2 * int(ticks), tick_size)

    @property
    def ticks(self) -> float:
        return self.half_ticks / 2

    @property
    def is_quote(self) -> bool:
        return self.half_ticks % 2 == 0

    @property
    def currency(self) -> float:
        return self.half_ticks * self.tick_size_currency / 2


@dataclass(frozen=True)
class SideState:
    best_price: TickPrice
    q_top: int
    m_top: int
    q_deep: int
    m_deep: int


@dataclass(frozen=True)
class LobState:
    bid: SideState
    ask: SideState
    spread_ticks: int
    m_half_depth: int
    sim_time: float = 0.0

    def side(self, side: Side) -> SideState:
        return self.ask if side == Side.ASK else self.bid

    @property
    def tick_size(self) -> float:
        return self.bid.best_price.tick_size_currency

    @property
    def total_volume(self) -> int:
        return sum(s.q_top + s.q_deep for s in (self.bid, self.ask))

    # The flat int64 layout used by the compiled state machine.
    def to_array(self) -> np.ndarray:
        a = np.zeros(STATE_LEN, dtype=np.int64)
        a[S_SPREAD] = self.spread_ticks
        a[S_BID] = self.bid.best_price.half_ticks // 2
        a[S_M] = self.m_half_depth
        for side, st in ((Side.ASK, self.ask), (Side.BID, self.bid)):
            b = side_base(side)
            a[b + QT], a[b + MT], a[b + QD], a[b + MD] = st.q_top, st.m_top, st.q_deep, st.m_deep
        return a

    @classmethod
    def from_array(cls, a, tick_size: float = 0.01, sim_time: float = 0.0) -> "LobState":
        a = [int(v) for v in a]
        bid_px = a[S_BID]
        ask_px = bid_px + a[S_SPREAD]

        def mk(side, px):
            b = side_base(side)
            return SideState(TickPrice.from_ticks(px, tick_size), a[b + QT], a[b + MT], a[b + QD], a[b + MD])

        return cls(bid=mk(Side.BID, bid_px), ask=mk(Side.ASK, ask_px), spread_ticks=a[S_SPREAD],
                   m_half_depth=a[S_M], sim_time=sim_time)

    @classmethod
    def build(cls, *, spread: int, m_half_depth: int, bid_price: int = DEFAULT_PRICE_ANCHOR,
              ask: tuple = (1, 1, 1, 1), bid: tuple | None = None,
              tick_size: float = 0.01, sim_time: float = 0.0) -> "LobState":
        """Convenience constructor; side tuples are (q_top, m_top, q_deep, m_deep)."""
        bid = ask if bid is None else bid
        return cls(
            bid=SideState(TickPrice.from_ticks(bid_price, tick_size), *bid),
            ask=SideState(TickPrice.from_ticks(bid_price + spread, tick_size), *ask),
            spread_ticks=spread, m_half_depth=m_half_depth, sim_time=sim_time)

    def mirrored(self) -> "LobState":
        """Swap the roles of bid and ask, reflecting prices around the mid."""
        mid2 = self.bid.best_price.half_ticks + self.ask.best_price.half_ticks
        ts = self.tick_size
        new_bid = replace(self.ask, best_price=TickPrice(mid2 - self.ask.best_price.half_ticks, ts))
        new_ask = replace(self.bid, best_price=TickPrice(mid2 - self.bid.best_price.half_ticks, ts))
        return replace(self, bid=new_bid, ask=new_ask)


# flat state layout
S_SPREAD, S_BID, S_M = 0, 1, 2
QT, MT, QD, MD = 0, 1, 2, 3
STATE_LEN = 11


def side_base(side: int) -> int:
    return 3 + 4 * int(side)


@dataclass(frozen=True)
class ConstraintViolation:
    side: str
    kind: str  # "depth-overflow" or "min-depth"
    slack: float


def check_constraints(state: LobState) -> list[ConstraintViolation]:
    """Empty iff both sides satisfy M >= s/2 + m_T + m_D and m_D >= 1.

    The half spread is handled exactly by doubling both sides of the
    inequality. ``slack`` is the amount by which the bound is exceeded.
    """
    out = []
    for name, st in (("ask", state.ask), ("bid", state.bid)):
        lhs2 = state.spread_ticks + 2 * (st.m_top + st.m_deep)
        if lhs2 > 2 * state.m_half_depth:
            out.append(ConstraintViolation(name, "depth-overflow", (lhs2 - 2 * state.m_half_depth) / 2))
        if st.m_deep < 1:
            out.append(ConstraintViolation(name, "min-depth", 1 - st.m_deep))
    return out


def mid_price(state: LobState) -> TickPrice:
    bid, ask = state.bid.best_price, state.ask.best_price
    if ask.half_ticks - bid.half_ticks <= 0 or state.spread_ticks <= 0:
        raise StateCorruptionError(f"crossed or locked book: bid={bid.ticks} ask={ask.ticks}")
    return TickPrice((bid.half_ticks + ask.half_ticks) // 2, bid.tick_size_currency)


def relative_tick_size(tick_size_currency: float, avg_mid_price: float) -> float:
    """Tick size relative to the average mid price, in basis points."""
    if not (tick_size_currency > 0 and avg_mid_price > 0):
        raise DomainError("tick size and mid price must both be positive")
    return tick_size_currency / avg_mid_price * 1e4


@dataclass(frozen=True)
class EventRecord:
    time: float
    event_type: EventType
    size: int
    offset_ticks: int
    mid_before: TickPrice
    mid_after: TickPrice
    spread_before: int
    spread_after: int
    depleted_levels: int = 0
    # share ledger of the transition
    added: int = 0
    removed: int = 0
    purged: int = 0
    replenished: int = 0
    extra: dict = field(default_factory=dict, compare=False, repr=False)
