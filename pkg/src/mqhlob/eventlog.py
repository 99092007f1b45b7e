"""Columnar event log shared by the simulator, the empirical classifier and analytics.

Every row holds the book *after* the event. Row 0 has type ``INIT_TYPE`` and
carries the starting book, so the pre-event state of row r is row r-1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EventRecord, EventType, LobState, SideState, TickPrice

INIT_TYPE = -1

STATE_COLUMNS = ("bid", "ask", "q_top_bid", "q_top_ask", "m_top_bid", "m_top_ask",
                 "q_deep_bid", "q_deep_ask", "m_deep_bid", "m_deep_ask")
LEDGER_COLUMNS = ("added", "removed", "purged", "replenished")
COLUMNS = ("time", "type", "size", "offset") + STATE_COLUMNS + ("depleted_levels",) + LEDGER_COLUMNS
INT_COLUMNS = COLUMNS[1:]


@dataclass(eq=False)
class EventLog:
    columns: dict
    tick_size: float = 0.01
    m_half_depth: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = {}
        n = None
        for name in COLUMNS:
            v = self.columns.get(name)
            if v is None:
                if n is None:
                    n = len(next(iter(self.columns.values())))
                v = np.zeros(n)
            cols[name] = np.asarray(v, dtype=float if name == "time" else np.int64)
            n = cols[name].size
        self.columns = cols

    def __len__(self) -> int:
        return self.columns["time"].size

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventLog) or len(self) != len(other):
            return False
        return all(np.array_equal(self[c], other[c]) for c in COLUMNS)

    @property
    def n_events(self) -> int:
        return len(self) - int(len(self) > 0 and self["type"][0] == INIT_TYPE)

    @property
    def spread(self) -> np.ndarray:
        return self["ask"] - self["bid"]

    @property
    def mid_half_ticks(self) -> np.ndarray:
        return self["ask"] + self["bid"]

    @property
    def duration(self) -> float:
        return float(self.meta.get("horizon", self["time"][-1] if len(self) else 0.0))

    @property
    def start_time(self) -> float:
        return float(self.meta.get("start", self["time"][0] if len(self) else 0.0))

    def events(self) -> slice:
        """Row slice of the real events (skips the INIT row)."""
        return slice(1 if len(self) and self["type"][0] == INIT_TYPE else 0, len(self))

    def slice(self, rows) -> "EventLog":
        return EventLog({c: v[rows] for c, v in self.columns.items()}, self.tick_size,
                        self.m_half_depth, dict(self.meta))

    def state(self, row: int) -> LobState:
        c = self.columns
        ts = self.tick_size

        def side(z):
            return SideState(TickPrice.from_ticks(int(c[z][row]), ts), int(c["q_top_" + z][row]),
                             int(c["m_top_" + z][row]), int(c["q_deep_" + z][row]),
                             int(c["m_deep_" + z][row]))

        return LobState(bid=side("bid"), ask=side("ask"), spread_ticks=int(c["ask"][row] - c["bid"][row]),
                        m_half_depth=self.m_half_depth, sim_time=float(c["time"][row]))

    def records(self):
        c = self.columns
        ts = self.tick_size
        mid = self.mid_half_ticks
        spr = self.spread
        for r in range(max(1, self.events().start), len(self)):
            yield EventRecord(
                time=float(c["time"][r]), event_type=EventType(int(c["type"][r])), size=int(c["size"][r]),
                offset_ticks=int(c["offset"][r]),
                mid_before=TickPrice(int(mid[r - 1]), ts), mid_after=TickPrice(int(mid[r]), ts),
                spread_before=int(spr[r - 1]), spread_after=int(spr[r]),
                depleted_levels=int(c["depleted_levels"][r]),
                added=int(c["added"][r]), removed=int(c["removed"][r]),
                purged=int(c["purged"][r]), replenished=int(c["replenished"][r]))

    def total_volume(self) -> np.ndarray:
        c = self.columns
        return c["q_top_bid"] + c["q_top_ask"] + c["q_deep_bid"] + c["q_deep_ask"]
