import numpy as np
import pytest

from mqhlob.eventlog import INIT_TYPE, EventLog


def log_from_states(states, types, times, end, sizes=None, tick_size=0.01):
    """An EventLog whose row r holds ``states[r]``; row 0 is the starting book."""
    cols = {k: [] for k in ("time", "type", "size", "bid", "ask", "q_top_bid", "q_top_ask", "m_top_bid",
                            "m_top_ask", "q_deep_bid", "q_deep_ask", "m_deep_bid", "m_deep_ask")}
    sizes = sizes if sizes is not None else [0] * len(types)
    for st, k, t, sz in zip(states, [INIT_TYPE] + list(types), times, [0] + list(sizes)):
        cols["time"].append(t)
        cols["type"].append(int(k))
        cols["size"].append(sz)
        cols["bid"].append(st.bid.best_price.half_ticks // 2)
        cols["ask"].append(st.ask.best_price.half_ticks // 2)
        for side in ("bid", "ask"):
            s = getattr(st, side)
            cols["q_top_" + side].append(s.q_top)
            cols["m_top_" + side].append(s.m_top)
            cols["q_deep_" + side].append(s.q_deep)
            cols["m_deep_" + side].append(s.m_deep)
    m_half = states[0].m_half_depth
    return EventLog({k: np.asarray(v) for k, v in cols.items()}, tick_size, m_half, {"horizon": end})


@pytest.fixture
def make_log():
    return log_from_states


# -- acceptance summary ----------------------------------------------------------------------
# acceptance tests call ``criterion(n, passed, detail)``; one line per criterion is printed at the end

_CRITERIA = {}


@pytest.fixture
def criterion():
    def record(n, passed, detail=""):
        ok, parts, checks = _CRITERIA.get(n, (True, [], 0))
        _CRITERIA[n] = (ok and bool(passed), parts + ([detail] if detail else []), checks + 1)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, parts, checks = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  [{checks} checks] {'; '.join(parts)}")
