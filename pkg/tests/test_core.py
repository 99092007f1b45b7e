import pytest
from hypothesis import given
from hypothesis import strategies as st

from mqhlob.core import (DomainError, EventType, LobState, Side, StateCorruptionError, TickPrice, check_constraints,
                         mid_price, relative_tick_size)


def test_relative_tick_size_examples():
    assert relative_tick_size(0.01, 6.07) == pytest.approx(16.47, abs=0.005)
    assert round(relative_tick_size(0.01, 1859.92), 2) == 0.05
    assert relative_tick_size(1.0, 10000.0) == pytest.approx(1.0)


def test_relative_tick_size_rejects_nonpositive():
    with pytest.raises(DomainError):
        relative_tick_size(0.0, 10.0)
    with pytest.raises(DomainError):
        relative_tick_size(0.01, -1.0)


def test_constraints_tight_book_is_valid():
    s = LobState.build(spread=10, m_half_depth=30, ask=(10, 3, 100, 22), bid=(10, 3, 100, 22))
    assert check_constraints(s) == []


def test_constraints_depth_overflow_reports_slack():
    s = LobState.build(spread=10, m_half_depth=30, ask=(10, 4, 100, 29), bid=(10, 3, 100, 22))
    v = check_constraints(s)
    assert len(v) == 1
    assert v[0].side == "ask" and v[0].kind == "depth-overflow" and v[0].slack == pytest.approx(8)


def test_constraints_empty_deep_width():
    s = LobState.build(spread=4, m_half_depth=30, ask=(10, 3, 100, 5), bid=(10, 3, 100, 0))
    kinds = {(c.side, c.kind) for c in check_constraints(s)}
    assert ("bid", "min-depth") in kinds


def test_mid_price_in_half_ticks():
    s = LobState.build(spread=1, m_half_depth=30, bid_price=100)
    assert mid_price(s).half_ticks == 201
    s = LobState.build(spread=10, m_half_depth=30, bid_price=100)
    assert mid_price(s).half_ticks == 210
    assert mid_price(s).ticks == pytest.approx(105.0)


def test_mid_price_crossed_book():
    s = LobState.build(spread=1, m_half_depth=30, bid_price=100)
    crossed = LobState(bid=s.bid, ask=s.bid, spread_ticks=0, m_half_depth=30)
    with pytest.raises(StateCorruptionError):
        mid_price(crossed)


def test_tick_price_currency():
    p = TickPrice.from_ticks(12345, 0.01)
    assert p.half_ticks == 24690
    assert p.currency == pytest.approx(123.45)


def test_event_type_mirror_is_an_involution():
    for e in EventType:
        assert e.mirror().mirror() == e
        assert e.side != e.mirror().side
    assert EventType.LO_ask_IS.mirror() == EventType.LO_bid_IS
    assert EventType.MO_ask.mirror() == EventType.MO_bid


@given(st.integers(1, 40), st.integers(1, 30), st.integers(1, 30), st.integers(0, 10_000))
def test_mirrored_state_keeps_spread_and_mid(spread, mt, md, bid_px):
    s = LobState.build(spread=spread, m_half_depth=60, bid_price=bid_px + 1, ask=(5, mt, 50, md), bid=(7, 1, 20, 1))
    m = s.mirrored()
    assert m.spread_ticks == s.spread_ticks
    assert mid_price(m) == mid_price(s)
    assert m.side(Side.BID).m_top == mt and m.side(Side.ASK).q_top == 7
    assert m.mirrored() == s


@given(st.integers(1, 100), st.integers(1, 60), st.integers(1, 60), st.integers(20, 80))
def test_to_array_round_trip(spread, mt, md, m_half):
    s = LobState.build(spread=spread, m_half_depth=m_half, ask=(3, mt, 9, md), bid=(4, md, 8, mt))
    assert LobState.from_array(s.to_array(), s.tick_size) == s
