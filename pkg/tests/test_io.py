import json
from pathlib import Path

import numpy as np
import pytest

from mqhlob.core import EventType
from mqhlob.dynamics import run_simulation, snapshots_from_log
from mqhlob.io import (ConfigError, LobsterParseError, classify_events, load_lobster, parse_lobster, read_event_log,
                       read_run_config, read_snapshots, reference_config, reference_config_path, run_config_to_dict,
                       write_event_log, write_run_config, write_snapshots)

DATA = Path(__file__).parent / "data"
HAND = (DATA / "hand_message.csv", DATA / "hand_orderbook.csv")
SYNTH = (DATA / "synthetic_message.csv", DATA / "synthetic_orderbook.csv")


@pytest.fixture(scope="module")
def sim_log():
    cfg = reference_config()
    return run_simulation(cfg.spec, cfg.handlers, cfg.init, 200.0, seed=4).log


def test_event_log_round_trip(sim_log, tmp_path):
    p = tmp_path / "events.csv"
    write_event_log(sim_log, p)
    back = read_event_log(p)
    assert back.duration == sim_log.duration and back.m_half_depth == sim_log.m_half_depth
    for c in sim_log.columns:
        assert np.array_equal(back[c], sim_log[c])
    assert list(back.records()) == list(sim_log.records())
    q = tmp_path / "again.csv"
    write_event_log(back, q)
    assert p.read_bytes() == q.read_bytes()


def test_snapshots_round_trip(sim_log, tmp_path):
    snaps = snapshots_from_log(sim_log, 50)
    write_snapshots(snaps, tmp_path / "s.jsonl")
    assert read_snapshots(tmp_path / "s.jsonl") == snaps


def test_reference_config_validates_and_carries_baselines():
    cfg = read_run_config(reference_config_path())
    assert cfg.spec.mu[EventType.LO_ask_D] == pytest.approx(0.86)
    assert cfg.spec.mu[EventType.MO_ask] == pytest.approx(0.02)
    assert cfg.spec.is_mirror_symmetric()


def test_config_round_trip(tmp_path):
    cfg = reference_config()
    write_run_config(cfg, tmp_path / "c.json")
    back = read_run_config(tmp_path / "c.json")
    assert run_config_to_dict(back) == run_config_to_dict(cfg)
    assert np.array_equal(back.spec.a, cfg.spec.a)


def test_missing_mu_is_named():
    raw = reference_config().raw
    raw = json.loads(json.dumps(raw))
    del raw["hawkes"]["mu"]
    with pytest.raises(ConfigError, match="mu"):
        read_run_config(raw)


def test_wrong_mu_length():
    raw = json.loads(json.dumps(reference_config().raw))
    raw["hawkes"]["mu"] = [0.1] * 11
    with pytest.raises(ConfigError):
        read_run_config(raw)


def test_critical_override():
    cfg = reference_config().with_critical(1.963, 0.41, 0.09)
    assert cfg.spec.is_alpha == 1.963 and cfg.spec.is_beta == 0.41
    assert cfg.handlers.eta_is.p == cfg.handlers.eta_t.p == cfg.handlers.eta_t1.p == 0.09


# -- LOBSTER ------------------------------------------------------------------------------

def test_hand_fixture_parses_bit_exact():
    pairs = list(parse_lobster(*HAND))
    assert len(pairs) == 3
    ev, book = pairs[0]
    assert (ev.time, ev.kind, ev.order_id, ev.size, ev.price, ev.direction) == \
        (34200.5, "submission", 11, 50, 1000100, "sell")
    assert book.ask_prices == (1000100, 1000300) and book.ask_sizes == (150, 200)
    assert book.bid_prices == (1000000, 999800) and book.bid_sizes == (150, 100)
    assert pairs[1][0].kind == "visible_execution" and pairs[2][0].kind == "deletion"


def test_hand_fixture_classification():
    recs = list(classify_events(parse_lobster(*HAND), shape_median=10))
    assert [r.event_type for r in recs] == [EventType.LO_ask_T, EventType.MO_bid, EventType.CO_ask_T]
    assert recs[0].offset_ticks == 0


def test_empty_files(tmp_path):
    (tmp_path / "m.csv").write_text("")
    (tmp_path / "o.csv").write_text("")
    assert list(parse_lobster(tmp_path / "m.csv", tmp_path / "o.csv")) == []


def test_short_orderbook_fails_on_last_row(tmp_path):
    (tmp_path / "o.csv").write_text("".join(HAND[1].read_text().splitlines(True)[:2]))
    with pytest.raises(LobsterParseError) as e:
        list(parse_lobster(HAND[0], tmp_path / "o.csv"))
    assert e.value.line == 3


def test_buy_inside_the_spread(tmp_path):
    (tmp_path / "m.csv").write_text("34200.1,1,1,10,1000200,1\n")
    (tmp_path / "o.csv").write_text("1000400,100,1000200,10,1000500,50,1000000,80\n")
    recs = list(classify_events(parse_lobster(tmp_path / "m.csv", tmp_path / "o.csv"), shape_median=10))
    assert recs[0].event_type == EventType.LO_bid_IS
    assert recs[0].offset_ticks == 2
    assert recs[0].spread_before == 4 and recs[0].spread_after == 2


def test_crossed_book_rejected(tmp_path):
    (tmp_path / "m.csv").write_text("34200.1,1,1,10,1000000,1\n")
    (tmp_path / "o.csv").write_text("1000000,100,1000000,10\n")
    with pytest.raises(LobsterParseError, match="crossed"):
        list(parse_lobster(tmp_path / "m.csv", tmp_path / "o.csv"))


def test_synthetic_fixture_loads(tmp_path):
    log, stats, frames = load_lobster(*SYNTH, shape_median=10)
    assert stats.dropped_fraction < 0.01
    assert log.n_events == 200
    assert set(np.unique(log["type"][1:]).tolist()) == set(range(12))
    write_event_log(log, tmp_path / "a.csv")
    write_event_log(read_event_log(tmp_path / "a.csv"), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len(frames) == 200
