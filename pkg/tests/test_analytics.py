import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqhlob import analytics as an
from mqhlob.core import DomainError, EventType, LobState, Side
from mqhlob.dynamics import apply_market_order, apply_top_limit_order, run_simulation
from mqhlob.io import reference_config


@pytest.fixture(scope="module")
def ref_log():
    cfg = reference_config()
    return run_simulation(cfg.spec, cfg.handlers, cfg.init, 2000.0, seed=11).log


# -- time weighting and dispersion ----------------------------------------------------------

def test_time_weighted_mean_by_hand():
    assert an.time_weighted_mean(an.WeightedSeries([0.0], [2.0], 7.0)) == 2.0
    assert an.time_weighted_mean(an.WeightedSeries([0.0, 1.0], [1.0, 3.0], 4.0)) == pytest.approx(2.5)


def test_empty_series():
    with pytest.raises(DomainError):
        an.time_weighted_mean(an.WeightedSeries([], [], 1.0))


def test_breakpoints_must_not_go_back():
    with pytest.raises(DomainError):
        an.WeightedSeries([0.0, 2.0, 1.0], [1, 2, 3], 5.0)


@given(st.lists(st.tuples(st.floats(0.01, 10), st.floats(-100, 100)), min_size=1, max_size=20),
       st.integers(0, 19))
def test_zero_length_segments_do_not_matter(segs, at):
    t = np.cumsum([0.0] + [d for d, _ in segs[:-1]])
    v = np.array([x for _, x in segs])
    end = t[-1] + segs[-1][0]
    base = an.time_weighted_mean(an.WeightedSeries(t, v, end))
    i = at % len(t)
    t2, v2 = np.insert(t, i, t[i]), np.insert(v, i, 12345.0)
    assert an.time_weighted_mean(an.WeightedSeries(t2, v2, end)) == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_dispersion_examples():
    assert an.index_of_dispersion([2, 2, 2]) == 0.0
    assert an.index_of_dispersion(np.array([1.0, 3.0]), np.array([0.5, 0.5])) == pytest.approx(0.5)
    x = np.random.default_rng(0).poisson(4.0, 200_000)
    assert an.index_of_dispersion(x) == pytest.approx(1.0, abs=0.02)
    with pytest.raises(DomainError):
        an.index_of_dispersion([0, 0])


def test_dispersion_of_weighted_series():
    s = an.WeightedSeries([0.0, 1.0], [1.0, 3.0], 2.0)
    assert an.index_of_dispersion(s) == pytest.approx(0.5)


# -- trade induced mid moves -----------------------------------------------------------------

def _mo_log(make_log, steps):
    states, types, sizes = [steps[0][0]], [], []
    for before, k, after, size in steps:
        states.append(after)
        types.append(k)
        sizes.append(size)
    times = list(range(len(states)))
    return make_log(states, types, times, float(len(states)), sizes)


def test_no_depletion_means_no_move(make_log):
    s = LobState.build(spread=1, m_half_depth=20, ask=(50, 1, 100, 5), bid=(50, 1, 100, 5))
    a, _ = apply_market_order(s, Side.ASK, 10)
    log = _mo_log(make_log, [(s, EventType.MO_ask, a, 10)])
    tm = an.trade_mid_changes(log)
    assert tm.n_orders == 1 and np.all(tm.changes == 0)


def test_large_tick_depletions_move_half_a_tick(make_log):
    s = LobState.build(spread=1, m_half_depth=20, ask=(5, 1, 100, 5), bid=(5, 1, 100, 5))
    a, _ = apply_market_order(s, Side.ASK, 5, forced=(1,))
    b, _ = apply_market_order(a, Side.BID, 5, forced=(1,))
    log = _mo_log(make_log, [(s, EventType.MO_ask, a, 5), (a, EventType.MO_bid, b, 5)])
    tm = an.trade_mid_changes(log)
    assert np.allclose(tm.changes, 0.005)
    assert tm.mean == pytest.approx(0.005)
    assert tm.histogram()[0].tolist() == [1]


def test_depletion_through_two_queues(make_log):
    # a 3-tick top is cleared, then the next top of width 2 as well: the ask moves 3 + 2 ticks
    s = LobState.build(spread=2, m_half_depth=40, ask=(5, 3, 100, 20), bid=(50, 1, 100, 5))
    a, rec = apply_market_order(s, Side.ASK, 16, forced=(2, 4))
    assert rec.depleted_levels == 2
    log = _mo_log(make_log, [(s, EventType.MO_ask, a, 16)])
    assert an.trade_mid_changes(log).changes[0] == pytest.approx((3 + 2) / 2 * 0.01)


def test_cancels_do_not_count(make_log):
    s = LobState.build(spread=4, m_half_depth=40, ask=(5, 3, 100, 20), bid=(50, 1, 100, 5))
    a, _ = apply_top_limit_order(s, Side.ASK, 0, 3)
    log = make_log([s, a], [EventType.LO_ask_T], [0.0, 1.0], 2.0)
    assert an.trade_mid_changes(log) is an.NO_TRADES


def test_mo_to_best_ratio_point_masses(make_log):
    s = LobState.build(spread=1, m_half_depth=20, ask=(10, 1, 100, 5), bid=(10, 1, 100, 5))
    a, _ = apply_market_order(s, Side.ASK, 5)
    b, _ = apply_market_order(a, Side.BID, 5)
    log = _mo_log(make_log, [(s, EventType.MO_ask, a, 5), (a, EventType.MO_bid, b, 5)])
    r, _, _ = an.mo_to_best_ratio(log)
    assert np.allclose(r, 0.5)
    c, _ = apply_market_order(s, Side.ASK, 10, forced=(1,))
    r, _, _ = an.mo_to_best_ratio(_mo_log(make_log, [(s, EventType.MO_ask, c, 10)]))
    assert np.allclose(r, 1.0)


def test_wide_books_see_market_orders_beyond_the_top():
    cfg = reference_config().with_critical(3.0, 0.45, 0.05)
    log = run_simulation(cfg.spec, cfg.handlers, cfg.init, 2000.0, seed=3).log
    r, _, _ = an.mo_to_best_ratio(log)
    assert (r > 1).any()


# -- shape and sparsity -------------------------------------------------------------------

def snap(t, levels):
    return {"time": t, "levels": levels}


def test_shape_of_a_single_half_tick_book():
    sh = an.average_shape([snap(0.0, [["ask", 1, 10], ["bid", 1, 30]])])
    # half a tick from the mid falls in the first whole-tick bin
    assert sh.argmax == 1 and sh.quartiles == (1, 1, 1)


def test_shape_two_snapshot_average():
    frames = [snap(0.0, [["ask", 2, 5]]), snap(1.0, [["ask", 4, 5]])]
    sh = an.average_shape(an.BookFrames.from_snapshots(frames, end=2.0))
    assert sh.offsets.tolist() == [1, 2] and np.allclose(sh.mass, [0.5, 0.5])


def test_shape_needs_volume():
    with pytest.raises(DomainError):
        an.average_shape([snap(0.0, [["ask", 2, 0]])])


def test_shape_of_simulated_log_is_normalised(ref_log):
    sh = an.average_shape(ref_log)
    assert sh.mass.sum() == pytest.approx(1.0, abs=1e-9)
    assert sh.offsets.min() >= 1


def test_wasserstein_examples():
    assert an.wasserstein_sparsity([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert an.wasserstein_sparsity([0.5, 0.5], [1.0, 0.0]) == pytest.approx(1.0)


def test_constant_book_has_zero_sparsity():
    frames = [snap(float(t), [["ask", 1, 5], ["ask", 3, 7], ["bid", 1, 5]]) for t in range(4)]
    rep = an.sparsity_metrics(frames)
    assert rep.wasserstein_mean == pytest.approx(0.0, abs=1e-12)
    vals, p = rep.empty_levels[1]
    assert vals.tolist() == [0] and p.tolist() == [1.0]


def test_sparsity_two_snapshot_case():
    frames = [snap(0.0, [["ask", 2, 5]]), snap(1.0, [["ask", 4, 5]])]
    rep = an.sparsity_metrics(an.BookFrames.from_snapshots(frames, end=2.0))
    assert rep.wasserstein_mean == pytest.approx(1.0)
    assert rep.wasserstein_var == pytest.approx(0.0)


@settings(max_examples=50)
@given(st.lists(st.lists(st.tuples(st.sampled_from(["ask", "bid"]), st.integers(1, 30), st.integers(0, 50)),
                         min_size=1, max_size=6), min_size=1, max_size=8))
def test_sparsity_lies_in_zero_two(books):
    frames = [snap(float(i), [list(x) for x in b]) for i, b in enumerate(books)]
    if sum(v for b in books for _, _, v in b) == 0:
        return
    try:
        rep = an.sparsity_metrics(frames)
    except DomainError:
        return
    assert np.all(rep.distances >= -1e-12) and np.all(rep.distances <= 2 + 1e-12)


# -- leverage --------------------------------------------------------------------------------

def test_leverage_alternation():
    g = an.leverage_grid(["A", "B"] * 500)
    assert g.cell("A", "B") == pytest.approx(2.0, rel=1e-2)
    assert g.cell("A", "A") == 0.0


def test_leverage_of_independent_stream():
    rng = np.random.default_rng(1)
    g = an.leverage_grid(rng.choice(list("ABC"), 60_000).tolist())
    se = g.ratio_se()
    assert np.all(np.abs(g.ratio - 1) < 4 * se)


def test_leverage_undefined_cells_are_nan():
    g = an.LeverageGrid(["A"], np.array([[np.nan]]), np.zeros((1, 1)), np.zeros(1), np.zeros(1))
    assert not g.defined.any()


def test_leverage_edges_switch_to_log_beyond_ten():
    e = an.leverage_edges(upper=200)
    assert e[:11].tolist() == list(range(11))
    assert np.all(np.diff(e) > 0) and e[-1] == 200


def test_leverage_on_a_log(ref_log):
    g = an.leverage_grid(ref_log)
    assert np.all(g.ratio[g.defined] >= 0)


# -- regressions -----------------------------------------------------------------------------

def test_exact_power_law():
    x = np.geomspace(0.01, 1, 12)
    fit = an.loglog_slope(x, 3 * x ** -1.5)
    assert fit.slope == pytest.approx(-1.5) and fit.r2 == pytest.approx(1.0)


def test_noisy_power_law():
    rng = np.random.default_rng(2)
    x = np.geomspace(0.01, 1, 30)
    y = 2 / x * (1 + 0.01 * rng.standard_normal(x.size))
    assert an.loglog_slope(x, y).slope == pytest.approx(-1.0, abs=0.05)


def test_two_points_give_the_line_through_them():
    slope, icept, r2 = an.loglog_slope([1.0, 10.0], [5.0, 50.0])
    assert slope == pytest.approx(1.0) and math.exp(icept) == pytest.approx(5.0) and r2 == 1.0


@given(st.lists(st.floats(0.01, 100), min_size=3, max_size=10, unique=True), st.floats(0.1, 10),
       st.floats(-3, 3))
def test_slope_ignores_proxy_scale(x, k, b):
    x = np.array(x)
    if np.ptp(np.log(x)) < 1e-6:
        return
    y = x ** b
    assert an.loglog_slope(k * x, y).slope == pytest.approx(an.loglog_slope(x, y).slope, abs=1e-6)


def test_epsilon_proxy():
    assert an.epsilon_proxy(10.0) == pytest.approx(0.1)
    with pytest.raises(an.RegimeError):
        an.epsilon_proxy(1.0)
    assert an.epsilon_proxy(20.0) == pytest.approx(an.epsilon_proxy(10.0) / 2)


# -- state dependence and autocorrelation ------------------------------------------------

def _flat_log(make_log, types, values):
    base = LobState.build(spread=2, m_half_depth=20, ask=(5, 1, 100, 5), bid=(5, 1, 100, 5))
    states = [LobState.build(spread=2, m_half_depth=20, ask=(v, 1, 100, 5), bid=(5, 1, 100, 5)) for v in values]
    return make_log([base] + states, types, list(range(len(states) + 1)), float(len(states) + 1))


def test_independence_ratio_near_one_when_unrelated(make_log):
    rng = np.random.default_rng(3)
    n = 20_000
    types = rng.choice([EventType.MO_ask, EventType.LO_ask_T], n)
    vals = rng.integers(1, 40, n)
    tab = an.independence_ratio(_flat_log(make_log, types, vals), lambda lg: lg["q_top_ask"], [1, 10, 20, 40])
    assert np.all(np.abs(tab.ratio - 1) < 0.1)


def test_independence_ratio_detects_dependence(make_log):
    rng = np.random.default_rng(4)
    n = 20_000
    vals = rng.integers(1, 40, n + 1)
    # a market order follows only when the queue before it is short
    types = np.where(vals[:-1] < 10, EventType.MO_ask, EventType.LO_ask_T)
    tab = an.independence_ratio(_flat_log(make_log, types, vals[1:]),
                                lambda lg: lg["q_top_ask"], [1, 10, 40])
    i = tab.event_types.index("MO_ask")
    assert tab.ratio[i, 0] > 2


def test_independence_flags_thin_bins(make_log):
    tab = an.independence_ratio(_flat_log(make_log, [EventType.MO_ask] * 3, [5, 5, 5]),
                                lambda lg: lg["q_top_ask"], [1, 10, 20])
    assert tab.flagged[:, 1].all() and np.isnan(tab.ratio[:, 1]).all()


def test_acf_examples():
    rng = np.random.default_rng(5)
    w = rng.standard_normal(20_000)
    r = an.acf(w, 10)
    assert np.mean(np.abs(r.values[1:]) < r.band) >= 0.8
    x = np.zeros(100_000)
    e = rng.standard_normal(x.size)
    for i in range(1, x.size):
        x[i] = 0.5 * x[i - 1] + e[i]
    assert an.acf(x, 2).values[1] == pytest.approx(0.5, abs=0.05)
    with pytest.raises(DomainError):
        an.acf(np.ones(50), 3)


# -- report ----------------------------------------------------------------------------------

def test_metric_report_writes_every_table(ref_log, tmp_path):
    rep = an.metric_report(ref_log)
    files = {p.name for p in rep.write(tmp_path)}
    expected = {"report.json", "spread_pdf.csv", "event_counts.csv", "trade_mid_moves.csv", "shape_profile.csv",
                "empty_levels.csv", "leverage.csv", "mo_to_best_ratio.csv", "intraday_spread.csv"}
    assert expected <= files
    assert rep.scalars["mean_spread"] > 1
