import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mqhlob.core import DomainError
from mqhlob.sampling import (DeepVolumeDist, GeomWithSpikes, SamplingError, fit_geometric_mle,
                             fit_truncated_geometric_mle, sample_bounded, sample_deep_volume)


def test_single_admissible_value():
    rng = np.random.default_rng(0)
    g = GeomWithSpikes(0.5)
    assert {sample_bounded(g, 1, 1, rng) for _ in range(200)} == {1}


def test_unbounded_mean_is_one_over_p():
    rng = np.random.default_rng(1)
    x = GeomWithSpikes(0.5).sample(rng, 1_000_000)
    # geometric on {1, 2, ...}: mean 1/p = 2, variance (1-p)/p^2 = 2
    assert abs(x.mean() - 2.0) < 3 * np.sqrt(2.0 / x.size)


def test_bounded_draws_follow_renormalised_tail():
    rng = np.random.default_rng(2)
    g = GeomWithSpikes(0.5)
    draws = np.array([sample_bounded(g, 3, 5, rng) for _ in range(20_000)])
    obs = np.array([(draws == k).sum() for k in (3, 4, 5)])
    w = np.array([0.5 ** (k - 1) * 0.5 for k in (3, 4, 5)])
    exp = w / w.sum() * draws.size
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_deep_volume_degenerate_level():
    rng = np.random.default_rng(3)
    d = DeepVolumeDist(GeomWithSpikes(1.0))
    assert sample_deep_volume(d, 1, rng) == 1


def test_deep_volume_mean_is_linear_in_width():
    rng = np.random.default_rng(4)
    d = DeepVolumeDist(GeomWithSpikes(0.2))  # mean 5 shares per level
    x = np.array([sample_deep_volume(d, 10, rng) for _ in range(100_000)])
    sd = np.sqrt(10 * 0.8 / 0.04)
    assert abs(x.mean() - 50.0) < 3 * sd / np.sqrt(x.size)


def test_deep_volume_needs_a_level():
    with pytest.raises(DomainError):
        sample_deep_volume(DeepVolumeDist(), 0, np.random.default_rng(0))


def test_mle_boundary_and_closed_form():
    assert fit_geometric_mle([1, 1, 1, 1]).p == 1.0
    assert fit_geometric_mle([1, 3, 2, 2]).p == pytest.approx(0.5)


def test_mle_recovers_small_p():
    rng = np.random.default_rng(5)
    x = rng.geometric(0.09, 100_000)
    fit = fit_geometric_mle(x)
    assert abs(fit.p - 0.09) < 3 * fit.se


def test_truncated_mle_removes_the_cap_bias():
    rng = np.random.default_rng(6)
    g = GeomWithSpikes(0.1)
    upper = rng.integers(2, 12, 50_000)
    x = np.array([sample_bounded(g, 1, int(u), rng) for u in upper])
    naive = fit_geometric_mle(x).p
    fit = fit_truncated_geometric_mle(x, upper)
    assert abs(fit.p - 0.1) < 3 * fit.se + 1e-3
    assert naive > 0.15  # the cap makes the plain estimate badly biased


def test_zero_based_support():
    rng = np.random.default_rng(7)
    g = GeomWithSpikes(0.25, support_min=0)
    x = g.sample(rng, 200_000)
    assert x.min() == 0
    assert x.mean() == pytest.approx(g.mean, rel=0.02)
    assert fit_geometric_mle(x, support_min=0).p == pytest.approx(0.25, abs=0.005)


@given(st.floats(0.01, 1.0), st.integers(0, 3),
       st.lists(st.tuples(st.integers(0, 40), st.floats(0.0, 0.2)), max_size=3))
def test_pmf_sums_to_one(p, smin, spikes):
    spikes = [(v + smin, w) for v, w in spikes]
    g = GeomWithSpikes(p, smin, tuple(spikes))
    k = np.arange(smin, smin + 5000)
    assert g.pmf(k).sum() + (1 - g.cdf(k[-1])) == pytest.approx(1.0, abs=1e-9)
    assert np.all(g.pmf(k) >= 0)


@settings(max_examples=40)
@given(st.floats(0.05, 0.95), st.integers(1, 20), st.integers(0, 20), st.integers(0, 2**32 - 1))
def test_bounded_draw_stays_in_range(p, lo, width, seed):
    g = GeomWithSpikes(p, 1, ((5, 0.1), (10, 0.1)))
    v = sample_bounded(g, lo, lo + width, np.random.default_rng(seed))
    assert lo <= v <= lo + width


def test_range_without_mass_is_an_error():
    with pytest.raises(SamplingError):
        sample_bounded(GeomWithSpikes(1.0), 2, 2, np.random.default_rng(0))


def test_invalid_distributions():
    with pytest.raises(DomainError):
        GeomWithSpikes(0.0)
    with pytest.raises(DomainError):
        GeomWithSpikes(0.5, 1, ((3, 0.6), (4, 0.5)))
    with pytest.raises(DomainError):
        GeomWithSpikes(0.5, 2, ((1, 0.1),))


def test_low_mass_range_is_sampled_exactly():
    rng = np.random.default_rng(8)
    g = GeomWithSpikes(0.75, 1, ((5, 0.1),))
    draws = np.array([sample_bounded(g, 6, 9, rng) for _ in range(20_000)])
    k = np.arange(6, 10)
    w = g.pmf(k)
    obs = np.array([(draws == v).sum() for v in k])
    assert stats.chisquare(obs, w / w.sum() * draws.size).pvalue > 0.01
