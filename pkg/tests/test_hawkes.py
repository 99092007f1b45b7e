import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from mqhlob.core import N_TYPES, DomainError, EventType
from mqhlob.hawkes import (EventHistory, HawkesSpec, InfiniteNormError, PowerLawKernel, intensity, is_multiplier,
                           kernel_norm_matrix, rescaled_interarrivals, simulate)
from mqhlob.io import reference_config

IS = (int(EventType.LO_ask_IS), int(EventType.LO_bid_IS))


def one_kernel_spec(mu=1.0, a=1.0, b=3.0, c=1.0, horizon=1e9):
    return HawkesSpec(mu=[mu], a=[[a]], b=[[b]], c=[[c]], horizon=[[horizon]])


def test_kernel_norm_closed_form():
    k = PowerLawKernel(1.0, 3.0, 1.0, math.inf)
    assert k.norm() == pytest.approx(0.5)
    assert k.norm(truncated=False) == pytest.approx(1.0 / (1.0 * 2.0))


def test_norm_matrix_entries():
    spec = one_kernel_spec()
    assert kernel_norm_matrix(spec).norms[0, 0] == pytest.approx(0.5, rel=1e-6)
    spec = HawkesSpec(mu=[1, 1], a=[[0, 0.3], [0, 0]], b=2.0, c=1.0, horizon=1e9)
    rep = kernel_norm_matrix(spec)
    assert rep.norms[0, 0] == 0 and rep.norms[1, 1] == 0 and rep.norms[1, 0] == 0
    assert rep.norms[0, 1] == pytest.approx(0.3, rel=1e-6)


def test_divergent_kernel_is_rejected():
    with pytest.raises(InfiniteNormError):
        kernel_norm_matrix(one_kernel_spec(b=1.0))


def test_empty_history_gives_baselines():
    spec = HawkesSpec.zeros(np.full(N_TYPES, 2.0), is_alpha=0.1, is_beta=1.0)
    lam = intensity(spec, EventHistory(), 11, 0.0)
    mult = (0.01 * 10 / 0.1) ** 1.0
    for i in range(N_TYPES):
        assert lam[i] == pytest.approx(2.0 * mult if i in IS else 2.0)


def test_one_tick_spread_shuts_in_spread_flow():
    spec = HawkesSpec.zeros(np.full(N_TYPES, 2.0), is_alpha=0.1, is_beta=0.5)
    lam = intensity(spec, EventHistory(), 1, 0.0)
    assert lam[IS[0]] == 0.0 and lam[IS[1]] == 0.0


def test_multiplier_of_one():
    assert is_multiplier(11, 0.01, 0.1, 1.0) * 0.47 == pytest.approx(0.47)


@given(st.integers(1, 500), st.floats(0.001, 5.0), st.floats(0.05, 2.0))
def test_multiplier_is_monotone_and_nonnegative(s, alpha, beta):
    m0, m1 = is_multiplier(s, 0.01, alpha, beta), is_multiplier(s + 1, 0.01, alpha, beta)
    assert 0 <= m0 <= m1


def test_negative_excitation_is_clipped_at_zero():
    spec = HawkesSpec(mu=[0.1, 1.0], a=[[0, -5.0], [0, 0]], b=2.0, c=1.0, horizon=10.0)
    h = EventHistory(2)
    h.add(0.0, 1)
    lam = intensity(spec, h, 1, 0.01)
    assert lam[0] == 0.0 and lam[1] == pytest.approx(1.0)


def test_poisson_reduction():
    spec = HawkesSpec.zeros(np.full(N_TYPES, 2.0))
    t, k = simulate(spec, 1000.0, seed=1)
    rate = np.bincount(k, minlength=N_TYPES) / 1000.0
    assert np.all(np.abs(rate - 2.0) < 3 * math.sqrt(2.0 / 1000.0))


def test_single_kernel_stationary_rate():
    t, _ = simulate(one_kernel_spec(), 1e4, seed=2)
    assert t.size / 1e4 == pytest.approx(2.0, rel=0.05)


def test_same_seed_same_stream():
    spec = reference_config().spec
    a = simulate(spec, 200.0, seed=3)
    b = simulate(spec, 200.0, seed=3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_time_rescaling_gives_unit_exponentials():
    spec = HawkesSpec(mu=[0.5, 0.3], a=[[0.6, 0.4], [0.3, 0.5]], b=2.5, c=3.0, horizon=50.0)
    t, k = simulate(spec, 2e4, seed=4)
    z = np.concatenate(rescaled_interarrivals(spec, t, k))
    assert z.size >= 1e4
    assert stats.kstest(z, "expon").pvalue > 0.01


def test_history_rejects_time_travel():
    h = EventHistory(1)
    h.add(1.0, 0)
    with pytest.raises(DomainError):
        h.add(0.5, 0)


def test_reference_spec_is_mirror_symmetric_and_stable():
    spec = reference_config().spec
    assert spec.is_mirror_symmetric()
    assert kernel_norm_matrix(spec).spectral_radius < 1
