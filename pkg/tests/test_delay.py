import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from scheddelay.analytic import (
    PolicyKind,
    cdf_delay,
    cdf_delay_rr,
    cdf_delay_rs,
    delay_outage,
    mean_delay,
    mean_delay_rr,
    mean_delay_rs,
    rate_threshold,
    rs_rr_gap,
    tail_gap,
    tau_a,
)

stable = st.tuples(
    st.floats(0.05, 1.0), st.floats(0.0, 0.99), st.integers(1, 12)
).map(lambda t: (t[0], t[1] * t[0] / t[2], t[2]))


def test_worked_values():
    assert mean_delay_rs(0.6, 0.1, 3) == pytest.approx(9.0, rel=1e-14)
    assert mean_delay_rr(0.6, 0.1, 3) == pytest.approx(7.0, rel=1e-14)
    assert mean_delay(0.6, 0.1, 3, "RR") == mean_delay_rr(0.6, 0.1, 3)


def test_unstable_queue_has_infinite_delay():
    assert mean_delay_rs(0.3, 0.1, 3) == math.inf
    assert mean_delay_rr(0.3, 0.2, 3) == math.inf
    assert rs_rr_gap(0.3, 0.1, 3) == math.inf


def test_tau_a_saturates():
    assert tau_a(0.6, 0.1, 3) == pytest.approx(0.5)
    assert tau_a(0.2, 0.1, 3) == 1.0


def test_mu_out_of_range():
    for mu in (0.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            mean_delay_rs(mu, 0.1, 2)


@given(stable)
def test_gap_identity(p):
    mu, xi, k = p
    diff = mean_delay_rs(mu, xi, k) - mean_delay_rr(mu, xi, k)
    assert diff == pytest.approx(rs_rr_gap(mu, xi, k), rel=1e-9, abs=1e-9)


@given(stable)
def test_single_ue_policies_coincide(p):
    mu, xi, _ = p
    assert mean_delay_rs(mu, xi, 1) == pytest.approx(mean_delay_rr(mu, xi, 1), rel=1e-13)


@given(stable, st.sampled_from(["rs", "rr"]))
def test_threshold_inverts_mean_delay(p, policy):
    mu, xi, k = p
    d = mean_delay(mu, xi, k, policy)
    assume(math.isfinite(d) and d >= 1)
    assert rate_threshold(d, xi, k, policy) == pytest.approx(mu, rel=1e-9)


@pytest.mark.parametrize("k", range(1, 9))
def test_threshold_at_one_slot(k):
    assert rate_threshold(1.0, 0.1, k, "rs") == k
    assert rate_threshold(1.0, 0.1, k, "rr") == pytest.approx(2 * k / (k + 1))


def test_cdf_is_zero_at_one_slot(light_f):
    for k in range(1, 9):
        assert cdf_delay_rs(light_f, 1.0, 0.05, k) == 0.0
        assert cdf_delay_rr(light_f, 1.0, 0.05, k) == 0.0


def test_rejects_bounds_below_one(light_f):
    with pytest.raises(ValueError):
        cdf_delay(light_f, 0.5, 0.05, 3, "rs")


def test_cdf_shape(light_f):
    t = np.linspace(1, 300, 3000)
    rs = cdf_delay(light_f, t, 0.05, 3, "rs")
    rr = cdf_delay(light_f, t, 0.05, 3, "rr")
    assert np.all(np.diff(rs) >= 0) and np.all(np.diff(rr) >= 0)
    assert np.all(rr >= rs - 1e-12)  # round robin dominates
    assert np.all((0 <= rs) & (rs <= 1))
    # the limit is the stable fraction 1 - F(xi K)
    assert rs[-1] <= 1 - light_f(0.15) + 1e-12


def test_outage_complements_cdf(light_f):
    assert delay_outage(light_f, 20.0, 0.05, 3, "rr") == pytest.approx(1 - cdf_delay_rr(light_f, 20.0, 0.05, 3))
    gap = tail_gap(light_f, np.array([20.0, 200.0, 2000.0]), 0.05, 3, "rs")
    assert np.all(np.diff(gap) <= 0) and gap[-1] >= -1e-12


def test_policy_parse():
    assert PolicyKind.parse("RS") is PolicyKind.RS
    assert PolicyKind.parse(PolicyKind.RR) is PolicyKind.RR
    with pytest.raises(ValueError):
        PolicyKind.parse("fifo")
