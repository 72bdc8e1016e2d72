from collections import deque

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scheddelay.analytic import mean_delay_rr, mean_delay_rs
from scheddelay.geometry import SimWindow, sample_network
from scheddelay.queuesim import (
    DelayStats,
    LinkModel,
    SimState,
    empirical_cdf,
    isolated_draws,
    isolated_from_draws,
    pooled_mean_delays,
    run_isolated_queue,
    run_network,
    step,
)


def slot_loop(arrivals, pick, coins):
    """Reference: one FIFO per UE, advanced slot by slot."""
    slots, k = arrivals.shape
    queues = [deque() for _ in range(k)]
    sojourns = [[] for _ in range(k)]
    busy = np.zeros(slots, dtype=bool)
    for t in range(slots):
        for i in range(k):
            if arrivals[t, i]:
                queues[i].append(t)
        q = queues[pick[t]]
        busy[t] = bool(q)
        if q and coins[t]:
            sojourns[pick[t]].append(t - q.popleft() + 1)
    return [np.array(s, dtype=np.int64) for s in sojourns], [len(q) for q in queues], busy


@given(st.integers(0, 10_000), st.sampled_from(["rs", "rr"]), st.integers(1, 4), st.floats(0.01, 0.6))
def test_vectorized_queue_matches_slot_loop(seed, policy, k, xi):
    arrivals, pick, coins = isolated_draws(xi, 0.7, k, policy, 400, np.random.default_rng(seed))
    fast = isolated_from_draws(arrivals, pick, coins)
    slow = slot_loop(arrivals, pick, coins)
    for a, b in zip(fast[0], slow[0]):
        assert np.array_equal(a, b)
    assert fast[1] == slow[1]
    assert np.array_equal(fast[2], slow[2])


@pytest.mark.parametrize("policy,fn", [("rs", mean_delay_rs), ("rr", mean_delay_rr)])
def test_isolated_queue_reaches_closed_form(policy, fn):
    res = run_isolated_queue(0.6, 0.1, 3, policy, 400_000, np.random.default_rng(3))
    assert res.pooled_delay == pytest.approx(fn(0.6, 0.1, 3), rel=0.03)
    assert res.busy_fraction == pytest.approx(0.5, abs=0.01)
    assert not res.unstable


def test_unstable_isolated_queue_is_flagged(caplog):
    res = run_isolated_queue(0.3, 0.2, 3, "rs", 20_000, np.random.default_rng(0))
    assert res.unstable and res.undelivered > 0
    assert "unstable" in caplog.text


def test_fifo_buffer_survives_compaction():
    st_ = SimState.new(1, 2, 0.5, capacity=4)
    order = []
    for t in range(50):
        st_.slot = t
        st_.push(np.array([0]))
        if t % 3 == 0:
            order.extend(st_.pop(np.array([0])).tolist())
    assert order == sorted(order)
    assert st_.backlog[0] == 50 - len(order)


@pytest.fixture(scope="module")
def small_net():
    return sample_network(1e-4, 3, SimWindow(side_m=700.0), 8)


def test_packets_are_conserved(small_net, channel):
    rng = np.random.default_rng(2)
    state = SimState.new(small_net.n_sap, 3, 0.2, rng=rng)
    links = LinkModel(small_net, channel)
    delivered = np.zeros(small_net.n_sap * 3, dtype=np.int64)
    for _ in range(500):
        out, mask = step(state, small_net, "rr", channel, rng, links=links)
        assert np.all(out.sojourn >= 1)
        # a silent SAP never delivers
        assert np.all(mask[out.ue // 3])
        np.add.at(delivered, out.ue, 1)
    assert np.array_equal(state.arrived, delivered + state.backlog)


def test_round_robin_pointer_cycles(small_net, channel):
    state = SimState.new(small_net.n_sap, 3, 0.0, rng=np.random.default_rng(0))
    start = state.rr_pointer.copy()
    for _ in range(3):
        step(state, small_net, "rr", channel, np.random.default_rng(1))
    assert np.array_equal(state.rr_pointer, start)


def test_single_ue_policies_give_identical_paths(channel):
    net = sample_network(1e-4, 1, SimWindow(side_m=700.0), 4)
    a = run_network(net, "rs", channel, 0.2, 100, 500, np.random.default_rng(5))
    b = run_network(net, "rr", channel, 0.2, 100, 500, np.random.default_rng(5))
    assert np.array_equal(a.sojourns, b.sojourns)


def test_network_run_is_deterministic(small_net, channel):
    a = run_network(small_net, "rs", channel, 0.1, 50, 300, np.random.default_rng(9))
    b = run_network(small_net, "rs", channel, 0.1, 50, 300, np.random.default_rng(9))
    assert np.array_equal(a.delay_sum, b.delay_sum)


def test_fading_modes_agree_statistically(small_net, channel):
    links = LinkModel(small_net, channel)
    active = np.arange(small_net.n_sap)
    ues = active * 3
    rng = np.random.default_rng(4)
    cond = np.mean([links.draw_success(ues, active, active, rng, "conditional") for _ in range(3000)], axis=0)
    expl = np.mean([links.draw_success(ues, active, active, rng, "explicit") for _ in range(3000)], axis=0)
    p = links.success_prob(ues, active)
    tol = 4.5 * np.sqrt(p * (1 - p) / 3000) + 1e-3
    assert np.all(np.abs(cond - p) <= tol)
    assert np.all(np.abs(expl - p) <= tol)
    with pytest.raises(ValueError):
        links.draw_success(ues, active, active, rng, "nakagami")


def test_pointer_may_hold_while_muted(small_net, channel):
    out = run_network(small_net, "rr", channel, 0.05, 50, 200, np.random.default_rng(1), advance_when_muted=False)
    assert out.measured.any()


def test_delay_stats_and_cdf(small_net, channel):
    stats = run_network(small_net, "rs", channel, 0.1, 100, 600, np.random.default_rng(2))
    assert np.all(stats.delivered <= stats.arrivals)
    cdf = empirical_cdf(stats, np.arange(1, 60))
    assert np.all(np.diff(cdf) >= 0) and cdf[0] >= 0 and cdf[-1] <= 1
    pooled = pooled_mean_delays([stats])
    assert pooled.size == stats.measured.sum()


def test_unresolved_ues_count_as_infinite():
    s = DelayStats(
        ue=np.arange(3), arrivals=np.array([10, 10, 0]), delivered=np.array([10, 2, 0]),
        delay_sum=np.array([30.0, 900.0, 0.0]), unresolved=np.array([False, True, False]),
        sojourn_ue=np.zeros(0, dtype=int), sojourns=np.zeros(0, dtype=int),
    )
    assert np.array_equal(pooled_mean_delays([s]), [3.0, np.inf])
    assert np.array_equal(empirical_cdf(s, [3.0, 1e9]), [0.5, 0.5])


def test_bad_horizons(small_net, channel):
    with pytest.raises(ValueError):
        run_network(small_net, "rs", channel, 0.1, 0, 10, np.random.default_rng(0))
