"""Slotted simulation of coupled per-UE queues under RS and RR.

Within slot ``t`` the order is: Bernoulli arrivals stamped ``t``; each SAP
picks a UE (uniformly under RS, by its pointer under RR) whatever that UE's
backlog; a SAP whose pick is empty stays silent; with the activity pattern
frozen, every active link attempts its head packet.  A packet delivered in
slot ``d`` has sojourn ``d - t + 1`` slots.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analytic.delay import PolicyKind
from .channel import ChannelParams, log_success_factors, path_loss
from .geometry import NetworkRealization

log = logging.getLogger(__name__)


@dataclass
class SimState:
    """Per-UE FIFOs of arrival slots plus round-robin pointers.

    ``arrived`` and ``departed`` are cumulative packet counts, so the backlog
    is their difference.  Packet ``n`` of UE ``u`` sits in column
    ``n - offset[u]`` of ``stamps``.
    """

    k_s: int
    xi: float
    stamps: np.ndarray
    arrived: np.ndarray
    departed: np.ndarray
    offset: np.ndarray
    rr_pointer: np.ndarray
    slot: int = 0
    advance_when_muted: bool = True

    @classmethod
    def new(cls, n_sap: int, k_s: int, xi: float, rng=None, capacity: int = 64, advance_when_muted: bool = True):
        if not 0.0 <= xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")
        n_ue = n_sap * k_s
        if rng is not None and k_s > 1:
            pointer = rng.integers(0, k_s, size=n_sap)
        else:
            pointer = np.zeros(n_sap, dtype=np.int64)
        zeros = np.zeros(n_ue, dtype=np.int64)
        return cls(
            k_s=k_s,
            xi=xi,
            stamps=np.zeros((n_ue, capacity), dtype=np.int64),
            arrived=zeros.copy(),
            departed=zeros.copy(),
            offset=zeros.copy(),
            rr_pointer=pointer.astype(np.int64),
            advance_when_muted=advance_when_muted,
        )

    @property
    def n_sap(self) -> int:
        return self.rr_pointer.size

    @property
    def backlog(self) -> np.ndarray:
        return self.arrived - self.departed

    def push(self, ues):
        if ((self.arrived[ues] - self.offset[ues]) >= self.stamps.shape[1]).any():
            self._compact()
            need = int((self.arrived - self.offset).max()) + 1
            if need > self.stamps.shape[1]:
                grown = np.zeros((self.stamps.shape[0], max(need, 2 * self.stamps.shape[1])), dtype=np.int64)
                grown[:, : self.stamps.shape[1]] = self.stamps
                self.stamps = grown
        self.stamps[ues, self.arrived[ues] - self.offset[ues]] = self.slot
        self.arrived[ues] += 1

    def pop(self, ues) -> np.ndarray:
        """Arrival slots of the head packets of ``ues`` (each must be backlogged)."""
        out = self.stamps[ues, self.departed[ues] - self.offset[ues]]
        self.departed[ues] += 1
        return out

    def _compact(self):
        width = self.stamps.shape[1]
        shift = self.departed - self.offset
        cols = np.minimum(np.arange(width)[None, :] + shift[:, None], width - 1)
        self.stamps = np.take_along_axis(self.stamps, cols, axis=1)
        self.offset = self.departed.copy()


@dataclass
class Delivered:
    ue: np.ndarray
    arrival: np.ndarray
    sojourn: np.ndarray


class LinkModel:
    """Per-realization cache of the quantities a slot needs."""

    def __init__(self, net: NetworkRealization, params: ChannelParams):
        self.net = net
        self.params = params
        self.log_factor = log_success_factors(net, params)
        self._gain = None

    @property
    def gain(self):
        if self._gain is None:
            g = np.atleast_2d(path_loss(self.net.distances(), self.params.alpha))
            self._gain = g
        return self._gain

    def success_prob(self, ues, active) -> np.ndarray:
        """Conditional success of the links ``ues`` given the SAP activity mask."""
        mask = np.zeros(self.log_factor.shape[1])
        mask[active] = 1.0
        return np.exp(self.log_factor[ues] @ mask)

    def draw_success(self, ues, saps, active, rng, fading: str) -> np.ndarray:
        if fading == "conditional":
            return rng.random(ues.size) < self.success_prob(ues, active)
        if fading != "explicit":
            raise ValueError(f"unknown fading mode {fading!r}")
        g = self.gain[np.ix_(ues, active)]
        own = g[np.arange(ues.size), np.searchsorted(active, saps)]
        h = rng.exponential(size=g.shape)
        signal = h[np.arange(ues.size), np.searchsorted(active, saps)] * own
        interference = (h * g).sum(axis=1) - signal
        return signal > self.params.theta * interference


def schedule(state: SimState, policy: PolicyKind, rng) -> np.ndarray:
    """UE slot index chosen by each SAP this slot."""
    if policy is PolicyKind.RS:
        if state.k_s == 1:
            return np.zeros(state.n_sap, dtype=np.int64)
        return rng.integers(0, state.k_s, size=state.n_sap)
    return state.rr_pointer.copy()


def step(
    state: SimState,
    net: NetworkRealization,
    policy,
    params: ChannelParams,
    rng,
    links: LinkModel | None = None,
    fading: str = "conditional",
):
    """Advance one slot in place; returns ``(Delivered, active_mask)``."""
    policy = PolicyKind.parse(policy)
    if links is None:
        links = LinkModel(net, params)
    k = state.k_s
    t = state.slot
    n_ue = state.stamps.shape[0]
    if state.xi > 0.0:
        arrived = np.nonzero(rng.random(n_ue) < state.xi)[0]
        if arrived.size:
            state.push(arrived)
    pick = schedule(state, policy, rng)
    chosen = np.arange(state.n_sap) * k + pick
    active_mask = state.backlog[chosen] > 0
    if policy is PolicyKind.RR:
        if state.advance_when_muted:
            state.rr_pointer = (state.rr_pointer + 1) % k
        else:
            state.rr_pointer = np.where(active_mask, (state.rr_pointer + 1) % k, state.rr_pointer)
    active = np.nonzero(active_mask)[0]
    if active.size:
        ues = chosen[active]
        ok = links.draw_success(ues, active, active, rng, fading)
        done = ues[ok]
    else:
        done = np.zeros(0, dtype=np.int64)
    arrival = state.pop(done) if done.size else np.zeros(0, dtype=np.int64)
    state.slot = t + 1
    return Delivered(done, arrival, t - arrival + 1), active_mask


@dataclass
class DelayStats:
    """Measurement-window delays of the inner-region UEs of one realization."""

    ue: np.ndarray
    arrivals: np.ndarray
    delivered: np.ndarray
    delay_sum: np.ndarray
    unresolved: np.ndarray
    sojourn_ue: np.ndarray = field(repr=False)
    sojourns: np.ndarray = field(repr=False)
    sap_active_fraction: np.ndarray = field(repr=False, default=None)

    @property
    def mean_delay(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.delay_sum / self.delivered
        out[self.delivered == 0] = np.nan
        return out

    @property
    def measured(self) -> np.ndarray:
        """UEs that saw at least one arrival in the window."""
        return self.arrivals > 0


def run_network(
    net: NetworkRealization,
    policy,
    params: ChannelParams,
    xi: float,
    warmup: int,
    measure: int,
    rng,
    fading: str = "conditional",
    advance_when_muted: bool = True,
    unresolved_fraction: float = 0.5,
) -> DelayStats:
    """Run coupled queues for ``warmup + measure`` slots and collect delays.

    Only packets arriving during the measurement slots of UEs in the inner
    region are counted.  A UE with at least ``unresolved_fraction`` of those
    packets still queued at the horizon is flagged unresolved.
    """
    if warmup < 1 or measure < 1:
        raise ValueError("warmup and measure must be at least one slot")
    policy = PolicyKind.parse(policy)
    inner = np.nonzero(net.inner_ues())[0]
    if inner.size == 0:
        raise ValueError("no UEs in the measurement region")
    links = LinkModel(net, params)
    state = SimState.new(net.n_sap, net.k_s, xi, rng=rng, advance_when_muted=advance_when_muted)
    n_ue = net.n_sap * net.k_s
    delay_sum = np.zeros(n_ue)
    delivered = np.zeros(n_ue, dtype=np.int64)
    active_slots = np.zeros(net.n_sap, dtype=np.int64)
    soj_ue, soj = [], []
    base = None
    for t in range(warmup + measure):
        if t == warmup:
            base = state.arrived.copy()
        out, mask = step(state, net, policy, params, rng, links=links, fading=fading)
        if t >= warmup:
            active_slots += mask
            keep = out.arrival >= warmup
            if keep.any():
                u, s = out.ue[keep], out.sojourn[keep]
                np.add.at(delay_sum, u, s)
                np.add.at(delivered, u, 1)
                soj_ue.append(u)
                soj.append(s)
    arrivals = state.arrived - base
    pending = arrivals - delivered
    unresolved = (arrivals > 0) & (pending >= unresolved_fraction * arrivals)
    soj_ue = np.concatenate(soj_ue) if soj_ue else np.zeros(0, dtype=np.int64)
    soj = np.concatenate(soj) if soj else np.zeros(0, dtype=np.int64)
    in_inner = np.isin(soj_ue, inner)
    return DelayStats(
        ue=inner,
        arrivals=arrivals[inner],
        delivered=delivered[inner],
        delay_sum=delay_sum[inner],
        unresolved=unresolved[inner],
        sojourn_ue=soj_ue[in_inner],
        sojourns=soj[in_inner],
        sap_active_fraction=active_slots / measure,
    )


def empirical_cdf(stats, t_grid) -> np.ndarray:
    """Fraction of measured UEs whose mean delay is at most each ``T``.

    Unresolved UEs count as exceeding every ``T``.
    """
    if isinstance(stats, DelayStats):
        stats = [stats]
    means = pooled_mean_delays(stats)
    if means.size == 0:
        raise ValueError("no measured UEs")
    t_grid = np.asarray(t_grid, dtype=float)
    return (means[None, :] <= t_grid[:, None]).mean(axis=1)


def pooled_mean_delays(stats) -> np.ndarray:
    """Mean delay of every measured UE across realizations; ``inf`` if unresolved."""
    out = []
    for s in stats:
        m = s.measured
        d = s.mean_delay[m]
        d = np.where(s.unresolved[m] | np.isnan(d), np.inf, d)
        out.append(d)
    return np.concatenate(out) if out else np.zeros(0)


@dataclass
class IsolatedResult:
    """``mean_delay`` is UE 0's; ``pooled_delay`` averages every delivered packet of the cell."""

    mean_delay: float
    pooled_delay: float
    delays: np.ndarray
    busy_fraction: float
    delivered: int
    undelivered: int
    unstable: bool


def isolated_draws(xi: float, mu: float, k_s: int, policy, slots: int, rng):
    """Random inputs of an interference-free cell: arrivals, picks, coins."""
    policy = PolicyKind.parse(policy)
    arrivals = rng.random((slots, k_s)) < xi
    if policy is PolicyKind.RS and k_s > 1:
        pick = rng.integers(0, k_s, size=slots)
    else:
        offset = 0 if policy is PolicyKind.RS else int(rng.integers(0, k_s))
        pick = (offset + np.arange(slots)) % k_s
    coins = rng.random(slots) < mu
    return arrivals, pick, coins


def isolated_from_draws(arrivals, pick, coins):
    """Exact FIFO delays given the draws.

    A UE can release a packet at slot ``t`` when it is picked and the coin
    succeeds.  Packet ``n`` leaves at the first such opportunity not before
    its arrival and strictly after packet ``n - 1`` left, i.e. at opportunity
    index ``n + cummax(first_n - n)``.
    """
    slots, k_s = arrivals.shape
    sojourns, undelivered = [], []
    depart_counts = np.zeros((slots, k_s), dtype=np.int64)
    for i in range(k_s):
        a = np.nonzero(arrivals[:, i])[0]
        opp = np.nonzero((pick == i) & coins)[0]
        first = np.searchsorted(opp, a)
        n = np.arange(a.size)
        idx = n + np.maximum.accumulate(first - n) if a.size else first
        ok = idx < opp.size
        d = opp[idx[ok]]
        sojourns.append(d - a[ok] + 1)
        undelivered.append(int((~ok).sum()))
        np.add.at(depart_counts[:, i], d, 1)
    arrived = np.cumsum(arrivals, axis=0)
    left_before = np.cumsum(depart_counts, axis=0) - depart_counts
    backlog_after_arrival = arrived - left_before
    busy = backlog_after_arrival[np.arange(slots), pick] > 0
    return sojourns, undelivered, busy


def run_isolated_queue(mu: float, xi: float, k_s: int, policy, slots: int, rng) -> IsolatedResult:
    """One SAP, ``k_s`` UEs, each attempt succeeding with probability ``mu``."""
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must lie in (0, 1]")
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    arrivals, pick, coins = isolated_draws(xi, mu, k_s, policy, slots, rng)
    sojourns, undelivered, busy = isolated_from_draws(arrivals, pick, coins)
    d0 = sojourns[0]
    mean = float(d0.mean()) if d0.size else math.nan
    unstable = xi >= mu / k_s
    if unstable:
        log.warning("isolated queue unstable: xi=%g >= mu/K=%g; delay grows with horizon", xi, mu / k_s)
    return IsolatedResult(
        mean_delay=mean,
        pooled_delay=float(np.concatenate(sojourns).mean()) if any(s.size for s in sojourns) else math.nan,
        delays=np.array([s.mean() if s.size else math.nan for s in sojourns]),
        busy_fraction=float(busy.mean()),
        delivered=int(d0.size),
        undelivered=undelivered[0],
        unstable=unstable,
    )
