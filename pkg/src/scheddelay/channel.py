"""Rayleigh-faded SIR on a fixed network geometry."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import NetworkRealization, pairwise_distance


@dataclass(frozen=True)
class ChannelParams:
    alpha: float = 3.8
    theta: float = 1.0
    p_st: float = 10 ** 2.3  # 23 dBm in mW
    delta: float = field(init=False)

    def __post_init__(self):
        if self.alpha <= 2:
            raise ValueError("path-loss exponent must exceed 2")
        if self.theta <= 0:
            raise ValueError("SIR threshold must be positive")
        if self.p_st <= 0:
            raise ValueError("transmit power must be positive")
        object.__setattr__(self, "delta", 2.0 / self.alpha)


def path_loss(d, alpha: float):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = d ** (-alpha)
    return float(out) if out.ndim == 0 else out


def _ue_index(net: NetworkRealization, ue):
    """Accept a flat index or a ``(sap, slot)`` pair."""
    if isinstance(ue, tuple):
        sap, j = ue
        return sap, sap * net.k_s + j
    return ue // net.k_s, ue


def _link_geometry(net, ue, mask):
    sap, flat = _ue_index(net, ue)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (net.n_sap,):
        raise ValueError("activity mask must have one entry per SAP")
    d0 = net.link_distance.reshape(-1)[flat]
    others = mask.copy()
    others[sap] = False
    d = pairwise_distance(net.ue_flat()[flat], net.sap_positions[others], net.window)[0]
    return sap, d0, d


def draw_slot_success(net: NetworkRealization, ue, mask, params: ChannelParams, rng) -> bool:
    """One slot with fresh unit-mean exponential fades on every active link."""
    sap, d0, d = _link_geometry(net, ue, mask)
    if not mask[sap]:
        raise ValueError("serving SAP is muted")
    h0 = rng.exponential()
    h = rng.exponential(size=d.size)
    signal = params.p_st * h0 * path_loss(d0, params.alpha)
    interference = params.p_st * np.sum(h * np.atleast_1d(path_loss(d, params.alpha))) if d.size else 0.0
    if interference == 0.0:
        return True
    return bool(signal / interference > params.theta)


def conditional_success_prob(net: NetworkRealization, ue, mask, params: ChannelParams) -> float:
    """Success probability over the fades, given geometry and activity."""
    _, d0, d = _link_geometry(net, ue, mask)
    return float(np.prod(1.0 / (1.0 + params.theta * (d0 / d) ** params.alpha)))


def log_success_factors(net: NetworkRealization, params: ChannelParams) -> np.ndarray:
    """``log(1/(1 + theta (d0/d)**alpha))`` for every (UE, interfering SAP) pair.

    Shape ``(n_sap * k_s, n_sap)`` in flat UE order; the serving SAP's entry
    is 0 so a mask product over all active SAPs skips it.
    """
    d = net.distances()
    d0 = net.link_distance.reshape(-1, 1)
    out = -np.log1p(params.theta * (d0 / d) ** params.alpha)
    out[np.arange(out.shape[0]), net.serving_sap()] = 0.0
    return out
