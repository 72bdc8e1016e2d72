"""Mean delay of a Geo/Geo/1-type queue under random and round-robin scheduling.

Conditioned on the service rate ``mu`` of its link, a UE sharing its access
point with ``K - 1`` others sees a closed-form mean delay.  Mapping those
closed forms through the meta distribution ``F`` of ``mu`` gives the CDF of
the mean delay across the network.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np


class PolicyKind(str, Enum):
    RS = "rs"
    RR = "rr"

    @classmethod
    def parse(cls, value) -> "PolicyKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def _check_mu(mu):
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"service probability must lie in (0, 1], got {mu!r}")


def mean_delay_rs(mu: float, xi: float, k_s: int) -> float:
    """Mean sojourn (slots) under random scheduling; ``inf`` when unstable."""
    _check_mu(mu)
    rate = mu / k_s
    if rate <= xi:
        return math.inf
    return (1.0 - xi) / (rate - xi)


def mean_delay_rr(mu: float, xi: float, k_s: int) -> float:
    """Mean sojourn (slots) under round robin; ``inf`` when unstable."""
    _check_mu(mu)
    rate = mu / k_s
    if rate <= xi:
        return math.inf
    return (1.0 - (k_s + 1) * xi / 2.0) / (rate - xi) - (k_s - 1) / 2.0


def mean_delay(mu: float, xi: float, k_s: int, policy) -> float:
    if PolicyKind.parse(policy) is PolicyKind.RS:
        return mean_delay_rs(mu, xi, k_s)
    return mean_delay_rr(mu, xi, k_s)


def rs_rr_gap(mu: float, xi: float, k_s: int) -> float:
    """Closed-form advantage of round robin, ``(K-1)/2 * mu / (mu - K xi)``."""
    _check_mu(mu)
    if mu <= k_s * xi:
        return math.inf
    return (k_s - 1) / 2.0 * mu / (mu - k_s * xi)


def tau_a(mu: float, xi: float, k_s: int) -> float:
    """Probability that the access point has a packet for its scheduled UE."""
    _check_mu(mu)
    return min(k_s * xi / mu, 1.0)


def rate_threshold(T, xi: float, k_s: int, policy):
    """Service rate a UE needs for its mean delay to be at most ``T``.

    ``P(D <= T) = 1 - F(rate_threshold(T))``.  Values above 1 mean no rate
    suffices.  Both policies share the numerator ``K (1 + xi (T - 1))``, which
    keeps ``T = 1`` exact (``K`` for RS, ``2K/(K+1)`` for RR).
    """
    T = np.asarray(T, dtype=float)
    num = k_s * (1.0 + xi * (T - 1.0))
    if PolicyKind.parse(policy) is PolicyKind.RS:
        return num / T
    return num / (T + (k_s - 1) / 2.0)


def _check_T(T):
    if np.any(np.asarray(T) < 1):
        raise ValueError("delay bound T must be at least one slot")


def cdf_delay(f, T, xi: float, k_s: int, policy):
    """``P(D <= T)`` for the given policy; ``f`` is a callable meta distribution."""
    _check_T(T)
    x = rate_threshold(T, xi, k_s, policy)
    val = 1.0 - np.where(x >= 1.0, 1.0, f(np.minimum(x, 1.0)))
    return float(val) if np.ndim(val) == 0 else val


def cdf_delay_rs(f, T, xi: float, k_s: int):
    return cdf_delay(f, T, xi, k_s, PolicyKind.RS)


def cdf_delay_rr(f, T, xi: float, k_s: int):
    return cdf_delay(f, T, xi, k_s, PolicyKind.RR)


def delay_outage(f, T0, xi: float, k_s: int, policy):
    """Fraction of UEs whose mean delay exceeds ``T0``."""
    val = 1.0 - np.asarray(cdf_delay(f, T0, xi, k_s, policy))
    return float(val) if val.ndim == 0 else val


def tail_gap(f, T, xi: float, k_s: int, policy):
    """``P(D > T) - F(xi K)``: the part of the outage that still decays in ``T``."""
    floor = f(min(xi * k_s, 1.0))
    val = np.asarray(delay_outage(f, T, xi, k_s, policy)) - floor
    return float(val) if val.ndim == 0 else val
