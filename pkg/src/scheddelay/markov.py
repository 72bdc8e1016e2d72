"""Queue of one UE under round robin as a truncated Markov chain.

Between its service slots the queue only grows (``P_A``); in its service slot
it can also shrink (``P_D``).  Observing the queue once per round gives the
chain ``P_T = P_A**(K-1) P_D``.  States ``0 .. Q-1`` count backlogged
packets; overflow is lumped into ``Q-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse


class ChainError(RuntimeError):
    """Power iteration failed to settle; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def kappas(xi: float, mu: float) -> tuple[float, float, float]:
    """Up, down and stay probabilities of a backlogged queue in a service slot."""
    k1 = xi * (1.0 - mu)
    k2 = (1.0 - xi) * mu
    k3 = (1.0 - xi) * (1.0 - mu) + xi * mu
    return k1, k2, k3


def build_pa(xi: float, q: int) -> np.ndarray:
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    if q < 2:
        raise ValueError("truncation size must be at least 2")
    pa = np.diag(np.full(q, 1.0 - xi)) + np.diag(np.full(q - 1, xi), 1)
    pa[-1, -1] = 1.0
    return pa


def build_pd(xi: float, mu: float, q: int, kappa=kappas) -> np.ndarray:
    """Service-slot transitions; ``kappa`` is swappable for mutation tests."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    if not 0.0 < mu <= 1.0:
        raise ValueError("mu must lie in (0, 1]")
    if q < 2:
        raise ValueError("truncation size must be at least 2")
    k1, k2, k3 = kappa(xi, mu)
    pd = np.zeros((q, q))
    pd[0, 0] = 1.0 - xi
    pd[0, 1] = xi
    i = np.arange(1, q)
    pd[i, i - 1] = k2
    pd[i, i] = k3
    pd[i[:-1], i[:-1] + 1] = k1
    pd[-1, -1] += k1
    return pd


def compose_round(pa: np.ndarray, pd: np.ndarray, k_s: int) -> np.ndarray:
    """``P_A`` applied ``k_s - 1`` times, then ``P_D``."""
    if pa.shape != pd.shape or pa.shape[0] != pa.shape[1]:
        raise ValueError(f"shape mismatch: {pa.shape} vs {pd.shape}")
    if k_s < 1:
        raise ValueError("k_s must be at least 1")
    out = np.eye(pa.shape[0])
    for _ in range(k_s - 1):
        out = out @ pa
    return out @ pd


@dataclass
class TransitionMatrices:
    xi: float
    mu: float
    k_s: int
    q: int
    P_A: np.ndarray
    P_D: np.ndarray
    P_T: np.ndarray

    @classmethod
    def build(cls, xi, mu, k_s, q, kappa=kappas):
        pa = build_pa(xi, q)
        pd = build_pd(xi, mu, q, kappa=kappa)
        return cls(xi, mu, k_s, q, pa, pd, compose_round(pa, pd, k_s))

    @property
    def kappa(self):
        return kappas(self.xi, self.mu)

    def max_row_error(self) -> float:
        return max(float(np.max(np.abs(m.sum(axis=1) - 1.0))) for m in (self.P_A, self.P_D, self.P_T))


@dataclass
class SteadyState:
    v: np.ndarray
    residual: float
    iterations: int

    @property
    def tail_mass(self) -> float:
        return float(self.v[-1])


def steady_state(pt, tol: float = 1e-12, max_iter: int = 500_000, v0=None) -> SteadyState:
    """Left Perron vector of a row-stochastic matrix by power iteration.

    Stops once the sup-norm change of ``v`` falls below ``tol`` and the
    residual ``|v P - v|`` is below 1e-10.
    """
    pt = sparse.csr_matrix(pt)
    ptT = pt.T.tocsr()
    q = pt.shape[0]
    if v0 is None:
        v = np.zeros(q)
        v[0] = 1.0
    else:
        v = np.asarray(v0, dtype=float).copy()
        v /= v.sum()
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = ptT @ v
        nxt /= nxt.sum()
        residual = float(np.max(np.abs(nxt - v)))
        v = nxt
        if residual < tol:
            final = float(np.max(np.abs(ptT @ v - v)))
            if final >= 1e-10:
                raise ChainError(f"residual {final:.3g} after convergence", final)
            return SteadyState(v, final, it)
    raise ChainError(f"power iteration did not converge in {max_iter} sweeps", residual)


def dense_steady_state(pt: np.ndarray) -> np.ndarray:
    """Direct solve of ``v (P - I) = 0, sum v = 1``; cross-check for small ``Q``."""
    q = pt.shape[0]
    a = (pt - np.eye(q)).T
    a[-1, :] = 1.0
    rhs = np.zeros(q)
    rhs[-1] = 1.0
    return np.linalg.solve(a, rhs)


def solve_round_chain(
    xi: float,
    mu: float,
    k_s: int,
    q0: int = 64,
    q_max: int = 1024,
    tail_tol: float = 1e-9,
    tol: float = 1e-12,
    kappa=kappas,
):
    """Build and solve the round chain, doubling ``Q`` until the tail is negligible.

    Returns ``(TransitionMatrices, SteadyState)``.  For ``xi >= mu / k_s`` the
    mass escapes upward and the cap is hit; that raises :class:`ChainError`.
    """
    q = q0
    v0 = None
    while True:
        chain = TransitionMatrices.build(xi, mu, k_s, q, kappa=kappa)
        ss = steady_state(chain.P_T, tol=tol, v0=v0)
        if ss.tail_mass < tail_tol:
            return chain, ss
        if q >= q_max:
            raise ChainError(
                f"tail mass {ss.tail_mass:.3g} at Q={q}: queue unstable for "
                f"xi={xi}, mu={mu}, K={k_s}",
                ss.residual,
            )
        v0 = np.concatenate([ss.v, np.zeros(q)])
        q *= 2


def service_epoch(chain: TransitionMatrices, ss: SteadyState) -> np.ndarray:
    """Queue-length law at the start of the UE's service slot."""
    v = ss.v
    for _ in range(chain.k_s - 1):
        v = v @ chain.P_A
    return v


def queue_nonempty_prob(chain: TransitionMatrices, ss: SteadyState) -> float:
    """Probability of a backlog when the UE is scheduled; equals ``min(K xi/mu, 1)``."""
    return 1.0 - float(service_epoch(chain, ss)[0])


def rr_mean_delay_numeric(chain: TransitionMatrices, ss: SteadyState, convention: str = "little") -> float:
    """Mean packet delay (slots) from the round chain.

    ``convention="little"`` averages the queue length over the ``K`` slot
    boundaries of a round and divides by ``xi`` (Little's law); this matches
    the closed form and simulation.  ``convention="round"`` returns the raw
    ``sum_i i v_i + 1/mu`` evaluated on the round-boundary law.
    """
    n = np.arange(chain.q)
    if convention == "round":
        return float(ss.v @ n) + 1.0 / chain.mu
    if convention != "little":
        raise ValueError(f"unknown convention {convention!r}")
    if chain.xi == 0.0:
        # empty-queue limit: uniform wait for the turn plus geometric retries
        return chain.k_s / chain.mu - (chain.k_s - 1) / 2.0
    v = ss.v
    total = 0.0
    for j in range(chain.k_s):
        total += float(v @ n)
        if j < chain.k_s - 1:
            v = v @ chain.P_A
    return total / chain.k_s / chain.xi
