"""Fixed-point solver for the meta distribution of the service rate.

The conditional success probability ``mu`` of a typical link depends on which
interfering access points are active, and each access point is active with
probability ``tau = min(xi*K/mu_x, 1)`` set by its *own* service rate.  The
CDF ``F`` of ``mu`` therefore appears on both sides of its Gil-Pelaez
inversion formula and is found by damped iteration on a grid in ``u``.

Moments ``E[mu**(j*w)]`` are assembled from the activity distribution in two
equivalent ways:

* the binomial series ``1 + delta * sum_k binom(j*w, k) E[tau**k] Z(k)`` for
  small ``w`` where its terms are well conditioned, and
* the direct integral ``1 + delta * E_tau int_0^1 (1 - (1 - tau g(t))**(j*w))
  t**(-delta-1) dt`` with ``g(t) = theta t / (1 + theta t)`` elsewhere.

The series loses all significance once ``|binom(j*w, k)| (theta/(1+theta))**k``
grows beyond ~1e16, which already happens near ``w ~ 70`` for ``theta = 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, special

from .special import complex_binomials, z_kernels

log = logging.getLogger(__name__)

_GL8 = np.polynomial.legendre.leggauss(8)
_LAGUERRE = np.polynomial.laguerre.laggauss(48)


class SolverError(RuntimeError):
    """The fixed point or one of its series expansions failed to converge."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


@dataclass(frozen=True)
class FixedPointParams:
    """Discretization and iteration controls for :func:`solve_meta_distribution`.

    ``omega_tol`` bounds the rounding error tolerated in a series-evaluated
    moment; frequencies where the series cannot meet it use the integral form.
    """

    m_grid: int = 200
    k_max: int = 64
    omega_max: float = 200.0
    omega_tol: float = 1e-10
    fp_tol: float = 1e-6
    fp_max_iter: int = 200
    damping: float = 0.7
    omega_panel: float = 0.5
    u_min: float = 1e-3
    series_tol: float = 1e-12

    def __post_init__(self):
        for name in ("m_grid", "k_max", "omega_max", "omega_tol", "fp_tol", "fp_max_iter"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.fp_tol > 1e-5:
            raise ValueError("fp_tol must not exceed 1e-5")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if self.m_grid < 20:
            raise ValueError("m_grid must be at least 20")


def u_grid(m: int, u_min: float = 1e-3, anchor: float | None = None) -> np.ndarray:
    """Strictly increasing grid over ``[u_min, 1]`` with at most ``m`` points.

    A geometric segment covers ``[u_min, 0.05)``, a uniform body covers
    ``[0.05, 1]``.  ``anchor`` (the load ``xi*K``) is inserted exactly when it
    falls inside the grid range.
    """
    n_geo = max(m // 5, 2)
    n_body = m - n_geo - 1
    lo = min(u_min, 0.05)
    geo = np.geomspace(lo, 0.05, n_geo, endpoint=False)
    body = np.linspace(0.05, 1.0, n_body)
    grid = np.concatenate([geo, body])
    if anchor is not None and lo < anchor < 1.0:
        grid = np.union1d(grid, [anchor])
    return np.unique(grid)


def _omega_rule(omega_max: float, panel: float):
    n_panels = max(int(np.ceil(omega_max / panel)), 1)
    edges = np.linspace(0.0, omega_max, n_panels + 1)
    x, w = _GL8
    a, b = edges[:-1, None], edges[1:, None]
    nodes = ((a + b) / 2 + (b - a) / 2 * x).ravel()
    weights = ((b - a) / 2 * w).ravel()
    return nodes, weights


def _s_rule(n_panels: int, grading: int = 6):
    """Gauss panels on ``[0, 1]``; the first panel is split geometrically.

    After the substitution the integrand still carries a non-integer power
    ``s**(1/(1-delta))`` at the origin, which uniform panels resolve poorly.
    """
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    h = edges[1]
    edges = np.concatenate([[0.0], h * 2.0 ** -np.arange(grading, 0, -1), edges[1:]])
    x, w = _GL8
    a, b = edges[:-1, None], edges[1:, None]
    return ((a + b) / 2 + (b - a) / 2 * x).ravel(), ((b - a) / 2 * w).ravel()


def interference_transform(tau, omega, delta: float, theta: float) -> np.ndarray:
    """``J(tau, w) = int_0^1 (1 - (1 - tau g(t))**(j w)) t**(-delta-1) dt``.

    Returns an array of shape ``(len(tau), len(omega))``.  The substitution
    ``t = s**(1/(1-delta))`` removes the endpoint singularity; the number of
    Gauss panels in ``s`` scales with the largest frequency of each chunk so
    the oscillation of ``(1 - tau g)**(j w)`` stays resolved.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    p = 1.0 / (1.0 - delta)
    out = np.empty((tau.size, omega.size), dtype=complex)
    order = np.argsort(omega)
    chunk = 64
    for start in range(0, omega.size, chunk):
        idx = order[start:start + chunk]
        w_hi = omega[idx].max()
        n_panels = int(np.ceil(w_hi * np.log1p(theta) / np.pi)) + 6
        s, ws = _s_rule(n_panels)
        t = s**p
        g = theta * t / (1.0 + theta * t)
        jac = p * s ** (-p * delta - 1.0) * ws
        phase = np.log1p(-tau[:, None] * g[None, :])  # (n_tau, n_s)
        arg = 1j * omega[idx][:, None, None] * phase[None, :, :]
        vals = -np.expm1(arg) @ jac  # (n_w, n_tau)
        out[:, idx] = vals.T
    return out


def _panel_transform(tau, omega_max: float, panel: float, delta: float, theta: float) -> np.ndarray:
    """``interference_transform`` at the nodes of ``_omega_rule(omega_max, panel)``.

    Node ``j`` of panel ``q`` sits at ``c_q + h x_j`` with centres ``c_q``
    equally spaced, so ``exp(1j w phase)`` moves from one panel to the next by
    a fixed factor.  Each chunk of eight panels starts from fresh exponentials
    and then advances by multiplication, which keeps rounding at a few ulps.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    n_panels = max(int(np.ceil(omega_max / panel)), 1)
    width = omega_max / n_panels
    x, _ = _GL8
    p = 1.0 / (1.0 - delta)
    out = np.empty((tau.size, n_panels * x.size), dtype=complex)
    per_chunk = 8
    for q0 in range(0, n_panels, per_chunk):
        q1 = min(q0 + per_chunk, n_panels)
        n_s = int(np.ceil(q1 * width * np.log1p(theta) / np.pi)) + 6
        s, ws = _s_rule(n_s)
        t = s**p
        g = theta * t / (1.0 + theta * t)
        jac = p * s ** (-p * delta - 1.0) * ws
        phase = np.log1p(-tau[:, None] * g[None, :])
        nodes = (q0 + 0.5) * width + 0.5 * width * x
        # carry exp(1j w phase) - 1, which stays accurate where phase -> 0
        cur = np.expm1(1j * nodes[:, None, None] * phase[None, :, :])
        step = np.expm1(1j * width * phase)
        advance = 1.0 + step
        for q in range(q0, q1):
            if q > q0:
                cur *= advance
                cur += step
            out[:, q * x.size:(q + 1) * x.size] = -(cur @ jac).T
    return out


def _series_band(omega, delta, theta, k_max, omega_tol, series_tol):
    """Mask of frequencies where the binomial series is trustworthy.

    Bounds use ``E[tau**k] <= 1``: the series must fall below ``series_tol``
    for three consecutive terms before ``k_max`` and its largest term times
    machine epsilon must stay below ``omega_tol``.
    """
    zk = np.abs(z_kernels(k_max, delta, theta))
    terms = np.abs(complex_binomials(1j * omega, k_max)) * zk
    small = terms < series_tol
    run = small[:, :-2] & small[:, 1:-1] & small[:, 2:]
    decayed = run.any(axis=1)
    conditioned = terms.max(axis=1) * np.finfo(float).eps < omega_tol
    return decayed & conditioned


def series_inverse_moment(omega, moments, delta: float, theta: float, tol: float = 1e-12) -> np.ndarray:
    """``1 + delta * sum_k binom(j w, k) m_k Z(k, delta, theta)`` for each ``w``.

    ``moments[k-1]`` is ``E[tau**k]``.  Raises :class:`SolverError` when the
    terms have not fallen below ``tol`` for three consecutive ``k`` by the end
    of the supplied moments.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    moments = np.asarray(moments, dtype=float)
    k_max = moments.size
    zk = z_kernels(k_max, delta, theta)
    terms = complex_binomials(1j * omega, k_max) * (moments * zk)
    small = np.abs(terms) < tol
    if k_max < 3 or not (small[:, -3:].all(axis=1)).all():
        raise SolverError(
            f"k-series has not decayed by k_max={k_max}; raise k_max or lower theta"
        )
    return 1.0 + delta * terms.sum(axis=1)


def _tail_integral(b, omega_max, delta):
    """``int_W^inf exp(j b w) w**(-1-delta) dw`` for ``b > 0``, vectorized over ``b``."""
    b = np.asarray(b, dtype=float)
    z = b * omega_max
    out = np.empty(b.shape, dtype=complex)
    small = z <= 2.0
    if small.any():
        # E_{1+delta}(-j z) by its convergent power series
        zs = -1j * z[small]
        acc = zs**delta * special.gamma(-delta)
        term = np.ones_like(zs)
        for n in range(60):
            if n:
                term = term * (-zs) / n
            acc = acc - term / (n - delta)
        out[small] = omega_max ** (-delta) * acc
    big = ~small
    if big.any():
        x, w = _LAGUERRE
        zb = z[big][:, None]
        integral = (w * (1.0 + 1j * x / zb) ** (-1.0 - delta)).sum(axis=1)
        out[big] = 1j / b[big] * omega_max ** (-1.0 - delta) * np.exp(1j * z[big]) * integral
    return out


@dataclass
class _Inversion:
    """Frozen Gil-Pelaez quadrature for one moment function."""

    omega: np.ndarray
    weight: np.ndarray
    moment: np.ndarray
    moment_at_max: complex
    moment_inf: float
    omega_max: float
    delta: float

    def cdf(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.ones(u.shape)
        inside = (u > 0) & (u < 1)
        a = np.log(u[inside])
        kern = self.moment * self.weight / self.omega
        body = np.imag(np.exp(-1j * np.outer(a, self.omega)) @ kern)
        b = -a
        amp = self.moment_at_max - self.moment_inf
        tail = np.imag(amp * self.omega_max**self.delta * _tail_integral(b, self.omega_max, self.delta))
        if self.moment_inf:
            # constant part: int_W^inf sin(b w)/w dw = pi/2 - Si(b W)
            si, _ = special.sici(b * self.omega_max)
            tail = tail + self.moment_inf * (np.pi / 2 - si)
        out[inside] = 0.5 - (body + tail) / np.pi
        out[u <= 0] = 0.0
        return out


@dataclass
class MetaDistGrid:
    """Tabulated CDF of the conditional service rate.

    ``f_values[i]`` is ``F(u_grid[i])``.  Calling the object evaluates ``F``
    anywhere: arguments ``>= 1`` give 1, arguments below ``u_grid[0]`` are
    extrapolated linearly to 0, and interior points use a monotone
    interpolant of a dense Gil-Pelaez table built at convergence.
    """

    u_grid: np.ndarray
    f_values: np.ndarray
    converged: bool
    iterations: int
    sup_delta: float
    xi: float
    k_s: int
    delta: float
    theta: float
    trace: list = field(default_factory=list)
    projection: float = 0.0
    _interp: object = field(default=None, repr=False)

    @property
    def load(self) -> float:
        return self.xi * self.k_s

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.ones(x.shape)
        u0, f0 = self.u_grid[0], self.f_values[0]
        low = x < u0
        out[low] = f0 * np.clip(x[low], 0.0, None) / u0
        mid = (x >= u0) & (x < 1.0)
        if mid.any():
            if self._interp is None:
                out[mid] = np.interp(x[mid], self.u_grid, self.f_values)
            else:
                out[mid] = self._interp(x[mid])
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if scalar else out


def _atoms(u, xi_k):
    """Locations of the activity atoms induced by a CDF on ``u``.

    Returns ``(tau, index)`` where atom 0 is ``tau = 1`` carrying ``F(xi K)``
    and atom ``i >= 1`` sits at ``xi K / t`` with ``t`` the midpoint of the
    ``i``-th grid interval above the load; ``index`` lists the upper grid
    index of each interval.
    """
    above = np.nonzero(u > xi_k)[0]
    above = above[above >= 1]
    mids = 0.5 * (u[above - 1] + u[above])
    tau = np.concatenate([[1.0], np.minimum(xi_k / mids, 1.0)])
    return tau, above


def _atom_weights(u, f, xi_k, above):
    f_load = np.interp(xi_k, u, f) if xi_k < 1.0 else 1.0
    dF = f[above] - f[above - 1]
    return np.concatenate([[f_load], dF])


def activity_moment(f: MetaDistGrid, xi: float, k_s: int, k: int) -> float:
    """``E[tau**k]`` with ``tau = min(xi K / mu, 1)`` and ``mu ~ f``.

    Stieltjes sum: the mass ``F(xi K)`` saturates at 1, each grid increment
    above the load contributes ``(xi K / t)**k`` at its midpoint ``t``.
    """
    xi_k = xi * k_s
    if xi_k >= 1.0:
        return 1.0
    if xi_k <= 0.0:
        return 0.0
    tau, above = _atoms(f.u_grid, xi_k)
    w = _atom_weights(f.u_grid, f.f_values, xi_k, above)
    return float(np.clip(w @ tau**k, 0.0, 1.0))


def _dense_points(u_min):
    near_one = 1.0 - np.geomspace(1e-6, 0.05, 400)
    return np.unique(np.concatenate([np.geomspace(u_min, 0.05, 300), np.linspace(0.05, 0.95, 1200), near_one]))


def solve_meta_distribution(
    params: FixedPointParams,
    delta: float,
    theta: float,
    xi: float,
    k_s: int,
    init: str = "active",
    method: str = "hybrid",
) -> MetaDistGrid:
    """Solve the fixed point for the service-rate meta distribution.

    Parameters
    ----------
    delta, theta : float
        ``2/alpha`` and the linear SIR threshold.
    xi, k_s : float, int
        Per-UE arrival rate and UEs per access point.
    init : {"active", "idle"}
        ``"active"`` starts from every interferer transmitting (all moments 1),
        ``"idle"`` from ``mu = 1`` almost surely (moments ``(xi K)**k``).
    method : {"hybrid", "integral"}
        ``"hybrid"`` uses the binomial series where well conditioned.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1); alpha must exceed 2")
    if theta <= 0:
        raise ValueError("theta must be positive")
    if not 0.0 <= xi <= 1.0 or k_s < 1:
        raise ValueError("need 0 <= xi <= 1 and k_s >= 1")
    if init not in ("active", "idle"):
        raise ValueError(f"unknown init {init!r}")
    if method not in ("hybrid", "integral"):
        raise ValueError(f"unknown method {method!r}")

    xi_k = xi * k_s
    u = u_grid(params.m_grid, params.u_min, anchor=xi_k)
    omega, wt = _omega_rule(params.omega_max, params.omega_panel)
    all_omega = np.append(omega, params.omega_max)

    if xi_k <= 0.0:
        moment_inf = 1.0
    else:
        moment_inf = 0.0
    saturated = xi_k >= 1.0

    if saturated or xi_k <= 0.0:
        tau = np.array([1.0 if saturated else 0.0])
        above = np.array([], dtype=int)
    else:
        tau, above = _atoms(u, xi_k)
        # trailing atom at tau = xi K carries the idle initial state
        tau = np.append(tau, xi_k)

    series = np.zeros(all_omega.size, dtype=bool)
    if method == "hybrid":
        series = _series_band(all_omega, delta, theta, params.k_max, params.omega_tol, params.series_tol)
    if series.any():
        zk = z_kernels(params.k_max, delta, theta)
        binoms = complex_binomials(1j * all_omega[series], params.k_max) * zk
        powers = tau[:, None] ** np.arange(1, params.k_max + 1)[None, :]
    transform = np.zeros((tau.size, all_omega.size), dtype=complex)
    if (~series).any():
        transform[:, :-1] = _panel_transform(tau, params.omega_max, params.omega_panel, delta, theta)
        transform[:, -1:] = interference_transform(tau, all_omega[-1:], delta, theta)

    def inverse_moment(weights):
        inv = np.empty(all_omega.size, dtype=complex)
        if series.any():
            moments = weights @ powers
            inv[series] = 1.0 + delta * binoms @ moments
        if (~series).any():
            inv[~series] = 1.0 + delta * (weights @ transform[:, ~series])
        return inv

    def gil_pelaez(weights):
        mom = 1.0 / inverse_moment(weights)
        return _Inversion(omega, wt, mom[:-1], mom[-1], moment_inf, params.omega_max, delta)

    def weights_of(f):
        if saturated or xi_k <= 0.0:
            return np.array([1.0])
        return np.append(_atom_weights(u, f, xi_k, above), 0.0)

    if init == "active":
        f = np.ones(u.size)
    else:
        f = np.zeros(u.size)
        f[-1] = 1.0

    trace = []
    projection = 0.0
    converged = False
    it = 0
    for it in range(1, params.fp_max_iter + 1):
        weights = weights_of(f)
        if init == "idle" and it == 1 and weights.size > 1:
            weights = np.zeros(tau.size)
            weights[-1] = 1.0
        inversion = gil_pelaez(weights)
        target = inversion.cdf(u)
        target[-1] = 1.0
        target = np.clip(target, 0.0, 1.0)
        mono = np.maximum.accumulate(target)
        projection = max(projection, float(np.max(mono - target)))
        step = float(np.max(np.abs(mono - f)))
        trace.append(step)
        beta = 1.0 if (saturated or xi_k <= 0.0) else params.damping
        f = (1.0 - beta) * f + beta * mono
        if step < params.fp_tol:
            converged = True
            break
    log.debug("meta distribution: %d iterations, sup change %.3g", it, trace[-1])
    if not converged:
        raise SolverError(
            f"fixed point not reached after {params.fp_max_iter} iterations "
            f"(last sup change {trace[-1]:.3g})",
            trace,
        )
    if projection > 10 * params.fp_tol:
        log.info("monotone projection %.3g exceeds 10*fp_tol", projection)

    final = gil_pelaez(weights_of(f))
    dense_u = _dense_points(u[0])
    dense_f = np.maximum.accumulate(np.clip(final.cdf(dense_u), 0.0, 1.0))
    dense_u = np.append(dense_u, 1.0)
    dense_f = np.append(dense_f, max(dense_f[-1], 1.0 if xi_k > 0 else dense_f[-1]))
    interp = interpolate.PchipInterpolator(dense_u, dense_f, extrapolate=False)
    return MetaDistGrid(
        u_grid=u,
        f_values=f,
        converged=converged,
        iterations=it,
        sup_delta=trace[-1],
        xi=xi,
        k_s=k_s,
        delta=delta,
        theta=theta,
        trace=trace,
        projection=projection,
        _interp=interp,
    )
