"""Experiments behind the ``analyze``, ``simulate`` and ``outage-sweep`` commands."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

from ..analytic import PolicyKind, SolverError, cdf_delay, delay_outage, solve_meta_distribution
from ..geometry import sample_network
from ..queuesim import pooled_mean_delays, run_network
from .config import ScenarioConfig
from .tables import ResultTable

log = logging.getLogger(__name__)

_POLICY_CODE = {PolicyKind.RS: 1, PolicyKind.RR: 2}


class DataError(RuntimeError):
    """The simulation produced nothing to measure."""


def policies(policy=None) -> list[PolicyKind]:
    return [PolicyKind.RS, PolicyKind.RR] if policy is None else [PolicyKind.parse(policy)]


def _pool_map(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# -- analysis ----------------------------------------------------------------


def solve_scenario(cfg: ScenarioConfig, xi: float | None = None, k_s: int | None = None, check_inits: bool = True):
    """Meta distribution for ``(xi, k_s)``; both initializations when ``check_inits``.

    A disagreement between the all-active and all-idle starts above
    ``10 * fp_tol`` is logged, and the all-active solution is returned.
    """
    xi = cfg.xi if xi is None else xi
    k_s = cfg.k_s if k_s is None else k_s
    f = solve_meta_distribution(cfg.solver, cfg.delta, cfg.theta, xi, k_s, init="active")
    if check_inits:
        g = solve_meta_distribution(cfg.solver, cfg.delta, cfg.theta, xi, k_s, init="idle")
        gap = float(np.max(np.abs(f.f_values - g.f_values)))
        if gap > 10 * cfg.solver.fp_tol:
            log.warning("xi=%g K=%d: active and idle starts differ by %.3g (possible second fixed point)", xi, k_s, gap)
        else:
            log.info("xi=%g K=%d: initializations agree to %.2g", xi, k_s, gap)
    return f


def cmd_analyze(cfg: ScenarioConfig, policy=None) -> ResultTable:
    """Analytic ``P(D <= T)`` on the configured T grid."""
    f = solve_scenario(cfg)
    t = cfg.t_grid()
    table = ResultTable()
    for pol in policies(policy):
        for ti, val in zip(t, cdf_delay(f, t, cfg.xi, cfg.k_s, pol)):
            table.add(policy=pol.value, abscissa=float(ti), analytic=float(val))
    return table.sorted()


# -- simulation --------------------------------------------------------------


def realization_seed(master_seed: int, r: int) -> int:
    """Geometry seed of realization ``r``; shared by both policies."""
    return int(np.random.SeedSequence([master_seed, r]).generate_state(1, np.uint64)[0])


def simulate_realization(cfg: ScenarioConfig, policy, r: int):
    pol = PolicyKind.parse(policy)
    net = sample_network(cfg.lambda_s, cfg.k_s, cfg.window(), realization_seed(cfg.master_seed, r))
    rng = np.random.default_rng([cfg.master_seed, r, _POLICY_CODE[pol]])
    return run_network(
        net,
        pol,
        cfg.channel(),
        cfg.xi,
        cfg.warmup_slots,
        cfg.measure_slots,
        rng,
        fading=cfg.fading,
        advance_when_muted=cfg.rr_advance_when_muted,
    )


def simulate_stats(cfg: ScenarioConfig, policy, jobs: int = 1) -> list:
    """``DelayStats`` of every realization, in realization order."""
    return _pool_map(partial(simulate_realization, cfg, policy), range(cfg.realizations), jobs)


def bootstrap_cdf_ci(delays, t_grid, rng, n_boot: int = 1000, level: float = 0.95) -> np.ndarray:
    """Half-width of the percentile bootstrap interval of the empirical CDF.

    Resampling UEs with replacement moves mass between the bins cut by the
    T grid as a multinomial, so the counts are drawn directly.
    """
    delays = np.sort(np.asarray(delays, dtype=float))
    n = delays.size
    k = np.searchsorted(delays, t_grid, side="right")
    p = np.diff(np.concatenate([[0], k, [n]])) / n
    counts = rng.multinomial(n, p, size=n_boot)
    cdf = np.cumsum(counts, axis=1)[:, :-1] / n
    lo, hi = np.quantile(cdf, [(1 - level) / 2, (1 + level) / 2], axis=0)
    return (hi - lo) / 2


def cmd_simulate(cfg: ScenarioConfig, policy=None, jobs: int = 1) -> ResultTable:
    """Empirical CDF of per-UE mean delay pooled over realizations."""
    if cfg.realizations == 1:
        log.warning("a single realization gives a noisy CDF; consider more")
    t = cfg.t_grid()
    table = ResultTable()
    for pol in policies(policy):
        delays = pooled_mean_delays(simulate_stats(cfg, pol, jobs))
        if delays.size == 0:
            raise DataError(f"{pol.value}: no measurable UEs in {cfg.realizations} realization(s)")
        if delays.size < 100:
            log.warning("%s: only %d measured UEs; the CDF is coarse", pol.value, delays.size)
        emp = (delays[None, :] <= t[:, None]).mean(axis=1)
        ci = bootstrap_cdf_ci(delays, t, np.random.default_rng([cfg.master_seed, 0xB007, _POLICY_CODE[pol]]))
        for ti, e, c in zip(t, emp, ci):
            table.add(policy=pol.value, abscissa=float(ti), simulated=float(e), ci_half=float(c),
                      realizations=cfg.realizations)
    return table.sorted()


# -- outage sweep --------------------------------------------------------------


def sweep_label(policy: PolicyKind, xi: float) -> str:
    return f"{policy.value}@xi={xi:g}"


def _outage_point(cfg: ScenarioConfig, point):
    xi, k_s = point
    try:
        f = solve_scenario(cfg, xi, k_s)
    except SolverError as exc:
        log.warning("xi=%g K=%d: solver failed (%s); row left empty", xi, k_s, exc)
        return {pol: math.nan for pol in PolicyKind}
    return {pol: float(delay_outage(f, cfg.t0, xi, k_s, pol)) for pol in PolicyKind}


def cmd_outage_sweep(cfg: ScenarioConfig, k_s_list=None, xi_list=None, jobs: int = 1) -> ResultTable:
    """Analytic ``P(D > t0)`` over ``K_s`` for each rate; policy labels carry the rate."""
    k_s_list = list(cfg.sweep_k_s if k_s_list is None else k_s_list)
    xi_list = list(cfg.sweep_xi if xi_list is None else xi_list)
    if not k_s_list or not xi_list:
        raise ValueError("outage sweep needs nonempty K_s and xi lists")
    points = [(xi, k) for xi in xi_list for k in k_s_list]
    values = _pool_map(partial(_outage_point, cfg), points, jobs)
    table = ResultTable()
    for (xi, k), out in zip(points, values):
        for pol, v in out.items():
            table.add(policy=sweep_label(pol, xi), abscissa=float(k), analytic=v)
    return table.sorted()
