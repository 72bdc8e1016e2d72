import mpmath
import numpy as np
import pytest
from scipy import integrate

from scheddelay.analytic import (
    FixedPointParams,
    SolverError,
    activity_moment,
    interference_transform,
    series_inverse_moment,
    solve_meta_distribution,
    u_grid,
)
from scheddelay.analytic.meta import _omega_rule, _panel_transform

DELTA = 2 / 3.8


def test_u_grid_layout():
    u = u_grid(200, 1e-3, anchor=0.15)
    assert u[0] == 1e-3 and u[-1] == 1.0
    assert np.all(np.diff(u) > 0)
    assert 0.15 in u
    assert u.size <= 200


@pytest.mark.parametrize("kw", [{"m_grid": 10}, {"fp_tol": 1e-3}, {"damping": 0.0}, {"k_max": 0}])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        FixedPointParams(**kw)


def test_transform_vanishes_at_zero_frequency():
    assert np.allclose(interference_transform([0.3, 1.0], [0.0], DELTA, 1.0), 0.0)


def test_series_and_integral_forms_agree():
    omega = np.array([0.1, 1.0, 5.0, 20.0])
    tau = np.array([0.2, 0.7, 1.0])
    weights = np.array([0.5, 0.3, 0.2])
    moments = weights @ (tau[:, None] ** np.arange(1, 121)[None, :])
    series = series_inverse_moment(omega, moments, DELTA, 1.0)
    integral = 1 + DELTA * (weights @ interference_transform(tau, omega, DELTA, 1.0))
    assert np.allclose(series, integral, rtol=0, atol=1e-12)


def test_series_refuses_to_truncate_early():
    with pytest.raises(SolverError):
        series_inverse_moment([150.0], np.ones(10), DELTA, 1.0)


def test_panel_recurrence_matches_direct_evaluation():
    tau = np.linspace(0.05, 1.0, 17)
    nodes, _ = _omega_rule(60.0, 0.5)
    fast = _panel_transform(tau, 60.0, 0.5, DELTA, 1.0)
    slow = interference_transform(tau, nodes, DELTA, 1.0)
    assert np.max(np.abs(fast - slow)) < 1e-11


def test_solution_is_a_cdf(light_f):
    assert light_f.converged
    u = np.linspace(0, 1, 4001)
    f = light_f(u)
    assert f[0] == 0.0 and f[-1] == 1.0
    assert np.all(np.diff(f) >= 0)
    assert light_f(1.5) == 1.0


def test_two_starts_reach_the_same_point(light_f):
    idle = solve_meta_distribution(FixedPointParams(), DELTA, 1.0, 0.05, 3, init="idle")
    assert np.max(np.abs(idle.f_values - light_f.f_values)) < 1e-5


def test_hybrid_and_integral_methods_agree(heavy_f):
    full = solve_meta_distribution(FixedPointParams(), DELTA, 1.0, 0.20, 3, method="integral")
    u = np.linspace(0.01, 0.99, 300)
    assert np.max(np.abs(full(u) - heavy_f(u))) < 1e-6


def test_saturated_network_mean_matches_closed_form():
    # every interferer always on: E[mu] = 1 / 2F1(1, -delta; 1 - delta; -theta)
    f = solve_meta_distribution(FixedPointParams(), DELTA, 1.0, 0.5, 3)
    u = np.linspace(0, 1, 20001)
    mean = integrate.trapezoid(1 - f(u), u)
    ref = 1 / float(mpmath.hyp2f1(1, -DELTA, 1 - DELTA, -1.0))
    assert mean == pytest.approx(ref, abs=2e-4)


def test_no_traffic_means_no_interference():
    f = solve_meta_distribution(FixedPointParams(), DELTA, 1.0, 0.0, 3)
    assert np.all(f(np.linspace(0, 0.999, 50)) < 1e-6)


def test_heavier_traffic_lowers_service_rates(light_f, heavy_f):
    u = np.linspace(0.05, 0.95, 50)
    assert np.all(heavy_f(u) >= light_f(u) - 1e-9)


def test_activity_moments(light_f):
    m = [activity_moment(light_f, 0.05, 3, k) for k in range(1, 6)]
    assert all(0 <= a <= 1 for a in m)
    assert np.all(np.diff(m) <= 0)
    assert m[0] >= 0.15  # tau >= xi K on every atom


def test_non_convergence_raises():
    with pytest.raises(SolverError) as err:
        solve_meta_distribution(FixedPointParams(fp_max_iter=2), DELTA, 1.0, 0.05, 3)
    assert len(err.value.trace) == 2


@pytest.mark.parametrize("kw", [{"init": "warm"}, {"method": "fast"}])
def test_bad_options(kw):
    with pytest.raises(ValueError):
        solve_meta_distribution(FixedPointParams(), DELTA, 1.0, 0.05, 3, **kw)
