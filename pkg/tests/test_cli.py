import dataclasses
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scheddelay.analytic import FixedPointParams, SolverError
from scheddelay.cli import (
    COLUMNS,
    ConfigError,
    DataError,
    ResultTable,
    ScenarioConfig,
    cmd_analyze,
    cmd_oracle,
    cmd_outage_sweep,
    cmd_simulate,
    run,
)
from scheddelay.cli import commands

TINY = ScenarioConfig(window_side_m=600.0, realizations=2, warmup_slots=100, measure_slots=400, t_max=12.0)


# -- configuration -------------------------------------------------------------


def test_defaults_are_the_reference_scenario():
    cfg = ScenarioConfig()
    assert (cfg.lambda_s, cfg.k_s, cfg.theta_db, cfg.alpha, cfg.p_st_dbm, cfg.t0) == (1e-4, 3, 0.0, 3.8, 23.0, 20.0)
    assert cfg.theta == 1.0
    assert cfg.t_grid()[0] == 1.0 and cfg.t_grid()[-1] == 50.0


def test_round_trip_is_identity():
    cfg = ScenarioConfig(xi=0.2, sweep_xi=(0.02, 0.1), solver=FixedPointParams(m_grid=120, omega_max=150.0))
    again = ScenarioConfig.loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


@given(
    st.floats(1e-6, 1e-2),
    st.integers(1, 12),
    st.floats(0.0, 1.0),
    st.floats(-10, 10),
    st.floats(2.01, 6.0),
    st.integers(0, 2**64 - 1),
    st.booleans(),
)
def test_round_trip_property(lam, k, xi, theta_db, alpha, seed, advance):
    cfg = ScenarioConfig(lambda_s=lam, k_s=k, xi=xi, theta_db=theta_db, alpha=alpha, master_seed=seed,
                         rr_advance_when_muted=advance)
    assert ScenarioConfig.loads(cfg.dumps()) == cfg


def test_file_round_trip(tmp_path):
    path = tmp_path / "scenario.toml"
    ScenarioConfig(xi=0.2).save(path)
    assert ScenarioConfig.load(path).xi == 0.2


@pytest.mark.parametrize(
    "text",
    [
        "xii = 0.1\n",
        "[solver]\nm_gird = 100\n",
        "k_s = 2.5\n",
        "xi = true\n",
        "xi = 1.5\n",
        "t0 = 0.5\n",
        "sweep_k_s = [1, 2.5]\n",
        "fading = 'rician'\n",
        "[solver]\nfp_tol = 0.01\n",
        "solver = 3\n",
        "xi = \n",
    ],
)
def test_bad_configs_are_rejected(text):
    with pytest.raises(ConfigError):
        ScenarioConfig.loads(text)


def test_integers_are_accepted_for_float_fields():
    assert ScenarioConfig.loads("alpha = 4\n").alpha == 4.0


# -- tables ------------------------------------------------------------------------


def test_csv_schema_and_empty_fields():
    t = ResultTable()
    t.add(policy="rs", abscissa=2.0, analytic=0.25)
    t.add(policy="rs", abscissa=1.0, analytic=math.nan, simulated=0.5, ci_half=0.01, realizations=3)
    text = t.to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert lines[1] == "rs,1.0,,0.5,0.01,3"
    assert lines[2] == "rs,2.0,0.25,,,"
    back = ResultTable.from_csv(text)
    assert back.to_csv() == text


def test_merge_fills_both_sides():
    a = ResultTable()
    a.add(policy="rr", abscissa=3.0, analytic=0.4)
    b = ResultTable()
    b.add(policy="rr", abscissa=3.0, simulated=0.41, ci_half=0.02, realizations=5)
    row = a.merge(b).rows[0]
    assert (row.analytic, row.simulated, row.realizations) == (0.4, 0.41, 5)


# -- commands -------------------------------------------------------------------


def test_analyze_rows():
    table = cmd_analyze(TINY)
    rs = table.column("analytic", "rs")
    rr = table.column("analytic", "rr")
    assert rs[0] == 0.0 and rr[0] == 0.0
    assert all(b >= a - 1e-12 for a, b in zip(rs, rr))
    assert all(0 <= v <= 1 for v in rs + rr)


def test_single_ue_columns_coincide():
    table = cmd_analyze(TINY.replace(k_s=1, xi=0.1))
    assert table.column("analytic", "rs") == table.column("analytic", "rr")


def test_simulate_is_byte_identical_and_job_independent():
    a = cmd_simulate(TINY, "rr").to_csv()
    assert a == cmd_simulate(TINY, "rr").to_csv()
    assert a == cmd_simulate(TINY, "rr", jobs=2).to_csv()
    assert a != cmd_simulate(TINY.replace(master_seed=2), "rr").to_csv()


def test_simulate_reports_intervals():
    table = cmd_simulate(TINY, "rs")
    ci = np.array(table.column("ci_half"))
    sim = np.array(table.column("simulated"))
    assert np.all((ci >= 0) & (ci <= 0.5))
    assert np.all(np.diff(sim) >= 0)
    assert set(table.column("realizations")) == {2}


def test_single_realization_warns(caplog):
    cmd_simulate(TINY.replace(realizations=1), "rs")
    assert "single realization" in caplog.text


def test_no_traffic_is_a_data_failure():
    with pytest.raises(DataError):
        cmd_simulate(TINY.replace(xi=0.0), "rs")


def test_sweep_single_ue_policies_agree():
    table = cmd_outage_sweep(TINY, [1, 2], [0.05])
    rs = dict(zip(table.column("abscissa", "rs@xi=0.05"), table.column("analytic", "rs@xi=0.05")))
    rr = dict(zip(table.column("abscissa", "rr@xi=0.05"), table.column("analytic", "rr@xi=0.05")))
    assert rs[1.0] == rr[1.0]
    assert rr[2.0] <= rs[2.0]


def test_sweep_records_failed_points_as_empty(monkeypatch, caplog):
    real = commands.solve_scenario

    def flaky(cfg, xi=None, k_s=None, check_inits=True):
        if k_s == 2:
            raise SolverError("forced")
        return real(cfg, xi, k_s, check_inits)

    monkeypatch.setattr(commands, "solve_scenario", flaky)
    table = cmd_outage_sweep(TINY, [1, 2], [0.05])
    lines = table.to_csv().splitlines()
    assert "rs@xi=0.05,2.0,,,," in lines
    assert "forced" in caplog.text
    with pytest.raises(ValueError):
        cmd_outage_sweep(TINY, [], [0.05])


def test_oracle_rejects_empty_selection():
    with pytest.raises(ValueError):
        cmd_oracle(TINY, criteria=[])
    with pytest.raises(ValueError):
        cmd_oracle(TINY, criteria=[42])


def test_oracle_catches_a_mutated_transition_rule():
    bad = lambda xi, mu: (xi * (1 - mu), (1 - xi) * mu, (1 - xi) * (1 - mu))  # noqa: E731
    report = cmd_oracle(ScenarioConfig(), criteria=[10], kappa=bad)
    (res,) = report.results
    assert not res.passed and res.measured["row_stochastic"] > 0
    assert "FAIL" in res.line()


def test_oracle_report_json():
    report = cmd_oracle(ScenarioConfig(), criteria=[4, 9])
    assert report.passed
    assert '"passed": true' in report.to_json()


# -- command line ----------------------------------------------------------------


def test_cli_analyze_writes_csv(tmp_path):
    cfg = tmp_path / "c.toml"
    TINY.save(cfg)
    out = tmp_path / "a.csv"
    assert run(["analyze", "--config", str(cfg), "--policy", "rr", "--out", str(out)]) == 0
    table = ResultTable.from_csv(out.read_text())
    assert set(r.policy for r in table.rows) == {"rr"}


def test_cli_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.toml"
    bad.write_text("bogus = 1\n")
    assert run(["analyze", "--config", str(bad)]) == 3
    assert run(["analyze", "--config", str(tmp_path / "missing.toml")]) == 3
    stiff = tmp_path / "stiff.toml"
    TINY.replace(solver=dataclasses.replace(FixedPointParams(), fp_max_iter=1)).save(stiff)
    assert run(["analyze", "--config", str(stiff)]) == 2
    assert run(["oracle", "--criteria", ""]) == 3
    with pytest.raises(SystemExit) as err:
        run(["simulate", "--policy", "fifo"])
    assert err.value.code == 3


def test_cli_oracle_failure_exit(monkeypatch, tmp_path):
    from scheddelay.cli import oracle

    monkeypatch.setitem(oracle.CRITERIA, 4, ("forced_failure", lambda ctx: (False, {"why": "test"})))
    out = tmp_path / "report.json"
    assert run(["oracle", "--criteria", "4", "--out", str(out)]) == 1
    assert '"passed": false' in out.read_text()


def test_cli_seed_override(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    TINY.replace(realizations=1).save(cfg)
    run(["simulate", "--config", str(cfg), "--policy", "rs", "--seed", "5"])
    first = capsys.readouterr().out
    run(["simulate", "--config", str(cfg), "--policy", "rs", "--seed", "5"])
    assert capsys.readouterr().out == first


def test_module_entry_point_and_log_level(tmp_path):
    env = {"SCHEDDELAY_LOG": "INFO", "PATH": "/usr/bin:/bin"}
    cfg = tmp_path / "c.toml"
    TINY.save(cfg)
    proc = subprocess.run(
        [sys.executable, "-m", "scheddelay", "analyze", "--config", str(cfg), "--policy", "rs"],
        capture_output=True, text=True, env=env, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith(",".join(COLUMNS))
    assert "INFO" in proc.stderr
