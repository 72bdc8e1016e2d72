"""Configuration, experiments and the command-line front end."""

from .commands import DataError, cmd_analyze, cmd_outage_sweep, cmd_simulate, solve_scenario
from .config import ConfigError, ScenarioConfig
from .main import main, run
from .oracle import CRITERIA, CriterionResult, OracleReport, cmd_oracle
from .tables import COLUMNS, ResultTable, Row

__all__ = [
    "COLUMNS",
    "CRITERIA",
    "ConfigError",
    "CriterionResult",
    "DataError",
    "OracleReport",
    "ResultTable",
    "Row",
    "ScenarioConfig",
    "cmd_analyze",
    "cmd_oracle",
    "cmd_outage_sweep",
    "cmd_simulate",
    "main",
    "run",
    "solve_scenario",
]
