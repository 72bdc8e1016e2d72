"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line with the measured errors, whether or not
it passes, so the log doubles as the verification report.
"""

import os

import pytest

from scheddelay.cli import CRITERIA, ScenarioConfig
from scheddelay.cli.oracle import make_context, run_criterion


@pytest.fixture(scope="module")
def ctx():
    return make_context(ScenarioConfig(), jobs=os.cpu_count() or 1)


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[f"{n:02d}-{CRITERIA[n][0]}" for n in sorted(CRITERIA)])
def test_criterion(number, ctx, capsys):
    result = run_criterion(number, ctx)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
