"""Command-line entry point: ``scheddelay {analyze,simulate,outage-sweep,oracle}``.

Exit codes: 0 success, 1 a verification criterion failed, 2 the fixed-point
solver failed, 3 bad input or nothing to measure.  ``SCHEDDELAY_LOG`` sets
the log level (``WARNING`` by default).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from ..analytic import SolverError
from ..geometry import GeometryError
from ..markov import ChainError
from .commands import DataError, cmd_analyze, cmd_outage_sweep, cmd_simulate
from .config import ConfigError, ScenarioConfig
from .oracle import cmd_oracle

log = logging.getLogger("scheddelay")

EXIT_OK, EXIT_VERIFY, EXIT_SOLVER, EXIT_DATA = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DATA, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario TOML file (defaults are the reference scenario)")
    common.add_argument("--seed", type=int, help="override master_seed")
    common.add_argument("--out", type=Path, help="write output here instead of stdout")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    parser = _Parser(prog="scheddelay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[common], help="analytic CDF of the mean delay")
    p.add_argument("--policy", choices=["rs", "rr"])

    p = sub.add_parser("simulate", parents=[common], help="empirical CDF from network simulation")
    p.add_argument("--policy", choices=["rs", "rr"])

    p = sub.add_parser("outage-sweep", parents=[common], help="analytic delay outage over K_s")
    p.add_argument("--k-s", type=_int_list, help="comma-separated K_s values")
    p.add_argument("--xi", type=_float_list, help="comma-separated arrival rates")

    p = sub.add_parser("oracle", parents=[common], help="run the verification criteria")
    p.add_argument("--criteria", type=_int_list, help="comma-separated criterion numbers (default: all)")
    return parser


def _configure_logging():
    level = os.environ.get("SCHEDDELAY_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def run(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
        if args.seed is not None:
            cfg = cfg.replace(master_seed=args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.command == "analyze":
            _emit(cmd_analyze(cfg, args.policy).to_csv(), args.out)
        elif args.command == "simulate":
            _emit(cmd_simulate(cfg, args.policy, jobs=args.jobs).to_csv(), args.out)
        elif args.command == "outage-sweep":
            table = cmd_outage_sweep(cfg, args.k_s, args.xi, jobs=args.jobs)
            _emit(table.to_csv(), args.out)
        else:
            report = cmd_oracle(cfg, args.criteria, jobs=args.jobs, echo=print)
            if args.out is not None:
                args.out.write_text(report.to_json(), encoding="utf-8")
            return EXIT_OK if report.passed else EXIT_VERIFY
    except SolverError as exc:
        log.error("solver failed: %s", exc)
        if exc.trace:
            log.error("last sup changes: %s", ", ".join(f"{d:.3g}" for d in exc.trace[-5:]))
        return EXIT_SOLVER
    except (ConfigError, DataError, GeometryError, ChainError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())
