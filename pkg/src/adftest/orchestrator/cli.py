"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 pipeline stage failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..errors import AdfTestError, ConfigError
from ..roadgen import stock_definitions_dir
from .commands import StageError, cmd_evaluate, cmd_generate, cmd_report, cmd_simulate, cmd_verify
from .config import default_config_text, load_config

EXIT_OK, EXIT_USAGE, EXIT_STAGE = 0, 1, 2

log = logging.getLogger("adftest")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--db", type=Path, default=Path("adftest-db"), help="database root (default: ./adftest-db)")
    common.add_argument("--config", type=Path, default=None, help="TOML configuration file")
    common.add_argument("--filter", dest="pattern", default=None, metavar="GLOB", help="restrict to matching ids")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="adftest", description="Scenario-based testing of an automated driving function.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def defs(sp):
        sp.add_argument("--definitions", type=Path, default=None,
                        help="directory of logical scenario TOML files (default: the stock set)")

    def sim(sp):
        sp.add_argument("--parallel", type=_positive_int, default=None, metavar="N")
        sp.add_argument("--force", action="store_true", help="rerun scenarios that already have results")

    defs(sub.add_parser("generate", parents=[common], help="expand logical scenarios into the database"))
    sim(sub.add_parser("simulate", parents=[common], help="run every generated scenario"))
    sub.add_parser("evaluate", parents=[common], help="compute KPIs and the campaign summary")
    sub.add_parser("report", parents=[common], help="render spider.svg and report.txt")
    pipe = sub.add_parser("pipeline", parents=[common], help="generate, simulate, evaluate and report")
    defs(pipe)
    sim(pipe)
    sub.add_parser("verify", parents=[common], help="check database consistency")
    sub.add_parser("show-config", parents=[common], help="print the effective configuration as TOML")
    return p


def _run_stage(name: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (AdfTestError, OSError, ValueError) as exc:
        raise StageError(f"stage '{name}' failed: {exc}") from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"adftest: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    cmd = args.command
    if cmd == "show-config":
        sys.stdout.write(default_config_text(cfg))
        return EXIT_OK
    if cmd == "verify":
        problems = cmd_verify(args.db)
        for p in problems:
            print(p)
        if problems:
            print(f"{len(problems)} problem(s)", file=sys.stderr)
            return EXIT_STAGE
        print("database consistent")
        return EXIT_OK

    definitions = getattr(args, "definitions", None) or stock_definitions_dir()
    try:
        if cmd in ("generate", "pipeline"):
            db = _run_stage("generate", cmd_generate, definitions, args.db, cfg, args.pattern)
            print(f"generated {len(db.generated())} scenarios in {db.root}")
        if cmd in ("simulate", "pipeline"):
            counts = _run_stage("simulate", cmd_simulate, args.db, cfg, force=args.force, pattern=args.pattern,
                                parallel=args.parallel)
            print("simulated: " + (", ".join(f"{k}={v}" for k, v in sorted(counts.items())) or "nothing"))
        if cmd in ("evaluate", "pipeline"):
            summary = _run_stage("evaluate", cmd_evaluate, args.db, cfg, args.pattern)
            print(f"evaluated {summary['scenario_count']} scenarios")
        if cmd in ("report", "pipeline"):
            svg, txt = _run_stage("report", cmd_report, args.db)
            print(f"report written: {svg} {txt}")
    except StageError as exc:
        msg = str(exc)
        if not msg.startswith("stage '"):
            msg = f"stage '{cmd}' failed: {msg}"
        print(f"adftest: {msg}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
