"""Command-line front end: validate scenarios, run them, replay traces.

Exit codes are a stable contract: 0 success, 1 scenario validation failure,
2 runtime failure (bad trace, I/O error, usage error).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from .metrics import TruncatedTrace, build_report, parse_trace, report_csv, report_json
from .scenario import (
    InvalidScenario,
    load_document,
    parse_scenario,
    scenario_diagnostics,
)
from .world import run as run_world


def _load_validated(path: str) -> "tuple":
    """Returns (scenario, diagnostics); scenario is None when anything failed."""
    try:
        doc = load_document(path)
    except OSError as exc:
        return None, [f"cannot read scenario: {exc}"]
    except json.JSONDecodeError as exc:
        return None, [f"not valid JSON: {exc}"]
    except InvalidScenario as exc:
        return None, exc.diagnostics
    diags = scenario_diagnostics(doc)
    if diags:
        return None, diags
    return parse_scenario(doc), []


def _cmd_validate(args) -> int:
    scenario, diags = _load_validated(args.file)
    if scenario is None:
        for d in diags:
            print(d, file=sys.stderr)
        return 1
    print("ok")
    return 0


def _parse_seeds(args) -> Optional[List[int]]:
    if args.seeds is not None:
        lo, sep, hi = args.seeds.partition("..")
        if not sep:
            return None
        try:
            a, b = int(lo), int(hi)
        except ValueError:
            return None
        if b < a:
            return None
        return list(range(a, b + 1))
    if args.seed is not None:
        return [args.seed]
    return None


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _cmd_run(args) -> int:
    scenario, diags = _load_validated(args.scenario)
    if scenario is None:
        for d in diags:
            print(d, file=sys.stderr)
        return 1
    if args.ticks is not None:
        if args.ticks < 1:
            print("--ticks must be at least 1", file=sys.stderr)
            return 1
        scenario.ticks = args.ticks
        if scenario.quiz is not None and scenario.quiz.deadline >= scenario.ticks:
            print(
                "quiz.deadline: must fall before the run's tick count",
                file=sys.stderr,
            )
            return 1
    seeds = _parse_seeds(args)
    if seeds is None:
        print("provide --seed N or --seeds A..B", file=sys.stderr)
        return 2
    sweep = args.seeds is not None
    try:
        for seed in seeds:
            result = run_world(scenario, seed)
            out_dir = (
                os.path.join(args.out, f"seed-{seed}") if sweep else args.out
            )
            os.makedirs(out_dir, exist_ok=True)
            _write(os.path.join(out_dir, "trace.tsv"), result.trace_text)
            if args.format in ("csv", "both"):
                _write(os.path.join(out_dir, "metrics.csv"),
                       report_csv(result.report))
            if args.format in ("json", "both"):
                _write(os.path.join(out_dir, "metrics.json"),
                       report_json(result.report))
            _write(os.path.join(out_dir, "ranking.csv"), result.ranking_text)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_report(args) -> int:
    try:
        with open(args.trace, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return 2
    try:
        meta, records = parse_trace(text)
    except TruncatedTrace as exc:
        print(f"truncated trace: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(report_csv(build_report(meta, records)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="learnmesh",
        description="Deterministic simulator for cooperative learning over "
        "hybrid wireless networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("file")
    p_val.set_defaults(func=_cmd_validate)

    p_run = sub.add_parser("run", help="simulate a scenario")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--seeds", help="inclusive sweep A..B, one run per seed")
    p_run.add_argument("--ticks", type=int, help="override the scenario horizon")
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("report", help="recompute metrics from a trace")
    p_rep.add_argument("trace")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
