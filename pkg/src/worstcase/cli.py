"""Command-line interface.

Exit codes: 0 success, 1 domain verdict failure (envelope violation,
regression, failed gate, invalid scenario), 2 usage or parse error.
The default output directory for ``run`` can be set with $WORSTCASE_OUT.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import plots
from .campaign import CampaignError, compare_systems, load_records, release_gate, run_campaign
from .config import ConfigError, load_config
from .scenario import ScenarioError, load, validate_logical

OUT_ENV = "WORSTCASE_OUT"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 already; keep usage text
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_validate(args: argparse.Namespace) -> int:
    status = EXIT_OK
    for path in args.paths:
        try:
            scenario = load(path)
        except OSError as exc:
            print(f"{path}: cannot read: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_USAGE
        except ScenarioError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        report = validate_logical(scenario)
        if report.ok:
            print(f"{path}: ok ({scenario.id}, {scenario.n} variables)")
        else:
            status = EXIT_FAIL
            for v in report.violations:
                print(f"{path}: {v.code}: {v.message}")
    return status


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed_override is not None:
        config = config.with_seeds((args.seed_override,))
    out = args.out or config.output_dir or os.environ.get(OUT_ENV) or "worstcase-out"
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    records = run_campaign(config, jobs=args.jobs, output_dir=Path(out))
    for r in records:
        if r.status != "ok":
            print(f"{r.logical_id}: ERROR {r.error}")
        else:
            flag = "VIOLATED" if r.violated else "ok"
            print(f"{r.logical_id}: quality {r.quality:.6g} [{flag}] after {r.evaluations} evaluations")
    print(f"artifacts written to {out}")
    if any(r.status != "ok" for r in records):
        return EXIT_USAGE
    return EXIT_FAIL if any(r.violated for r in records) else EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        a, b = load_records(args.records_a), load_records(args.records_b)
    except CampaignError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        report = compare_systems(a, b, args.epsilon)
    except CampaignError as exc:
        print(exc, file=sys.stderr)
        return EXIT_FAIL
    text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_FAIL if report.regression else EXIT_OK


def cmd_gate(args: argparse.Namespace) -> int:
    try:
        records = load_records(args.records)
        thresholds = json.loads(Path(args.thresholds).read_text(encoding="utf-8"))
        if not isinstance(thresholds, dict):
            raise ValueError("thresholds must be a JSON object")
    except (CampaignError, OSError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        verdict = release_gate(records, thresholds)
    except CampaignError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(verdict.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if verdict.passed else EXIT_FAIL


def _plot_trace_csv(path: Path) -> str:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("empty trace")
    times = np.array([float(r["time"]) for r in rows])
    series = {}
    if "margin" in rows[0]:
        series["margin"] = np.array([float(r["margin"]) for r in rows])
    else:
        agents = sorted({k.split(".")[0] for k in rows[0] if k.startswith("agent")})
        ego_s = np.array([float(r["ego.s"]) for r in rows])
        for agent in agents:
            series[f"{agent} distance [m]"] = np.array([float(r[f"{agent}.s"]) for r in rows]) - ego_s
        if not series:
            series["ego speed [m/s]"] = np.array([float(r["ego.v"]) for r in rows])
    return plots.line_svg(times, series, title=path.stem)


def _plot_log(path: Path) -> str:
    entries = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not entries:
        raise ValueError("empty log")
    pts = np.array([e["values"] for e in entries], dtype=float)
    if pts.shape[1] != 2:
        raise ValueError(f"scatter plots need a 2-variable search space, got {pts.shape[1]}")
    q = np.array([e["quality"] if not isinstance(e["quality"], list) else e["quality"][0] for e in entries])
    return plots.scatter_svg(pts[:, 0], pts[:, 1], q, title=path.stem)


def cmd_plot(args: argparse.Namespace) -> int:
    path = Path(args.input)
    try:
        svg = _plot_log(path) if path.suffix == ".jsonl" else _plot_trace_csv(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out) if args.out else path.with_suffix(".svg")
    out.write_text(svg, encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="worstcase", description="Search-based worst-case scenario testing.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check logical scenario files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", parents=[common], help="run a campaign; exit 1 if any scenario leaves the envelope")
    p.add_argument("config", nargs="?", help="campaign config JSON")
    p.add_argument("--config", dest="config_flag", help="campaign config JSON")
    p.add_argument("--out", help=f"output directory (default: config output_dir, then ${OUT_ENV})")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for evaluations")
    p.add_argument("--seed-override", type=int, help="run with this single seed instead of the config seeds")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", parents=[common], help="compare two records.json files (B relative to A)")
    p.add_argument("records_a")
    p.add_argument("records_b")
    p.add_argument("--epsilon", type=float, default=1e-3, help="tolerance for 'unchanged'")
    p.add_argument("--out", help="write the comparison CSV here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gate", parents=[common], help="release gate: records.json against per-scenario thresholds")
    p.add_argument("records")
    p.add_argument("thresholds", help='JSON object {"<logical_id>": minimum quality}')
    p.add_argument("--out", help="write the verdict JSON here")
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("plot", parents=[common], help="SVG of a trace CSV (margin over time) or a 2-D evaluation log")
    p.add_argument("input")
    p.add_argument("--out", help="output SVG path")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        args.config = args.config_flag or args.config
        if not args.config:
            parser.error("run: a config path is required")
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
