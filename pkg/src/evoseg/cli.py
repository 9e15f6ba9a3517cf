"""Command-line entry point.

Subcommands: ``search``, ``plan``, ``score-masks``, ``analyze``.
Exit codes: 0 success, 1 usage/config fault, 2 data fault, 3 worker fault.
The ``EVOSEG_WORKER`` environment variable overrides the configured worker
command (whitespace-split).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import analysis, maskio, metrics
from .config import ConfigError, load_config, parse_config, resolved_config_dict
from .evaluation import PenaltyWeights
from .planner import build_plan, plan_report
from .search import run, summary_report, write_history, load_history
from .space import Genotype, SearchSpace, validate
from .workers import WorkerError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_WORKER = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage faults mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _build_parser() -> _Parser:
    parser = _Parser(prog="evoseg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_search = sub.add_parser("search", help="run an architecture search")
    p_search.add_argument("--config", help="JSON config file (defaults when omitted)")
    p_search.add_argument("--out-dir", required=True, help="run output directory")
    p_search.add_argument("--seed", type=int, help="override the config seed")

    p_plan = sub.add_parser("plan", help="print the layer plan for a genotype")
    p_plan.add_argument(
        "genotype",
        help="genotype record: a file path, or '-' to read standard input",
    )
    p_plan.add_argument(
        "--ref-params",
        type=float,
        default=PenaltyWeights().params_ref,
        help="reference parameter count used for the ratio line",
    )
    p_plan.add_argument(
        "--ref-flops",
        type=float,
        default=PenaltyWeights().flops_ref,
        help="reference FLOP count used for the ratio line",
    )

    p_score = sub.add_parser("score-masks", help="score paired mask directories")
    p_score.add_argument("--pred", required=True, help="predictions directory")
    p_score.add_argument("--gt", required=True, help="ground-truth directory")
    p_score.add_argument(
        "--spacing", type=float, default=1.0, help="isotropic pixel spacing"
    )
    p_score.add_argument(
        "--out", default="scores.csv", help="CSV output path (default scores.csv)"
    )

    p_analyze = sub.add_parser("analyze", help="derive tables from a history file")
    p_analyze.add_argument("history", help="newline-delimited JSON history file")
    p_analyze.add_argument("--out-dir", required=True, help="table output directory")

    return parser


def cmd_search(args) -> int:
    try:
        config = load_config(args.config) if args.config else parse_config({})
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        worker_env = os.environ.get("EVOSEG_WORKER")
        if worker_env:
            config = dataclasses.replace(
                config, worker_command=tuple(worker_env.split())
            )
        config.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = run(config)
    except WorkerError as exc:
        print(f"worker error: {exc}", file=sys.stderr)
        return EXIT_WORKER
    (out_dir / "config.json").write_text(
        json.dumps(resolved_config_dict(config), indent=2) + "\n", encoding="ascii"
    )
    write_history(result.history, out_dir / "history.jsonl")
    (out_dir / "archive.csv").write_text(
        analysis.pareto_front_export(result.archive), encoding="ascii"
    )
    (out_dir / "summary.txt").write_text(
        summary_report(result) + "\n", encoding="ascii"
    )
    (out_dir / "ledger.txt").write_text(
        result.ledger.report() + "\n", encoding="ascii"
    )
    print(summary_report(result))
    return EXIT_OK


def cmd_plan(args) -> int:
    try:
        if args.genotype == "-":
            text = sys.stdin.read()
        else:
            text = Path(args.genotype).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read genotype record: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        genotype = Genotype.from_record(text)
    except ValueError as exc:
        print(f"bad genotype record: {exc}", file=sys.stderr)
        return EXIT_DATA
    result = validate(SearchSpace(), genotype)
    if not result.ok:
        print(f"invalid genotype: {result.message()}", file=sys.stderr)
        return EXIT_DATA
    plan = build_plan(genotype)
    print(plan_report(plan))
    print(
        f"reference ratios: params {plan.total_params / args.ref_params:.3f}x "
        f"of {args.ref_params:.3g}, flops {plan.total_flops / args.ref_flops:.3f}x "
        f"of {args.ref_flops:.3g}"
    )
    return EXIT_OK


def cmd_score_masks(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    for directory in (pred_dir, gt_dir):
        if not directory.is_dir():
            print(f"not a directory: {directory}", file=sys.stderr)
            return EXIT_DATA
    if args.spacing <= 0:
        print(f"spacing must be positive, got {args.spacing}", file=sys.stderr)
        return EXIT_CONFIG
    pairs, unpaired_pred, unpaired_gt = maskio.pair_directories(pred_dir, gt_dir)
    faults = 0
    for name in unpaired_pred:
        print(f"unpaired prediction: {name}", file=sys.stderr)
        faults += 1
    for name in unpaired_gt:
        print(f"unpaired ground truth: {name}", file=sys.stderr)
        faults += 1
    header = (
        "name,dsc_lv,dsc_myo,dsc_rv,dsc_avg,hd95_lv,hd95_myo,hd95_rv,hd95_avg"
    )
    lines = [header]
    print(header)
    scored = []
    for name, pred_path, gt_path in pairs:
        try:
            pred = maskio.read_mask(pred_path)
            gt = maskio.read_mask(gt_path)
            pair_report = metrics.report(pred, gt, spacing=args.spacing)
        except ValueError as exc:
            print(f"pair {name}: {exc}", file=sys.stderr)
            faults += 1
            continue
        row = _report_row(name, pair_report)
        lines.append(row)
        print(row)
        scored.append(pair_report)
    if scored:
        mean_dsc = sum(r.dsc_avg for r in scored) / len(scored)
        hd95s = [r.hd95_avg for r in scored if r.hd95_avg is not None]
        mean_hd95 = repr(sum(hd95s) / len(hd95s)) if hd95s else ""
        mean_row = f"mean,,,,{mean_dsc!r},,,,{mean_hd95}"
        lines.append(mean_row)
        print(mean_row)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")
    return EXIT_DATA if faults else EXIT_OK


def _report_row(name: str, pair_report: metrics.MetricReport) -> str:
    def fmt(value: Optional[float]) -> str:
        return "" if value is None else repr(value)

    return ",".join(
        [
            name,
            fmt(pair_report.per_class_dsc["lv"]),
            fmt(pair_report.per_class_dsc["myo"]),
            fmt(pair_report.per_class_dsc["rv"]),
            fmt(pair_report.dsc_avg),
            fmt(pair_report.per_class_hd95["lv"]),
            fmt(pair_report.per_class_hd95["myo"]),
            fmt(pair_report.per_class_hd95["rv"]),
            fmt(pair_report.hd95_avg),
        ]
    )


def cmd_analyze(args) -> int:
    try:
        history = load_history(args.history)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot load history: {exc}", file=sys.stderr)
        return EXIT_DATA
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        matrix = analysis.correlate(history)
    except analysis.InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    (out_dir / "correlation.csv").write_text(matrix.to_csv(), encoding="utf-8")
    archive = analysis.pareto_from_history(history)
    (out_dir / "pareto.csv").write_text(
        analysis.pareto_front_export(archive), encoding="ascii"
    )
    series_csv, curves_csv = analysis.curve_export(history)
    (out_dir / "generations.csv").write_text(series_csv, encoding="ascii")
    (out_dir / "curves.csv").write_text(curves_csv, encoding="ascii")
    print(f"wrote correlation.csv, pareto.csv, generations.csv, curves.csv to {out_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "search": cmd_search,
        "plan": cmd_plan,
        "score-masks": cmd_score_masks,
        "analyze": cmd_analyze,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
