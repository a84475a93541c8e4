"""Command-line entry point.

    pdepilot solve  <spec>  [--backend rules|remote|replay] [--plans N]
                            [--top-k K] [--out DIR] [--replay-from RUN]
    pdepilot plan   <spec>
    pdepilot verify <spec> <solution-file> [--grid uniform|chebyshev]
    pdepilot bench  <corpus-dir> [--backend ...] [--out DIR] [--width N]
    pdepilot report <results-dir>

Exit codes: 0 success (solve: a candidate verified), 1 pipeline failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import PdePilotError
from .executor import ExecutionConfig
from .grids import Grid
from .metrics import MetricConfig, build_error_report, validity_check
from .pipeline import PipelineConfig, plan_only, solve
from .problem import parse_spec
from .solution_io import attach_grid, read_solution_file


def _load_document(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


class UsageError(Exception):
    pass


def _pipeline_config(args) -> PipelineConfig:
    execution = ExecutionConfig(wall_cap=args.cap) if hasattr(args, "cap") else ExecutionConfig()
    return PipelineConfig(
        backend=args.backend,
        n_plans=args.plans,
        top_k=args.top_k,
        out_root=Path(args.out),
        replay_from=Path(args.replay_from) if args.replay_from else None,
        execution=execution,
    )


def _print_attempt_history(outcomes) -> None:
    print("attempt history:", file=sys.stderr)
    for o in outcomes:
        art = (o.detail or {}).get("artifact") or {}
        print(
            f"  {o.plan.plan_id}: reached {art.get('stage_reached', '?')}, "
            f"attempts {art.get('attempts', {})}, restarts {art.get('restarts', 0)}",
            file=sys.stderr,
        )
        for rec in art.get("history", []):
            failure = rec.get("failure") or "ok"
            action = rec.get("action") or "-"
            print(
                f"    {rec['stage']}#{rec['index']} (cycle {rec['lifecycle']}): "
                f"{failure} -> {action}",
                file=sys.stderr,
            )


def cmd_solve(args) -> int:
    doc = _load_document(args.spec)
    if args.backend == "replay" and not args.replay_from:
        raise UsageError("--backend replay needs --replay-from <recorded run dir>")
    try:
        result = solve(doc, _pipeline_config(args))
    except PdePilotError as exc:
        outcomes = getattr(exc, "outcomes", None)
        print(f"solve failed: {exc}", file=sys.stderr)
        if outcomes:
            _print_attempt_history(outcomes)
        return 1
    chosen = result.chosen
    print(f"run directory: {result.run_dir}")
    print(f"chosen plan: {chosen.plan.plan_id}")
    err = f"{chosen.error:.6e}" if chosen.error is not None else "n/a"
    print(f"error: {err}  wall: {chosen.wall_time:.2f}s  verified: {chosen.verified}")
    return 0 if chosen.verified else 1


def cmd_plan(args) -> int:
    doc = _load_document(args.spec)
    try:
        slate = plan_only(doc, _pipeline_config(args))
    except PdePilotError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(slate, indent=2, sort_keys=True))
    return 0


def cmd_verify(args) -> int:
    doc = _load_document(args.spec)
    try:
        spec = parse_spec(doc)
        raw = read_solution_file(args.solution)
    except OSError as exc:
        raise UsageError(f"cannot read {args.solution}: {exc}") from exc
    except PdePilotError as exc:
        print(f"verify failed: {exc}", file=sys.stderr)
        return 1
    shape = next(iter(raw.fields.values())).shape[1:]
    if args.grid == "chebyshev":
        grid = Grid.chebyshev(spec.domain.bounds, shape)
    else:
        grid = Grid.uniform(spec.domain.bounds, shape,
                            periodic=[spec.periodic] * len(shape))
    cfg = MetricConfig()
    validity = validity_check(raw, expected_shape=shape, spec=spec, grid=grid, cfg=cfg)
    report = None
    if validity.all_finite and validity.dims_match:
        try:
            report = build_error_report(attach_grid(raw, grid), spec, cfg, validity)
        except PdePilotError as exc:
            validity.notes.append(f"metric unavailable: {exc}")
    out = {
        "validity": {
            "ok": validity.ok,
            "all_finite": validity.all_finite,
            "dims_match": validity.dims_match,
            "snapshot_count_ok": validity.snapshot_count_ok,
            "residual_cross_check_pass": validity.residual_cross_check_pass,
            "notes": validity.notes,
        },
        "report": report.as_dict() if report is not None else None,
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if validity.ok else 1


def cmd_bench(args) -> int:
    from . import bench

    try:
        results = bench.run_benchmark(
            Path(args.corpus), Path(args.out),
            backend=args.backend, width=args.width,
        )
        bench.emit_report(results, Path(args.out))
    except PdePilotError as exc:
        print(f"bench failed: {exc}", file=sys.stderr)
        return 1
    print(f"report written to {Path(args.out) / 'report.md'}")
    return 0


def cmd_report(args) -> int:
    from . import bench

    results_dir = Path(args.results)
    try:
        results = bench.load_results(results_dir)
        bench.emit_report(results, results_dir)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load results from {results_dir}: {exc}") from exc
    print(f"report written to {results_dir / 'report.md'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdepilot",
        description="plan, execute, and verify classical numerical PDE solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--backend", choices=("rules", "remote", "replay"), default="rules")
        p.add_argument("--plans", type=int, default=10, help="candidate slate size")
        p.add_argument("--top-k", type=int, default=5, help="candidates to execute")
        p.add_argument("--out", default="runs", help="root for run directories")
        p.add_argument("--replay-from", default=None,
                       help="recorded run directory (replay backend)")
        p.add_argument("--cap", type=float, default=120.0,
                       help="wall-clock cap per execution attempt (s)")

    p = sub.add_parser("solve", help="full pipeline: plan, execute, verify, select")
    p.add_argument("spec")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("plan", help="stop after scoring and selection")
    p.add_argument("spec")
    common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="run the verifier on an existing solution file")
    p.add_argument("spec")
    p.add_argument("solution")
    p.add_argument("--grid", choices=("uniform", "chebyshev"), default="uniform")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run the benchmark corpus")
    p.add_argument("corpus")
    p.add_argument("--backend", choices=("rules", "remote", "replay"), default="rules")
    p.add_argument("--out", default="bench-results")
    p.add_argument("--width", type=int, default=1, help="problems run in parallel")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="rebuild reports from stored results")
    p.add_argument("results")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
