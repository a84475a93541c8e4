"""End-to-end solve orchestration.

One run = one timestamped, append-only directory:

    problem.json            parsed problem, canonical form
    transcripts/            every agent request/response
    plans.json              scored slate, selections, rejections, features
    candidates/<plan>/      executor workspaces (per attempt)
    outcomes.json           per-candidate execution + verification record
    chosen.json             the adopted candidate
    metrics.json            error report of the adopted candidate
    analysis.md             scheme analysis + reasoning prose

Replay mode re-drives every decision from a recorded run's transcripts and
outcomes without network or re-execution; chosen.json and metrics.json come
out byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import (
    AllCandidatesFailedError,
    ExhaustedError,
    MalformedResponseError,
    SchemaError,
)
from .executor import ExecutionConfig, run_candidate
from .gateway import (
    AgentRequest,
    AgentRole,
    DeterministicBackend,
    RemoteBackend,
    ReplayBackend,
    TranscriptStore,
    invoke_agent,
    render_prompt,
)
from .metrics import MetricConfig, build_error_report, validity_check
from .planning import (
    CandidateOutcome,
    SolverPlan,
    extract_features,
    final_select,
    plan_grid,
)
from .problem import parse_spec, serialize_spec, validate_spec
from .solution_io import attach_grid, read_solution_file


@dataclass
class PipelineConfig:
    backend: str = "rules"            # rules | remote | replay
    n_plans: int = 10
    top_k: int = 5
    out_root: Path = Path("runs")
    replay_from: Path | None = None   # recorded run directory (replay backend)
    execution: ExecutionConfig = field(default_factory=ExecutionConfig)
    metrics: MetricConfig = field(default_factory=MetricConfig)


@dataclass
class RunResult:
    run_dir: Path
    chosen: CandidateOutcome
    outcomes: list
    report: dict
    analysis: str
    wall_time: float
    time_to_first_success: float | None


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def make_backend(config: PipelineConfig):
    if config.backend == "rules":
        return DeterministicBackend()
    if config.backend == "remote":
        return RemoteBackend.from_env()
    if config.backend == "replay":
        if config.replay_from is None:
            raise SchemaError("replay backend needs the recorded run directory")
        return ReplayBackend(TranscriptStore(Path(config.replay_from) / "transcripts"))
    raise SchemaError(f"unknown backend {config.backend!r}")


def new_run_dir(root: Path, name: str) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S-%f")
    run_dir = Path(root) / f"{name}-{stamp}"
    run_dir.mkdir(parents=True, exist_ok=False)
    return run_dir


class AgentSourceProvider:
    """Bridges the executor's source hooks onto the Coder/Critic roles."""

    def __init__(self, backend, store, spec_doc: dict, plan: SolverPlan):
        self.backend = backend
        self.store = store
        self.spec_doc = spec_doc
        self.plan = plan

    def generate(self, spec, plan, attempt: int) -> str:
        ctx = {"spec": self.spec_doc, "plan": self.plan.describe()}
        req = AgentRequest(AgentRole.CODER, render_prompt(AgentRole.CODER, ctx), ctx)
        # single shot here: the executor's codegen budget owns the retries
        return invoke_agent(req, self.backend, store=self.store, retries=1).payload

    def repair(self, source: str, diagnostics: str, attempt: int) -> str:
        ctx = {"code": source, "error_log": diagnostics}
        req = AgentRequest(AgentRole.CRITIC, render_prompt(AgentRole.CRITIC, ctx), ctx)
        try:
            return invoke_agent(req, self.backend, store=self.store, retries=1).payload
        except MalformedResponseError:
            return source  # keep marching with the old source


_SPATIAL_ORDER = {
    "spectral": "spectral (exponential for smooth data)",
    "collocation": "spectral (exponential for smooth data)",
    "weno3": "3rd order (5th-order-biased reconstruction, 3-point smoothness)",
    "muscl": "2nd order (slope-limited)",
    "central": "2nd order (centered)",
    "upwind": "1st order",
    "semi_lagrangian": "3rd order (cubic interpolation)",
    "p1": "2nd order (piecewise-linear elements)",
}

_TIME_ORDER = {
    "rk4": "4th order", "rk3": "3rd order", "rk2": "2nd order",
    "etdrk4": "4th order (exact on the stiff linear part)",
    "crank_nicolson": "2nd order", "imex": "2nd order",
    "backward_euler": "1st order", "forward_euler": "1st order",
    "split_step": "2nd order (Strang)",
    "semi_lagrangian": "unconditionally stable trajectory integration",
    "none": "direct solve, no time stepping",
}


def scheme_analysis(spec, plan: SolverPlan) -> str:
    fv = extract_features(spec, plan)
    lines = [f"## Chosen scheme: {plan.plan_id}", ""]
    lines.append(f"- Spatial accuracy: {_SPATIAL_ORDER.get(plan.variant, 'see variant')}")
    lines.append(f"- Temporal accuracy: {_TIME_ORDER.get(plan.time_integrator.value, 'n/a')}")
    if plan.time_integrator.value in ("crank_nicolson", "backward_euler", "imex"):
        lines.append("- Stability: A-stable (implicit), step size limited by accuracy only")
    elif plan.time_integrator.value == "etdrk4":
        lines.append("- Stability: exponential integrator, stiff linear part handled exactly")
    elif plan.time_integrator.value == "none":
        lines.append("- Stability: steady problem, single linear solve")
    elif fv.cfl_estimate is not None:
        lines.append(f"- Stability: CFL-bounded, estimate {fv.cfl_estimate:.3g} at this tier")
    if fv.spectral and fv.problem.bc_kind.value == "periodic":
        lines.append("- Fit: periodic boundaries make the trigonometric basis exact")
    elif plan.spatial_method.value == "chebyshev_spectral":
        lines.append("- Fit: Dirichlet data imposed directly on collocation boundary rows")
    elif fv.upwinded:
        lines.append("- Fit: upwinded flux follows the transport direction, no spurious oscillation")
    return "\n".join(lines)


def _relative(path, run_dir: Path) -> str | None:
    if path is None:
        return None
    try:
        return str(Path(path).relative_to(run_dir))
    except ValueError:
        return str(path)


def _verify_candidate(spec, plan, artifact, run_dir, cfg: MetricConfig):
    grid = plan_grid(spec, plan)
    raw = read_solution_file(artifact.solution_path)
    validity = validity_check(raw, expected_shape=grid.shape, spec=spec, grid=grid, cfg=cfg)
    report = None
    if validity.all_finite and validity.dims_match:
        sol = attach_grid(raw, grid)
        report = build_error_report(sol, spec, cfg, validity)
    error = report.primary if (report is not None and validity.ok) else None
    if error is not None and not np.isfinite(error):
        error = None
    detail = {
        "artifact": artifact.describe(),
        "report": report.as_dict() if report is not None else None,
        "solution": _relative(artifact.solution_path, run_dir),
        "self_residual": raw.meta.get("self_residual"),
        "scheme": raw.meta.get("scheme"),
    }
    detail["artifact"]["solution_path"] = _relative(artifact.solution_path, run_dir)
    verified = bool(validity.ok and error is not None)
    return CandidateOutcome(plan=plan, error=error, wall_time=artifact.wall_time,
                            verified=verified, detail=detail)


def _outcome_to_json(o: CandidateOutcome) -> dict:
    return {
        "plan": o.plan.describe(),
        "error": o.error,
        "wall_time": o.wall_time,
        "verified": o.verified,
        "detail": o.detail,
    }


def _outcome_from_json(d: dict) -> CandidateOutcome:
    return CandidateOutcome(
        plan=SolverPlan.from_description(d["plan"]),
        error=d["error"],
        wall_time=d["wall_time"],
        verified=d["verified"],
        detail=d.get("detail", {}),
    )


def solve(document, config: PipelineConfig) -> RunResult:
    t_start = time.perf_counter()
    spec = parse_spec(document)
    fatal = [f for f in validate_spec(spec) if f.fatal]
    if fatal:
        raise SchemaError("; ".join(f.message for f in fatal))
    doc = serialize_spec(spec)

    run_dir = new_run_dir(config.out_root, spec.name)
    _dump(run_dir / "problem.json", doc)
    store = TranscriptStore(run_dir / "transcripts")
    backend = make_backend(config)
    store.write_meta({"backend": config.backend, "problem": spec.name})

    def ask(role: AgentRole, ctx: dict):
        req = AgentRequest(role, render_prompt(role, ctx), ctx)
        return invoke_agent(req, backend, store=store,
                            retries=config.execution.codegen_limit)

    # formulation and planning
    formulation = ask(AgentRole.FORMULATOR, {"spec": doc}).payload
    plans = ask(AgentRole.PLANNER, {
        "spec": doc,
        "classification": formulation.get("classification", {}),
        "n_candidates": config.n_plans,
    }).payload
    plan_docs = [p.describe() for p in plans]
    features = ask(AgentRole.FEATURE, {"spec": doc, "plans": plan_docs}).payload
    slate = ask(AgentRole.SELECTOR, {
        "spec": doc, "plans": plan_docs, "top_k": config.top_k,
    }).payload
    _dump(run_dir / "plans.json", {
        "proposed": plan_docs,
        "features": features,
        "scored": slate["scored"],
        "selected": slate["selected"],
        "rejected": slate["rejected"],
    })

    by_id = {d["plan_id"]: SolverPlan.from_description(d) for d in slate["scored"]}
    selected = [by_id[pid] for pid in slate["selected"] if pid in by_id]
    if not selected:
        raise AllCandidatesFailedError("selector kept no candidates")

    # execution + verification (recorded outcomes stand in under replay)
    outcomes: list[CandidateOutcome] = []
    time_to_first = None
    cumulative = 0.0
    if config.backend == "replay":
        recorded = json.loads((Path(config.replay_from) / "outcomes.json").read_text())
        outcomes = [_outcome_from_json(d) for d in recorded]
    else:
        for plan in selected:
            provider = AgentSourceProvider(backend, store, doc, plan)
            try:
                art = run_candidate(
                    spec, plan, provider, config.execution,
                    workspace=run_dir / "candidates",
                    problem_path=run_dir / "problem.json",
                )
            except ExhaustedError as exc:
                failed = exc.artifact
                cumulative += failed.wall_time if failed else 0.0
                outcomes.append(CandidateOutcome(
                    plan=plan, error=None, wall_time=failed.wall_time if failed else 0.0,
                    verified=False,
                    detail={"artifact": failed.describe() if failed else None,
                            "report": None, "solution": None,
                            "failure": str(exc)},
                ))
                continue
            outcome = _verify_candidate(spec, plan, art, run_dir, config.metrics)
            cumulative += art.wall_time
            if outcome.verified and time_to_first is None:
                time_to_first = cumulative
            outcomes.append(outcome)
    _dump(run_dir / "outcomes.json", [_outcome_to_json(o) for o in outcomes])

    try:
        chosen = final_select(outcomes)
    except AllCandidatesFailedError as exc:
        exc.outcomes = outcomes
        exc.run_dir = run_dir
        raise

    analysis_prose = ask(AgentRole.REASONER, {
        "spec": doc,
        "outcomes": [
            {"plan_id": o.plan.plan_id, "error": o.error,
             "wall_time": o.wall_time, "verified": o.verified}
            for o in outcomes
        ],
        "chosen": chosen.plan.plan_id,
    }).payload
    analysis = scheme_analysis(spec, chosen.plan) + "\n\n## Reasoning\n\n" + analysis_prose + "\n"
    (run_dir / "analysis.md").write_text(analysis)

    report = chosen.detail.get("report") or {}
    _dump(run_dir / "chosen.json", {
        "plan": chosen.plan.describe(),
        "error": chosen.error,
        "wall_time": chosen.wall_time,
        "verified": chosen.verified,
        "solution": chosen.detail.get("solution"),
        "scheme": chosen.detail.get("scheme"),
    })
    _dump(run_dir / "metrics.json", {
        "plan_id": chosen.plan.plan_id,
        "report": report,
        "self_residual": chosen.detail.get("self_residual"),
    })

    return RunResult(
        run_dir=run_dir,
        chosen=chosen,
        outcomes=outcomes,
        report=report,
        analysis=analysis,
        wall_time=time.perf_counter() - t_start,
        time_to_first_success=time_to_first,
    )


def plan_only(document, config: PipelineConfig) -> dict:
    """Planning steps only: formulate, propose, analyze, select. No execution."""
    spec = parse_spec(document)
    doc = serialize_spec(spec)
    backend = make_backend(config)

    def ask(role: AgentRole, ctx: dict):
        req = AgentRequest(role, render_prompt(role, ctx), ctx)
        return invoke_agent(req, backend, retries=config.execution.codegen_limit)

    formulation = ask(AgentRole.FORMULATOR, {"spec": doc}).payload
    plans = ask(AgentRole.PLANNER, {
        "spec": doc,
        "classification": formulation.get("classification", {}),
        "n_candidates": config.n_plans,
    }).payload
    plan_docs = [p.describe() for p in plans]
    slate = ask(AgentRole.SELECTOR, {
        "spec": doc, "plans": plan_docs, "top_k": config.top_k,
    }).payload
    return {
        "classification": formulation.get("classification", {}),
        "proposed": plan_docs,
        "scored": slate["scored"],
        "selected": slate["selected"],
        "rejected": slate["rejected"],
    }
