"""Coarse-to-fine execution of candidate solver programs in child processes.

Candidate code never runs in-process.  Every attempt launches

    <interpreter> program <run file>

in its own working directory, under a wall-clock deadline and an
address-space cap, and is judged purely by its exit status and the solution
file it leaves behind.  Failures at the coarse stage are treated as logic
bugs and go back to the repair hook; failures at the fine stage are treated
as stability problems and handled by halving the time step.  When a stage's
retry budget runs out, the source is discarded and regenerated once from
scratch; after that the candidate is abandoned.
"""

from __future__ import annotations

import json
import math
import os
import re
import resource
import signal
import subprocess
import sys
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ExhaustedError, MalformedResponseError, SchemaError
from .planning import SolverPlan, plan_dt, plan_grid
from .problem import ProblemSpec, serialize_spec
from .solution_io import read_solution_file

BLOWUP_FACTOR = 1e6
RESTART_BUDGET = 1


class Stage(str, Enum):
    CODEGEN = "codegen"
    COARSE = "coarse"
    FINE = "fine"
    VERIFIED = "verified"


class FailureKind(str, Enum):
    LOGIC_ERROR = "logic_error"
    STABILITY_ERROR = "stability_error"
    TIMEOUT = "timeout"
    FORMAT_ERROR = "format_error"
    RESOURCE_ERROR = "resource_error"


class Action(str, Enum):
    REPAIR = "repair"
    HALVE_TIMESTEP = "halve_timestep"
    FRESH_RESTART = "fresh_restart"
    ABANDON = "abandon"


@dataclass(frozen=True)
class ExecutionConfig:
    codegen_limit: int = 2
    coarse_limit: int = 4
    fine_limit: int = 6
    wall_cap: float = 120.0
    coarse_factor: int = 4
    snapshot_cap: int = 100
    memory_bytes: int = 2 * 1024**3
    interpreter: tuple[str, ...] = (sys.executable,)

    def __post_init__(self):
        for name in ("codegen_limit", "coarse_limit", "fine_limit"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.wall_cap <= 0 or self.coarse_factor < 1 or self.snapshot_cap < 1:
            raise ValueError("wall_cap, coarse_factor and snapshot_cap must be positive")

    def stage_limit(self, stage: Stage) -> int:
        return self.coarse_limit if stage == Stage.COARSE else self.fine_limit


@dataclass(frozen=True)
class AttemptRecord:
    stage: Stage
    lifecycle: int          # 0 = first source, 1 = after the fresh restart
    index: int              # 1-based within (stage, lifecycle)
    exit_code: int | None
    wall_time: float
    failure: FailureKind | None
    action: Action | None
    note: str = ""


@dataclass
class RunArtifact:
    plan_id: str
    stage_reached: Stage
    attempts: dict
    restarts: int
    wall_time: float
    solution_path: Path | None
    exit_status: int | None
    diagnostics: str
    history: tuple = ()
    run_info: dict = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return self.stage_reached == Stage.VERIFIED

    def describe(self) -> dict:
        return {
            "plan_id": self.plan_id,
            "stage_reached": self.stage_reached.value,
            "attempts": dict(self.attempts),
            "restarts": self.restarts,
            "wall_time": self.wall_time,
            "solution_path": str(self.solution_path) if self.solution_path else None,
            "exit_status": self.exit_status,
            "history": [
                {
                    "stage": r.stage.value,
                    "lifecycle": r.lifecycle,
                    "index": r.index,
                    "exit_code": r.exit_code,
                    "wall_time": r.wall_time,
                    "failure": r.failure.value if r.failure else None,
                    "action": r.action.value if r.action else None,
                    "note": r.note,
                }
                for r in self.history
            ],
        }


class StaticProgram:
    """Source provider with nothing to say: same text every time."""

    def __init__(self, source: str):
        self.source = source

    def generate(self, spec, plan, attempt: int) -> str:
        return self.source

    def repair(self, source: str, diagnostics: str, attempt: int) -> str:
        return source


def constant_coefficients(spec: ProblemSpec) -> list:
    """Per-term numeric view for programs that cannot parse expressions."""
    out = []
    for t in spec.pde.terms:
        entry = {
            "field": t.field,
            "eq": t.equation,
            "derivs": list(t.derivs),
            "nonlinearity": t.nonlinearity.text if t.nonlinearity is not None else None,
        }
        if t.coeff.is_constant:
            entry["value"] = t.coeff.constant_value
        else:
            entry["value"] = None
            entry["expression"] = t.coeff.text
        out.append(entry)
    return out


def make_run_file(
    spec: ProblemSpec,
    plan: SolverPlan,
    stage: Stage,
    config: ExecutionConfig,
    *,
    workspace: Path,
    problem_path: Path,
    output_path: Path,
    dt_scale: float = 1.0,
) -> dict:
    """Write ``run.json`` for one attempt and return its contents."""
    factor = config.coarse_factor if stage == Stage.COARSE else 1
    grid = plan_grid(spec, plan, coarse_factor=factor)
    assert all(ax.n >= 16 for ax in grid.axes)
    dt = plan_dt(spec, plan, grid) * dt_scale
    horizon = spec.domain.time_horizon
    if horizon and dt > 0:
        steps = max(1, math.ceil(horizon / dt))
        stride = max(1, math.ceil(steps / config.snapshot_cap))
    else:
        stride = 1
    run = {
        "stage": stage.value,
        "plan": plan.describe(),
        "grid": grid.describe(),
        "dt": dt,
        "time_horizon": horizon,
        "snapshot_stride": stride,
        "coefficients": constant_coefficients(spec),
        "output_path": str(output_path),
        "problem": str(problem_path),
    }
    path = workspace / "run.json"
    path.write_text(json.dumps(run, indent=2, sort_keys=True))
    return run


@dataclass(frozen=True)
class SolutionScan:
    readable: bool
    finite: bool = False
    blown_up: bool = False
    note: str = ""


def scan_solution(path: Path) -> SolutionScan:
    try:
        raw = read_solution_file(path)
    except (SchemaError, FileNotFoundError, OSError) as exc:
        return SolutionScan(readable=False, note=str(exc))
    if not raw.fields:
        return SolutionScan(readable=False, note="solution file carries no fields")
    finite = all(np.isfinite(v).all() for v in raw.fields.values())
    blown = False
    if finite:
        for v in raw.fields.values():
            start = float(np.max(np.abs(v[0])))
            end = float(np.max(np.abs(v[-1])))
            if start > 0.0 and end > BLOWUP_FACTOR * start:
                blown = True
    return SolutionScan(readable=True, finite=finite, blown_up=blown)


def classify_failure(
    stage: Stage,
    exit_code: int | None,
    timed_out: bool,
    diagnostics: str,
    scan: SolutionScan | None,
) -> FailureKind | None:
    """Deterministic failure taxonomy; None means the attempt succeeded."""
    if timed_out:
        return FailureKind.TIMEOUT
    if "MemoryError" in diagnostics or exit_code == -signal.SIGSEGV:
        return FailureKind.RESOURCE_ERROR
    if exit_code != 0:
        return FailureKind.LOGIC_ERROR if stage == Stage.COARSE else FailureKind.STABILITY_ERROR
    if scan is None or not scan.readable:
        return FailureKind.FORMAT_ERROR
    if not scan.finite:
        return FailureKind.LOGIC_ERROR if stage == Stage.COARSE else FailureKind.STABILITY_ERROR
    if stage == Stage.FINE and scan.blown_up:
        return FailureKind.STABILITY_ERROR
    return None


@dataclass(frozen=True)
class AttemptState:
    stage: Stage
    attempts_used: int
    restarts_used: int


def handle_failure(kind: FailureKind, state: AttemptState, config: ExecutionConfig) -> Action:
    if state.attempts_used < config.stage_limit(state.stage):
        if state.stage == Stage.COARSE:
            return Action.REPAIR
        if kind == FailureKind.STABILITY_ERROR:
            return Action.HALVE_TIMESTEP
        # fine-stage timeout/format/resource: rerunning the same source is futile
    if state.restarts_used < RESTART_BUDGET:
        return Action.FRESH_RESTART
    return Action.ABANDON


@dataclass
class _ProcResult:
    exit_code: int | None
    timed_out: bool
    wall_time: float
    output: str


def _child_limits(memory_bytes: int):
    def apply():
        resource.setrlimit(resource.RLIMIT_AS, (memory_bytes, memory_bytes))
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))

    return apply


def execute_once(cmd, cwd: Path, config: ExecutionConfig) -> _ProcResult:
    """Run one attempt under the wall-clock and memory caps; never raises."""
    t0 = time.monotonic()
    try:
        proc = subprocess.Popen(
            [str(c) for c in cmd],
            cwd=str(cwd),
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            stdin=subprocess.DEVNULL,
            start_new_session=True,
            preexec_fn=_child_limits(config.memory_bytes),
        )
    except OSError as exc:
        return _ProcResult(None, False, time.monotonic() - t0, f"spawn failed: {exc}")
    timed_out = False
    try:
        out, _ = proc.communicate(timeout=config.wall_cap)
    except subprocess.TimeoutExpired:
        timed_out = True
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, _ = proc.communicate()
    wall = time.monotonic() - t0
    text = (out or b"").decode("utf-8", errors="replace")
    return _ProcResult(proc.returncode, timed_out, wall, text[-8000:])


_SAFE = re.compile(r"[^A-Za-z0-9._-]+")


def _slug(name: str) -> str:
    return _SAFE.sub("-", name).strip("-") or "candidate"


class _Restart(Exception):
    pass


class _Abandon(Exception):
    pass


def run_candidate(
    spec: ProblemSpec,
    plan: SolverPlan,
    program,
    config: ExecutionConfig,
    *,
    workspace: Path,
    problem_path: Path | None = None,
) -> RunArtifact:
    """Drive one candidate through codegen -> coarse -> fine.

    ``program`` is either literal source text or a provider with
    ``generate(spec, plan, attempt)`` / ``repair(source, diagnostics, attempt)``.
    Returns a verified artifact or raises ExhaustedError carrying the partial
    artifact with its full attempt history.
    """
    provider = StaticProgram(program) if isinstance(program, str) else program
    root = Path(workspace) / _slug(plan.plan_id)
    root.mkdir(parents=True, exist_ok=True)
    if problem_path is None:
        problem_path = root / "problem.json"
        problem_path.write_text(json.dumps(serialize_spec(spec), indent=2, sort_keys=True))

    history: list[AttemptRecord] = []
    attempts = {"codegen": 0, "coarse": 0, "fine": 0}
    total_wall = 0.0
    restarts = 0
    last_exit: int | None = None
    last_diag = ""
    stage_reached = Stage.CODEGEN

    def fail(stage: Stage) -> RunArtifact:
        return RunArtifact(
            plan_id=plan.plan_id,
            stage_reached=stage,
            attempts=attempts,
            restarts=restarts,
            wall_time=total_wall,
            solution_path=None,
            exit_status=last_exit,
            diagnostics=last_diag,
            history=tuple(history),
        )

    def generate_source(lifecycle: int) -> str:
        nonlocal last_diag
        for i in range(1, config.codegen_limit + 1):
            attempts["codegen"] += 1
            try:
                return provider.generate(spec, plan, attempt=attempts["codegen"])
            except MalformedResponseError as exc:
                last_diag = str(exc)
                action = (
                    Action.FRESH_RESTART
                    if i == config.codegen_limit and restarts < RESTART_BUDGET
                    else (Action.ABANDON if i == config.codegen_limit else Action.REPAIR)
                )
                history.append(AttemptRecord(
                    Stage.CODEGEN, lifecycle, i, None, 0.0,
                    FailureKind.FORMAT_ERROR, action, str(exc),
                ))
        if restarts < RESTART_BUDGET:
            raise _Restart
        raise _Abandon

    def run_stage(stage: Stage, source: str, lifecycle: int, ldir: Path):
        """Returns (source, solution_path, run_info) on success."""
        nonlocal total_wall, last_exit, last_diag
        halvings = 0
        limit = config.stage_limit(stage)
        for attempt in range(1, limit + 1):
            attempts[stage.value] += 1
            adir = ldir / f"{stage.value}-{attempt}"
            adir.mkdir(parents=True, exist_ok=True)
            prog_path = adir / "program.py"
            prog_path.write_text(source)
            out_path = adir / "solution.anum"
            run_info = make_run_file(
                spec, plan, stage, config,
                workspace=adir, problem_path=problem_path,
                output_path=out_path, dt_scale=0.5**halvings,
            )
            res = execute_once(
                (*config.interpreter, prog_path, adir / "run.json"), adir, config
            )
            total_wall += res.wall_time
            last_exit, last_diag = res.exit_code, res.output
            (adir / "attempt.log").write_text(res.output)
            scan = scan_solution(out_path) if not res.timed_out else None
            kind = classify_failure(stage, res.exit_code, res.timed_out, res.output, scan)
            if kind is None:
                history.append(AttemptRecord(stage, lifecycle, attempt, res.exit_code,
                                             res.wall_time, None, None))
                return source, out_path, run_info
            action = handle_failure(
                kind, AttemptState(stage, attempt, restarts), config
            )
            note = (scan.note if scan and not scan.readable else "") or _tail(res.output)
            history.append(AttemptRecord(stage, lifecycle, attempt, res.exit_code,
                                         res.wall_time, kind, action, note))
            if action == Action.REPAIR:
                source = provider.repair(source, res.output, attempt=attempt)
            elif action == Action.HALVE_TIMESTEP:
                halvings += 1
            elif action == Action.FRESH_RESTART:
                raise _Restart
            else:
                raise _Abandon
        raise _Abandon  # not reached: the last attempt always restarts/abandons

    while True:
        lifecycle = restarts
        ldir = root / f"cycle-{lifecycle}"
        try:
            source = generate_source(lifecycle)
            stage_reached = Stage.COARSE
            source, _, _ = run_stage(Stage.COARSE, source, lifecycle, ldir)
            stage_reached = Stage.FINE
            source, sol_path, run_info = run_stage(Stage.FINE, source, lifecycle, ldir)
        except _Restart:
            restarts += 1
            continue
        except _Abandon:
            raise ExhaustedError(
                f"{plan.plan_id}: retries and restarts exhausted at {stage_reached.value} stage",
                artifact=fail(stage_reached),
            ) from None
        art = fail(Stage.VERIFIED)
        art.solution_path = sol_path
        art.run_info = run_info
        return art


def _tail(text: str, n: int = 400) -> str:
    text = text.strip()
    return text[-n:] if len(text) > n else text
