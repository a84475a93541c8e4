"""Acceptance suite: one pass/fail line per shipped guarantee.

Each test exercises one end-to-end promise -- metric exactness, selection
quality on the bundled corpus, pre-execution stability filtering, executor
fault handling, verifier honesty, and replay determinism.  Where a guarantee
includes a time budget, the budget is asserted too.
"""

import json
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from pdepilot import bench
from pdepilot.executor import (
    Action,
    ExecutionConfig,
    Stage,
    execute_once,
    make_run_file,
    run_candidate,
)
from pdepilot.expr import Expression
from pdepilot.gateway import set_transport_hook
from pdepilot.grids import Grid, SolutionField, SolutionSet
from pdepilot.kernels.parabolic import solve_parabolic
from pdepilot.kernels.spectral import solve_spectral
from pdepilot.metrics import (
    aggregate_geomean,
    analytic_residual,
    evaluate_reference,
    relative_l2,
    relative_l2_set,
    validity_check,
)
from pdepilot.pipeline import PipelineConfig, plan_only, solve
from pdepilot.planning import (
    CandidateOutcome,
    ResolutionTier,
    SolverPlan,
    SpatialMethod,
    TimeIntegrator,
    filter_plans,
    final_select,
    plan_dt,
    plan_grid,
)
from pdepilot.problem import parse_spec
from pdepilot.solution_io import RawSolution, read_solution_file

M, I, T = SpatialMethod, TimeIntegrator, ResolutionTier

CORPUS = bench.default_corpus()
REPLAY_FIXTURE = Path(__file__).parent / "fixtures" / "replay-advection1d"
FORGE = Path(__file__).parents[1] / "template_forge"

IMPLICIT_INTEGRATORS = {I.CRANK_NICOLSON, I.BACKWARD_EULER, I.IMEX}


def _doc(name: str) -> dict:
    return json.loads((CORPUS / f"{name}.spec.json").read_text())


@pytest.fixture(autouse=True)
def _no_network():
    def refuse(url, payload, headers):
        raise AssertionError(f"network call attempted: {url}")

    set_transport_hook(refuse)
    yield
    set_transport_hook(None)


@pytest.fixture(scope="module")
def advection_2d_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("acc-advection2d")
    t0 = time.perf_counter()
    res = solve(_doc("advection2d"), PipelineConfig(backend="rules", out_root=root))
    res.detail_wall = time.perf_counter() - t0
    return res


# -- 1: metric exactness ----------------------------------------------------------


def test_01_relative_l2_hand_case_and_geomean_are_exact():
    t0 = time.perf_counter()
    g = Grid.uniform([(0.0, 1.0)], (2,), (False,))
    ref = SolutionField("u", np.array([[1.0, 1.0]]), g)
    num = SolutionField("u", np.array([[1.0, 0.0]]), g)
    r = relative_l2(num, ref)
    assert abs(r - 2.0**-0.5) <= 1e-12

    gm = aggregate_geomean([4.18e-14, 1.79e-5, 8.98e-7, 1.82e-4, 4.84e-13])
    assert gm == pytest.approx(9.0e-9, rel=0.03)
    assert time.perf_counter() - t0 < 1.0


# -- 2: advection accuracy ---------------------------------------------------------


def test_02_advection_2d_selects_fourier_and_meets_1e_10(advection_2d_run):
    res = advection_2d_run
    assert res.chosen.verified
    assert res.chosen.plan.spatial_method is M.FOURIER_SPECTRAL
    assert res.chosen.error is not None and res.chosen.error <= 1e-10
    assert res.detail_wall <= 60.0


# -- 3: elliptic accuracy ----------------------------------------------------------


@pytest.mark.parametrize("name,bound", [("poisson2d", 1e-11), ("helmholtz2d", 1e-10)])
def test_03_elliptic_chebyshev_accuracy(name, bound, tmp_path):
    t0 = time.perf_counter()
    res = solve(_doc(name), PipelineConfig(backend="rules", out_root=tmp_path))
    assert res.chosen.plan.spatial_method is M.CHEBYSHEV_SPECTRAL
    assert res.chosen.error is not None and res.chosen.error <= bound
    assert time.perf_counter() - t0 <= 30.0


# -- 4: parabolic convergence order ------------------------------------------------


def test_04_crank_nicolson_heat_converges_at_second_order():
    t0 = time.perf_counter()
    spec = parse_spec(_doc("heat1d"))
    horizon = spec.domain.time_horizon
    errors = {}
    for n, dt in ((128, 1e-3), (256, 5e-4)):
        grid = Grid.uniform([(0.0, 1.0)], (n,), (False,))
        fields, times, meta = solve_parabolic(
            spec, grid, dt=dt, horizon=horizon, integrator="crank_nicolson"
        )
        sol = SolutionSet(
            {"u": SolutionField("u", fields["u"][-1:], grid)}, times[-1:], meta
        )
        ref = evaluate_reference(spec, grid, times[-1:])
        errors[n] = relative_l2_set(sol, ref)
    ratio = errors[128] / errors[256]
    assert 3.4 <= ratio <= 4.6, f"refinement ratio {ratio:.3f}, errors {errors}"
    assert errors[256] <= 1e-4
    assert time.perf_counter() - t0 < 30.0


# -- 5: scheme-family selection regression ------------------------------------------

# the bundled corpus row -> the discretization family (and integrator class)
# the planner must put on top
FAMILY_ROWS = [
    ("advection2d", {M.FOURIER_SPECTRAL}, None),
    ("convection_diffusion2d", {M.FOURIER_SPECTRAL}, None),
    ("schrodinger1d", {M.FOURIER_SPECTRAL}, None),
    ("navier_stokes2d", {M.FOURIER_SPECTRAL}, None),
    ("shallow_water1d", {M.FOURIER_SPECTRAL}, None),
    ("allen_cahn1d", {M.FINITE_DIFFERENCE, M.FINITE_ELEMENT}, IMPLICIT_INTEGRATORS),
    ("burgers_viscous1d", {M.FINITE_DIFFERENCE, M.FINITE_ELEMENT}, IMPLICIT_INTEGRATORS),
    ("heat1d", {M.FINITE_DIFFERENCE, M.FINITE_ELEMENT}, IMPLICIT_INTEGRATORS),
    ("heat2d", {M.FINITE_DIFFERENCE, M.FINITE_ELEMENT}, IMPLICIT_INTEGRATORS),
    ("reaction_diffusion2d", {M.FINITE_DIFFERENCE, M.FINITE_ELEMENT}, IMPLICIT_INTEGRATORS),
    ("helmholtz2d", {M.CHEBYSHEV_SPECTRAL}, {I.NONE}),
    ("laplace2d", {M.CHEBYSHEV_SPECTRAL}, {I.NONE}),
    ("poisson2d", {M.CHEBYSHEV_SPECTRAL}, {I.NONE}),
    ("wave1d", {M.CHEBYSHEV_SPECTRAL}, {I.RK4}),
]


def test_05_top_plan_families_match_reference_selection():
    t0 = time.perf_counter()
    cfg = PipelineConfig(backend="rules")
    for name, families, integrators in FAMILY_ROWS:
        out = plan_only(_doc(name), cfg)
        top_id = out["selected"][0]
        top = SolverPlan.from_description(
            next(d for d in out["scored"] if d["plan_id"] == top_id)
        )
        assert top.spatial_method in families, f"{name}: planned {top_id}"
        if integrators is not None:
            assert top.time_integrator in integrators, f"{name}: planned {top_id}"
    assert time.perf_counter() - t0 < 10.0


# -- 6: unstable configurations never execute ---------------------------------------


def test_06_central_explicit_transport_is_rejected_before_execution(tmp_path):
    spec = parse_spec(_doc("advection2d"))
    bad = SolverPlan(M.FINITE_DIFFERENCE, "central", I.FORWARD_EULER, T.MEDIUM)
    survivors, rejected = filter_plans(spec, [bad])
    assert survivors == []
    assert len(rejected) == 1
    plan, why = rejected[0]
    assert "unstable" in why.lower()
    assert plan.hard_flags == (why,)

    # end to end: a slate with stability rejections records them in plans.json
    # and produces no artifact for any rejected plan
    res = solve(_doc("fokker_planck1d"), PipelineConfig(backend="rules", out_root=tmp_path))
    plans = json.loads((res.run_dir / "plans.json").read_text())
    assert plans["rejected"], "expected pre-execution rejections in this slate"
    executed = {o["plan"]["plan_id"] for o in json.loads((res.run_dir / "outcomes.json").read_text())}
    for plan_id, reason in plans["rejected"]:
        assert "unstable" in reason.lower()
        assert plan_id not in executed
        assert not (res.run_dir / "candidates" / plan_id.replace(":", "-")).exists()


# -- 7: executor fault handling ------------------------------------------------------

FAULT_SPEC = {
    "name": "fault_probe1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.5},
    "pde": {
        "unknowns": ["u"],
        "terms": [{"coeff": "1", "derivs": ["t"]}, {"coeff": "0.5", "derivs": ["x"]}],
        "source": "0",
        "type_class": "hyperbolic",
        "linearity": "linear",
    },
    "boundary": [
        {"axis": 0, "side": "low", "kind": "periodic"},
        {"axis": 0, "side": "high", "kind": "periodic"},
    ],
    "initial": {"u": "sin(2*pi*x)"},
    "reference": {"class": "none"},
}

GOOD_PROGRAM = """\
import json, sys
import numpy as np
from pdepilot.solution_io import write_solution_file

run = json.load(open(sys.argv[1]))
shape = tuple(run["grid"]["shape"])
u = np.stack([np.full(shape, 0.5), np.full(shape, 0.5)])
write_solution_file(run["output_path"], {"u": u},
                    [0.0, run["time_horizon"]], {"self_residual": 0.0})
"""

BROKEN_PROGRAM = "def (\n"


class RestartProbeProvider:
    """Emits broken source until the fresh restart, then a working program."""

    def __init__(self):
        self.generate_calls = 0

    def generate(self, spec, plan, attempt):
        self.generate_calls += 1
        return BROKEN_PROGRAM if self.generate_calls == 1 else GOOD_PROGRAM

    def repair(self, source, diagnostics, attempt):
        return BROKEN_PROGRAM


def test_07a_syntax_error_exhausts_coarse_then_restarts_exactly_once(tmp_path):
    spec = parse_spec(FAULT_SPEC)
    plan = SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.LOW)
    provider = RestartProbeProvider()
    cfg = ExecutionConfig()
    art = run_candidate(spec, plan, provider, cfg, workspace=tmp_path)
    assert art.succeeded
    assert art.restarts == 1
    restarts = [r for r in art.history if r.action is Action.FRESH_RESTART]
    assert len(restarts) == 1
    first_cycle_coarse = [
        r for r in art.history if r.stage is Stage.COARSE and r.lifecycle == 0
    ]
    assert 1 <= len(first_cycle_coarse) <= cfg.coarse_limit == 4
    assert all(r.failure is not None for r in first_cycle_coarse)


def test_07b_non_finite_fine_stage_halves_the_time_step(tmp_path):
    spec = parse_spec(FAULT_SPEC)
    plan = SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.LOW)
    fine_dt = plan_dt(spec, plan, plan_grid(spec, plan, coarse_factor=1))
    nan_program = GOOD_PROGRAM.replace(
        'u = np.stack([np.full(shape, 0.5), np.full(shape, 0.5)])',
        'bad = run["stage"] == "fine" and run["dt"] > %r\n'
        'val = float("nan") if bad else 0.5\n'
        'u = np.stack([np.full(shape, 0.5), np.full(shape, val)])' % (0.75 * fine_dt),
    )
    art = run_candidate(spec, plan, nan_program, ExecutionConfig(), workspace=tmp_path)
    assert art.succeeded
    halvings = [
        r for r in art.history
        if r.stage is Stage.FINE and r.action is Action.HALVE_TIMESTEP
    ]
    assert len(halvings) >= 1
    assert art.run_info["dt"] == pytest.approx(fine_dt / 2)


@pytest.mark.slow
def test_07c_sleeper_is_killed_at_the_wall_cap(tmp_path):
    cfg = ExecutionConfig()
    assert cfg.wall_cap == 120.0
    prog = tmp_path / "sleeper.py"
    prog.write_text("import time\ntime.sleep(200)\n")
    res = execute_once((sys.executable, prog, "unused"), tmp_path, cfg)
    assert res.timed_out
    assert 119.0 <= res.wall_time <= 121.0


# -- 8: measured error overrides planner score ---------------------------------------


def test_08_final_select_prefers_measured_error_over_score():
    # candidate outcomes recorded from a 2D advection run: the top-scored
    # high-resolution explicit plan lands at 1.75e-3 while the mid-tier
    # exponential integrator reaches 8.02e-15
    rows = [
        (SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.HIGH, score=90), 1.75e-3, 23.8),
        (SolverPlan(M.FINITE_DIFFERENCE, "weno3", I.RK3, T.HIGH, score=85), 3.18e4, 57.5),
        (SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.ETDRK4, T.MEDIUM, score=80), 8.02e-15, 35.3),
        (SolverPlan(M.FINITE_VOLUME, "muscl", I.RK2, T.MEDIUM, score=75), 1.94e-1, 33.2),
        (SolverPlan(M.FINITE_DIFFERENCE, "semi_lagrangian", I.SEMI_LAGRANGIAN, T.MEDIUM,
                    score=70), 2.27e-2, 15.8),
    ]
    outcomes = [
        CandidateOutcome(plan=p, error=e, wall_time=w, verified=True)
        for p, e, w in rows
    ]
    chosen = final_select(outcomes)
    assert chosen.plan.time_integrator is I.ETDRK4
    assert chosen.error == 8.02e-15
    top_scored = max(outcomes, key=lambda o: o.plan.score)
    assert top_scored.plan.time_integrator is I.RK4
    assert chosen is not top_scored


# -- 9: verifier honesty --------------------------------------------------------------


def test_09a_relative_l2_is_scale_equivariant_to_1e_14():
    g = Grid.uniform([(0.0, 1.0)], (32,), (True,))
    rng = np.random.default_rng(11)
    u = rng.normal(size=(2, 32))
    u_star = rng.normal(size=(2, 32)) + 2.0
    base = relative_l2(SolutionField("u", u, g), SolutionField("u", u_star, g))
    for alpha in (1e-8, 1e-3, 7.0, 1e4, 1e12):
        scaled = relative_l2(
            SolutionField("u", alpha * u, g), SolutionField("u", alpha * u_star, g)
        )
        assert abs(scaled - base) <= 1e-14 * base, f"alpha={alpha}"


def test_09b_every_bundled_analytic_reference_satisfies_its_pde():
    names = sorted(p.name[: -len(".spec.json")] for p in CORPUS.glob("*.spec.json"))
    checked = 0
    for name in names:
        spec = parse_spec(_doc(name))
        if spec.reference.kind.value != "explicit_analytic":
            continue
        grid = bench.consistency_grid(spec)
        residual = analytic_residual(spec, grid)
        assert residual <= 1e-8, f"{name}: reference residual {residual:.3e}"
        checked += 1
    assert checked >= 14


def test_09c_cross_check_flags_a_self_residual_lie():
    spec = parse_spec(_doc("heat1d"))
    grid = Grid.uniform([(0.0, 1.0)], (128,), (False,))
    times = np.linspace(0.0, spec.domain.time_horizon, 9)

    def stack(expr_text):
        e = Expression(expr_text)
        return np.stack(
            [e.eval_on(grid.coords(t), broadcast_shape=grid.shape) for t in times]
        )

    # fabricated run: the solution decays at half the true rate, yet the file
    # claims a near-zero self-check residual
    lie = RawSolution(
        {"u": stack("exp(-0.5*pi^2*t)*sin(pi*x)")}, times, {"self_residual": 1e-12}
    )
    flags = validity_check(lie, spec=spec, grid=grid)
    assert flags.residual_cross_check_pass is False

    # the honest twin with the same claimed residual passes the same gate
    honest = RawSolution(
        {"u": stack("exp(-pi^2*t)*sin(pi*x)")}, times, {"self_residual": 1e-12}
    )
    flags = validity_check(honest, spec=spec, grid=grid)
    assert flags.residual_cross_check_pass is True


# -- 10: replay determinism -----------------------------------------------------------


def test_10_shipped_transcript_replays_byte_identically(tmp_path):
    doc = json.loads((REPLAY_FIXTURE / "problem.json").read_text())
    res = solve(
        doc,
        PipelineConfig(backend="replay", out_root=tmp_path, replay_from=REPLAY_FIXTURE),
    )
    for name in ("chosen.json", "metrics.json"):
        assert (res.run_dir / name).read_bytes() == (REPLAY_FIXTURE / name).read_bytes(), name
    # nothing executed: decisions were reconstructed, not re-run
    assert not (res.run_dir / "candidates").exists()


# -- 11: external template conformance ------------------------------------------------


def test_11_external_spectral_template_matches_in_process_kernel(tmp_path):
    if shutil.which("node") is None:
        pytest.skip("node interpreter not available")
    if not (FORGE / "templates").is_dir():
        pytest.skip("solver templates not built")

    spec = parse_spec(_doc("advection2d"))
    plan = SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.MEDIUM)
    cfg = ExecutionConfig(interpreter=("node",))
    problem_path = tmp_path / "problem.json"
    problem_path.write_text(json.dumps(_doc("advection2d"), indent=2, sort_keys=True))

    rendered = tmp_path / "program.js"
    render = subprocess.run(
        ["node", str(FORGE / "bin" / "render.mjs"), "spectral_rk4",
         str(problem_path), str(rendered), "--tier", "medium"],
        capture_output=True, text=True,
    )
    assert render.returncode == 0, render.stderr
    assert rendered.exists()

    out_path = tmp_path / "solution.anum"
    run_info = make_run_file(
        spec, plan, Stage.FINE, cfg,
        workspace=tmp_path, problem_path=problem_path, output_path=out_path,
    )
    res = execute_once(("node", rendered, tmp_path / "run.json"), tmp_path, cfg)
    assert res.exit_code == 0, res.output
    raw = read_solution_file(out_path)
    assert "u" in raw.fields and np.all(np.isfinite(raw.fields["u"]))

    grid = plan_grid(spec, plan, coarse_factor=1)
    fields, times, _ = solve_spectral(
        spec, grid,
        dt=run_info["dt"], horizon=run_info["time_horizon"],
        stride=run_info["snapshot_stride"], integrator="rk4",
    )
    assert raw.fields["u"].shape == fields["u"].shape
    np.testing.assert_allclose(raw.times, times, rtol=0, atol=1e-12)
    ours = SolutionSet({"u": SolutionField("u", fields["u"], grid)}, times, {})
    theirs = SolutionSet({"u": SolutionField("u", raw.fields["u"], grid)}, raw.times, {})
    assert relative_l2_set(theirs, ours) <= 1e-8
