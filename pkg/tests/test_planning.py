"""Planner/selector behavior against the published candidate slate and rules."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdepilot.errors import AllCandidatesFailedError, NoCompatiblePlanError
from pdepilot.planning import (
    CandidateOutcome,
    ResolutionTier,
    SolverPlan,
    SpatialMethod,
    TimeIntegrator,
    extract_features,
    filter_plans,
    final_select,
    generate_plans,
    plan_grid,
    select_top_k,
)
from pdepilot.problem import parse_spec

M, I, T = SpatialMethod, TimeIntegrator, ResolutionTier


def advection2d(cx=0.3, cy=0.2):
    terms = [{"coeff": "1", "derivs": ["t"]}, {"coeff": str(cx), "derivs": ["x"]}]
    ref = f"sin(2*pi*(x-{cx}*t))"
    if cy:
        terms.append({"coeff": str(cy), "derivs": ["y"]})
        ref += f"*cos(2*pi*(y-{cy}*t))"
    init = "sin(2*pi*x)" + ("*cos(2*pi*y)" if cy else "")
    return parse_spec({
        "name": "advection2d",
        "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]], "time_horizon": 1.0},
        "pde": {"unknowns": ["u"], "terms": terms, "source": "0",
                "type_class": "hyperbolic", "linearity": "linear"},
        "boundary": [{"axis": a, "side": s, "kind": "periodic"}
                     for a in (0, 1) for s in ("low", "high")],
        "initial": {"u": init},
        "reference": {"class": "explicit_analytic", "expression": ref},
    })


def poisson2d():
    return parse_spec({
        "name": "poisson2d",
        "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]]},
        "pde": {"unknowns": ["u"],
                "terms": [{"coeff": "-1", "derivs": ["x", "x"]},
                          {"coeff": "-1", "derivs": ["y", "y"]}],
                "source": "2*pi^2*sin(pi*x)*sin(pi*y)",
                "type_class": "elliptic", "linearity": "linear"},
        "boundary": [{"axis": a, "side": s, "kind": "dirichlet", "value": "0"}
                     for a in (0, 1) for s in ("low", "high")],
        "reference": {"class": "explicit_analytic", "expression": "sin(pi*x)*sin(pi*y)"},
    })


def heat1d():
    return parse_spec({
        "name": "heat1d",
        "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.1},
        "pde": {"unknowns": ["u"],
                "terms": [{"coeff": "1", "derivs": ["t"]},
                          {"coeff": "-1", "derivs": ["x", "x"]}],
                "source": "0", "type_class": "parabolic", "linearity": "linear",
                "stiffness": "stiff"},
        "boundary": [{"axis": 0, "side": "low", "kind": "dirichlet", "value": "0"},
                     {"axis": 0, "side": "high", "kind": "dirichlet", "value": "0"}],
        "initial": {"u": "sin(pi*x)"},
        "reference": {"class": "explicit_analytic", "expression": "exp(-pi^2*t)*sin(pi*x)"},
    })


# -- slate generation and scoring ----------------------------------------------


def test_advection_slate_reproduces_published_scores():
    spec = advection2d()
    slate = select_top_k(spec, generate_plans(spec, 10), 5)
    assert [p.score for p in slate.scored] == [90, 85, 80, 75, 70, 60, 55, 50, 50, 45]
    assert [p.score for p in slate.selected] == [90, 85, 80, 75, 70]
    head = slate.scored[0]
    assert head.spatial_method == M.FOURIER_SPECTRAL
    assert head.time_integrator == I.RK4
    assert head.resolution_tier == T.HIGH


def test_advection_slate_contains_expected_members():
    spec = advection2d()
    ids = {p.plan_id for p in generate_plans(spec, 10)}
    assert "fourier_spectral:spectral:rk4:high" in ids
    assert "finite_difference:weno3:rk3:high" in ids
    assert "fourier_spectral:spectral:etdrk4:medium" in ids
    assert "finite_volume:muscl:rk2:medium" in ids
    assert "finite_difference:semi_lagrangian:semi_lagrangian:medium" in ids
    assert len(ids) == 10


def test_slate_has_spectral_and_fd_families():
    spec = advection2d()
    methods = {p.spatial_method for p in generate_plans(spec, 10)}
    assert M.FOURIER_SPECTRAL in methods
    assert M.FINITE_DIFFERENCE in methods


def test_poisson_slate_chebyshev_ranked_first():
    spec = poisson2d()
    slate = select_top_k(spec, generate_plans(spec, 3), 3)
    assert slate.selected[0].spatial_method == M.CHEBYSHEV_SPECTRAL
    assert slate.selected[0].time_integrator == I.NONE
    assert all(p.time_integrator == I.NONE for p in slate.scored)


def test_heat_dirichlet_prefers_implicit_fd():
    spec = heat1d()
    slate = select_top_k(spec, generate_plans(spec, 10), 5)
    top = slate.selected[0]
    assert top.spatial_method in (M.FINITE_DIFFERENCE, M.FINITE_ELEMENT)
    assert top.time_integrator in (I.CRANK_NICOLSON, I.BACKWARD_EULER, I.IMEX)
    # explicit Euler at this diffusion number cannot survive the filter
    assert any("CFL" in why for _, why in slate.rejected)


def test_stiff_periodic_filters_explicit_spectral():
    spec = parse_spec({
        "name": "ks1d",
        "domain": {"dim": 1, "bounds": [[0.0, 32.0]], "time_horizon": 10.0},
        "pde": {"unknowns": ["u"],
                "terms": [{"coeff": "1", "derivs": ["t"]},
                          {"coeff": "1", "nonlinearity": "u", "derivs": ["x"]},
                          {"coeff": "1", "derivs": ["x", "x"]},
                          {"coeff": "1", "derivs": ["x", "x", "x", "x"]}],
                "source": "0", "type_class": "parabolic",
                "linearity": "nonlinear", "stiffness": "stiff"},
        "boundary": [{"axis": 0, "side": "low", "kind": "periodic"},
                     {"axis": 0, "side": "high", "kind": "periodic"}],
        "initial": {"u": "cos(pi*x/16)"},
        "reference": {"class": "none"},
    })
    slate = select_top_k(spec, generate_plans(spec, 10), 5)
    assert slate.selected[0].spatial_method == M.FOURIER_SPECTRAL
    assert slate.selected[0].time_integrator in (I.ETDRK4, I.IMEX)
    assert all(p.time_integrator != I.RK4 for p in slate.selected)


def test_cfl_estimate_matches_hand_arithmetic():
    # c=0.3 on the high tier: dx=1/256, dt follows the dx/2 rule, CFL = 0.15
    spec = advection2d(cx=0.3, cy=0.0)
    plan = SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.HIGH)
    fv = extract_features(spec, plan)
    assert fv.cfl_estimate == pytest.approx(0.15, abs=1e-12)


def test_elliptic_features_have_no_cfl():
    fv = extract_features(
        poisson2d(), SolverPlan(M.CHEBYSHEV_SPECTRAL, "collocation", I.NONE, T.HIGH)
    )
    assert not fv.explicit
    assert fv.cfl_estimate is None


# -- hard filter ----------------------------------------------------------------


def test_central_euler_on_advection_rejected():
    bad = SolverPlan(M.FINITE_DIFFERENCE, "central", I.FORWARD_EULER, T.MEDIUM)
    survivors, rejected = filter_plans(advection2d(), [bad])
    assert survivors == []
    assert len(rejected) == 1
    plan, why = rejected[0]
    assert "central" in why and "Euler" in why
    assert plan.hard_flags == (why,)


def test_upwind_euler_survives_where_central_dies():
    ok = SolverPlan(M.FINITE_DIFFERENCE, "upwind", I.FORWARD_EULER, T.LOW)
    survivors, rejected = filter_plans(advection2d(), [ok])
    assert rejected == [] and len(survivors) == 1


def test_fourier_rejected_on_dirichlet():
    bad = SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.NONE, T.MEDIUM)
    _, rejected = filter_plans(poisson2d(), [bad])
    assert rejected and "periodic" in rejected[0][1]


def test_time_integrator_rejected_on_steady_problem():
    bad = SolverPlan(M.CHEBYSHEV_SPECTRAL, "collocation", I.RK4, T.MEDIUM)
    _, rejected = filter_plans(poisson2d(), [bad])
    assert rejected and "steady" in rejected[0][1]


def test_no_selected_explicit_plan_exceeds_cfl_one():
    for spec in (advection2d(), heat1d(), poisson2d()):
        slate = select_top_k(spec, generate_plans(spec, 10), 5)
        for plan in slate.selected:
            fv = extract_features(spec, plan)
            if fv.explicit and fv.cfl_estimate is not None:
                assert fv.cfl_estimate <= 1.0


def test_neumann_has_no_compatible_family():
    spec = parse_spec({
        "name": "neumann_heat",
        "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.1},
        "pde": {"unknowns": ["u"],
                "terms": [{"coeff": "1", "derivs": ["t"]},
                          {"coeff": "-1", "derivs": ["x", "x"]}],
                "source": "0", "type_class": "parabolic", "linearity": "linear"},
        "boundary": [{"axis": 0, "side": "low", "kind": "neumann", "value": "0"},
                     {"axis": 0, "side": "high", "kind": "neumann", "value": "0"}],
        "initial": {"u": "cos(pi*x)"},
        "reference": {"class": "explicit_analytic", "expression": "exp(-pi^2*t)*cos(pi*x)"},
    })
    with pytest.raises(NoCompatiblePlanError):
        generate_plans(spec, 10)


# -- ranking determinism and ties -------------------------------------------------


def test_slate_is_deterministic():
    spec = advection2d()
    a = select_top_k(spec, generate_plans(spec, 10), 5)
    b = select_top_k(spec, generate_plans(spec, 10), 5)
    assert [p.plan_id for p in a.scored] == [p.plan_id for p in b.scored]
    assert [p.score for p in a.scored] == [p.score for p in b.scored]


def test_equal_scores_break_by_cheaper_tier():
    # WENO3@High and ETDRK4@High both land on 85 for smooth advection;
    # the WENO plan is the cheaper class (no exponential setup) and goes first
    spec = advection2d()
    pair = [
        SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.ETDRK4, T.HIGH),
        SolverPlan(M.FINITE_DIFFERENCE, "weno3", I.RK3, T.HIGH),
    ]
    slate = select_top_k(spec, pair, 2)
    assert [p.score for p in slate.selected] == [85, 85]
    assert slate.selected[0].variant == "weno3"


def test_top_k_with_small_k():
    spec = advection2d()
    slate = select_top_k(spec, generate_plans(spec, 10), 2)
    assert len(slate.selected) == 2
    assert len(slate.scored) == 10


def test_k_larger_than_survivors_returns_all():
    spec = poisson2d()
    slate = select_top_k(spec, generate_plans(spec, 3), 50)
    assert len(slate.selected) == 3


def test_tier_grid_shapes():
    adv = advection2d()
    assert plan_grid(adv, SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.MEDIUM)).shape == (128, 128)
    assert plan_grid(heat1d(), SolverPlan(M.FINITE_DIFFERENCE, "central", I.CRANK_NICOLSON, T.HIGH)).shape == (1024,)
    cheb = plan_grid(poisson2d(), SolverPlan(M.CHEBYSHEV_SPECTRAL, "collocation", I.NONE, T.HIGH))
    assert cheb.shape == (64, 64) and cheb.kind == "chebyshev"
    coarse = plan_grid(adv, SolverPlan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.MEDIUM), coarse_factor=4)
    assert coarse.shape == (32, 32)


# -- evaluate-then-select -----------------------------------------------------------


def _outcome(plan_id_bits, err, wall, verified=True):
    method, variant, integ, tier = plan_id_bits
    return CandidateOutcome(
        plan=SolverPlan(method, variant, integ, tier, score=0),
        error=err, wall_time=wall, verified=verified,
    )


def published_outcomes():
    return [
        _outcome((M.FOURIER_SPECTRAL, "spectral", I.RK4, T.HIGH), 1.75e-3, 23.8),
        _outcome((M.FINITE_DIFFERENCE, "weno3", I.RK3, T.HIGH), 3.18e4, 57.5),
        _outcome((M.FOURIER_SPECTRAL, "spectral", I.ETDRK4, T.MEDIUM), 8.02e-15, 35.3),
        _outcome((M.FINITE_VOLUME, "muscl", I.RK2, T.MEDIUM), 1.94e-1, 33.2),
        _outcome((M.FINITE_DIFFERENCE, "semi_lagrangian", I.SEMI_LAGRANGIAN, T.MEDIUM), 2.27e-2, 15.8),
    ]


def test_measured_error_overrides_planner_score():
    chosen = final_select(published_outcomes())
    assert chosen.plan.time_integrator == I.ETDRK4
    assert chosen.error == pytest.approx(8.02e-15)


def test_near_tie_resolved_by_wall_time():
    fast = _outcome((M.FOURIER_SPECTRAL, "spectral", I.RK4, T.HIGH), 1.0e-12, 2.0)
    slow = _outcome((M.FOURIER_SPECTRAL, "spectral", I.ETDRK4, T.MEDIUM), 1.0e-12 + 2e-16, 9.0)
    assert final_select([slow, fast]).wall_time == 2.0


def test_all_failed_raises():
    bad = [_outcome((M.FOURIER_SPECTRAL, "spectral", I.RK4, T.HIGH), None, 1.0, verified=False)]
    with pytest.raises(AllCandidatesFailedError):
        final_select(bad)


def test_unverified_candidates_never_chosen():
    outs = published_outcomes()
    liar = _outcome((M.FINITE_VOLUME, "upwind", I.FORWARD_EULER, T.LOW), 1e-30, 0.1, verified=False)
    assert final_select(outs + [liar]).plan.time_integrator == I.ETDRK4


@settings(max_examples=60, deadline=None)
@given(
    errs=st.lists(st.floats(min_value=1e-16, max_value=1e3), min_size=2, max_size=6),
    idx=st.integers(min_value=0, max_value=5),
    shrink=st.floats(min_value=1e-4, max_value=0.5),
)
def test_final_select_monotone(errs, idx, shrink):
    tiers = [T.LOW, T.MEDIUM, T.HIGH]
    outs = [
        _outcome((M.FOURIER_SPECTRAL, f"v{i}", I.RK4, tiers[i % 3]), e, float(i + 1))
        for i, e in enumerate(errs)
    ]
    idx = idx % len(outs)
    # improving one candidate's error can only promote it
    better = outs[:]
    target_err = min(o.error for o in outs) * shrink
    better[idx] = CandidateOutcome(
        plan=outs[idx].plan, error=target_err, wall_time=outs[idx].wall_time, verified=True
    )
    chosen = final_select(better)
    assert chosen.error <= target_err + 1e-15
    if target_err < min(e for i, e in enumerate(errs) if i != idx) - 1e-15:
        assert chosen.plan.plan_id == outs[idx].plan.plan_id
