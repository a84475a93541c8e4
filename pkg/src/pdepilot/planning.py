"""Candidate scheme generation, feature extraction, filtering, scoring, ranking.

The slate builder proposes (method, variant, integrator, tier) combinations
from a compatibility table keyed by coarse problem features.  Scores come
from an additive rubric (method/problem base + accuracy band + tier bonus
- stability/cost penalties).  After execution, final_select re-ranks purely
by measured error: planner scores never override evidence.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import AllCandidatesFailedError, NoCompatiblePlanError
from .grids import Grid
from .problem import (
    BcKind,
    Linearity,
    ProblemClass,
    ProblemSpec,
    Stiffness,
    TypeClass,
    classify_problem,
)


class SpatialMethod(str, Enum):
    FOURIER_SPECTRAL = "fourier_spectral"
    CHEBYSHEV_SPECTRAL = "chebyshev_spectral"
    FINITE_DIFFERENCE = "finite_difference"
    FINITE_VOLUME = "finite_volume"
    FINITE_ELEMENT = "finite_element"


class TimeIntegrator(str, Enum):
    NONE = "none"
    FORWARD_EULER = "forward_euler"
    RK2 = "rk2"
    RK3 = "rk3"
    RK4 = "rk4"
    CRANK_NICOLSON = "crank_nicolson"
    BACKWARD_EULER = "backward_euler"
    IMEX = "imex"
    ETDRK4 = "etdrk4"
    SPLIT_STEP = "split_step"
    SEMI_LAGRANGIAN = "semi_lagrangian"


class ResolutionTier(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


EXPLICIT_INTEGRATORS = frozenset(
    {TimeIntegrator.FORWARD_EULER, TimeIntegrator.RK2, TimeIntegrator.RK3, TimeIntegrator.RK4}
)
IMPLICIT_INTEGRATORS = frozenset(
    {TimeIntegrator.CRANK_NICOLSON, TimeIntegrator.BACKWARD_EULER, TimeIntegrator.IMEX}
)

_TIER_RANK = {ResolutionTier.LOW: 0, ResolutionTier.MEDIUM: 1, ResolutionTier.HIGH: 2}

# per-axis point counts by tier
_TIER_POINTS = {ResolutionTier.LOW: 32, ResolutionTier.MEDIUM: 128, ResolutionTier.HIGH: 256}
_TIER_POINTS_1D = {ResolutionTier.LOW: 64, ResolutionTier.MEDIUM: 256, ResolutionTier.HIGH: 1024}
_TIER_POINTS_CHEB = {ResolutionTier.LOW: 24, ResolutionTier.MEDIUM: 48, ResolutionTier.HIGH: 64}

CFL_TARGET = 0.4
IMPLICIT_STEP_COUNT = 200
_RK_STABILITY_SPAN = 2.8  # |z| reach of the RK4 stability region on the axes


@dataclass(frozen=True)
class SolverPlan:
    spatial_method: SpatialMethod
    variant: str
    time_integrator: TimeIntegrator
    resolution_tier: ResolutionTier
    score: int | None = None
    rationale: str = ""
    hard_flags: tuple[str, ...] = ()

    @property
    def plan_id(self) -> str:
        return (
            f"{self.spatial_method.value}:{self.variant}:"
            f"{self.time_integrator.value}:{self.resolution_tier.value}"
        )

    def describe(self) -> dict:
        return {
            "plan_id": self.plan_id,
            "method": self.spatial_method.value,
            "variant": self.variant,
            "integrator": self.time_integrator.value,
            "tier": self.resolution_tier.value,
            "score": self.score,
            "rationale": self.rationale,
            "hard_flags": list(self.hard_flags),
        }

    @classmethod
    def from_description(cls, d: dict) -> "SolverPlan":
        score = d.get("score")
        return cls(
            SpatialMethod(d.get("method") or d["spatial_method"]),
            str(d.get("variant", "")),
            TimeIntegrator(d.get("integrator") or d.get("time_integrator", "none")),
            ResolutionTier(d.get("tier") or d.get("resolution_tier", "medium")),
            score=int(score) if score is not None else None,
            rationale=str(d.get("rationale", "")),
            hard_flags=tuple(d.get("hard_flags", ())),
        )


@dataclass(frozen=True)
class FeatureVector:
    problem: ProblemClass
    plan: SolverPlan
    explicit: bool
    upwinded: bool
    spectral: bool
    order_estimate: int  # 9 stands in for "spectral" accuracy
    cfl_estimate: float | None
    cost_class: int
    diffusive: bool
    dispersive_pair: bool
    max_spatial_order: int
    time_order: int

    def describe(self) -> dict:
        return {
            "plan_id": self.plan.plan_id,
            "explicit": self.explicit,
            "upwinded": self.upwinded,
            "spectral": self.spectral,
            "order_estimate": self.order_estimate,
            "cfl_estimate": self.cfl_estimate,
            "cost_class": self.cost_class,
            "diffusive": self.diffusive,
            "dispersive_pair": self.dispersive_pair,
            "max_spatial_order": self.max_spatial_order,
            "time_order": self.time_order,
        }


@dataclass(frozen=True)
class RankedSlate:
    selected: tuple[SolverPlan, ...]
    rejected: tuple[tuple[SolverPlan, str], ...]
    scored: tuple[SolverPlan, ...] = ()

    def describe(self) -> list[dict]:
        rows = [p.describe() | {"rejected": None} for p in self.scored or self.selected]
        rows += [p.describe() | {"rejected": why} for p, why in self.rejected]
        return rows


# -- tier tables ----------------------------------------------------------------


def tier_points(tier: ResolutionTier, dim: int, method: SpatialMethod) -> int:
    if method == SpatialMethod.CHEBYSHEV_SPECTRAL:
        return _TIER_POINTS_CHEB[tier]
    return (_TIER_POINTS_1D if dim == 1 else _TIER_POINTS)[tier]


def plan_grid(spec: ProblemSpec, plan: SolverPlan, coarse_factor: int = 1) -> Grid:
    """Grid for a plan at its tier; coarse_factor > 1 shrinks every axis."""
    dim = spec.domain.dim
    n = tier_points(plan.resolution_tier, dim, plan.spatial_method)
    n = max(16, n // coarse_factor)
    shape = [n] * dim
    if plan.spatial_method == SpatialMethod.CHEBYSHEV_SPECTRAL:
        return Grid.chebyshev(spec.domain.bounds, shape)
    periodic = [spec.periodic] * dim
    return Grid.uniform(spec.domain.bounds, shape, periodic)


def wave_speed_estimate(spec: ProblemSpec) -> float:
    """Crude max signal speed: first-order term coefficients (sampled), scaled
    by the initial-data magnitude for nonlinear fluxes; sqrt for second-order
    time operators."""
    dim = spec.domain.dim
    pde = spec.pde
    time_order = pde.max_time_order()
    if time_order == 0:
        return 0.0
    c0 = 1.0
    for t in pde.terms:
        if t.time_order == time_order and sum(t.spatial_orders(dim)) == 0:
            if t.coeff.is_constant:
                c0 = abs(t.coeff.constant_value) or 1.0
            break
    probe = Grid.uniform(spec.domain.bounds, [17] * dim, [True] * dim)
    coords = probe.coords(t=0.0)
    u0_max = 1.0
    if spec.initial:
        u0_max = max(
            float(np.max(np.abs(expr.eval_on(coords, probe.shape))))
            for expr in spec.initial.values()
        ) or 1.0

    speed = 0.0
    curvature = 0.0
    for t in pde.terms:
        if t.time_order:
            continue
        orders = t.spatial_orders(dim)
        total = sum(orders)
        cmax = float(np.max(np.abs(t.coeff.eval_on(coords, probe.shape))))
        if t.nonlinearity is not None:
            cmax *= u0_max
        if total == 1:
            speed += cmax / c0
        elif total >= 2 and time_order >= 2:
            curvature = max(curvature, cmax / c0)
    return max(speed, np.sqrt(curvature))


def plan_dt(spec: ProblemSpec, plan: SolverPlan, grid: Grid) -> float:
    if spec.domain.steady or plan.time_integrator == TimeIntegrator.NONE:
        return 0.0
    horizon = spec.domain.time_horizon or 0.0
    if plan.time_integrator in IMPLICIT_INTEGRATORS:
        return horizon / IMPLICIT_STEP_COUNT
    dx = min(ax.dx for ax in grid.axes)
    speed = wave_speed_estimate(spec)
    dt = 0.5 * dx
    if speed > 0:
        dt = min(dt, CFL_TARGET * dx / speed)
    return min(dt, horizon) if horizon else dt


# -- feature extraction ----------------------------------------------------------

_UPWINDED_VARIANTS = frozenset({"weno3", "muscl", "upwind", "semi_lagrangian"})


def _order_estimate(plan: SolverPlan) -> int:
    if plan.spatial_method in (SpatialMethod.FOURIER_SPECTRAL, SpatialMethod.CHEBYSHEV_SPECTRAL):
        return 9
    if plan.variant == "weno3":
        return 3
    if plan.variant == "upwind" or plan.time_integrator in (
        TimeIntegrator.FORWARD_EULER,
        TimeIntegrator.BACKWARD_EULER,
    ):
        return 1
    return 2


def extract_features(spec: ProblemSpec, plan: SolverPlan) -> FeatureVector:
    problem = classify_problem(spec)
    dim = spec.domain.dim
    pde = spec.pde
    explicit = plan.time_integrator in EXPLICIT_INTEGRATORS
    spectral = plan.spatial_method in (
        SpatialMethod.FOURIER_SPECTRAL,
        SpatialMethod.CHEBYSHEV_SPECTRAL,
    )
    time_order = pde.max_time_order()
    max_order = pde.max_spatial_order(dim)

    cfl = None
    if explicit and not problem.steady:
        grid = plan_grid(spec, plan)
        dx = min(ax.dx for ax in grid.axes)
        dt = plan_dt(spec, plan, grid)
        speed = wave_speed_estimate(spec)
        cfl = speed * dt / dx
        if time_order == 1:
            # stiff operators blow the explicit budget: add their stability load
            coords = grid.coords(t=0.0)
            for t in pde.terms:
                if t.time_order:
                    continue
                m = sum(t.spatial_orders(dim))
                if m >= 2:
                    cmax = float(np.max(np.abs(t.coeff.eval_on(coords, grid.shape))))
                    cfl += cmax * dt * (np.pi / dx) ** m / _RK_STABILITY_SPAN

    cost = 2 * _TIER_RANK[plan.resolution_tier]
    if plan.time_integrator in IMPLICIT_INTEGRATORS or plan.time_integrator == TimeIntegrator.ETDRK4:
        cost += 1

    return FeatureVector(
        problem=problem,
        plan=plan,
        explicit=explicit,
        upwinded=plan.variant in _UPWINDED_VARIANTS,
        spectral=spectral,
        order_estimate=_order_estimate(plan),
        cfl_estimate=cfl,
        cost_class=cost,
        diffusive=pde.diffusion_like(dim),
        dispersive_pair=pde.type_class == TypeClass.DISPERSIVE and len(pde.unknowns) == 2,
        max_spatial_order=max_order,
        time_order=time_order,
    )


# -- slate generation -------------------------------------------------------------


def _plan(method, variant, integrator, tier) -> SolverPlan:
    return SolverPlan(method, variant, integrator, tier)


def _periodic_marching_slate(spec: ProblemSpec, problem: ProblemClass) -> list[SolverPlan]:
    M, I, T = SpatialMethod, TimeIntegrator, ResolutionTier
    dim = spec.domain.dim
    pde = spec.pde
    flux_form = (
        pde.max_spatial_order(dim) == 1
        and pde.max_time_order() == 1
        and pde.n_equations == 1
    )
    pure_advection = flux_form and problem.linearity == Linearity.LINEAR
    diffusive = pde.diffusion_like(dim)
    dispersive_pair = pde.type_class == TypeClass.DISPERSIVE and len(pde.unknowns) == 2

    out = [_plan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.HIGH)]
    if flux_form:
        out.append(_plan(M.FINITE_DIFFERENCE, "weno3", I.RK3, T.HIGH))
    if dispersive_pair:
        out.append(_plan(M.FOURIER_SPECTRAL, "spectral", I.SPLIT_STEP, T.MEDIUM))
    out.append(_plan(M.FOURIER_SPECTRAL, "spectral", I.ETDRK4, T.MEDIUM))
    if diffusive:
        out.append(_plan(M.FOURIER_SPECTRAL, "spectral", I.IMEX, T.MEDIUM))
    if flux_form:
        out.append(_plan(M.FINITE_VOLUME, "muscl", I.RK2, T.MEDIUM))
    if pure_advection:
        out.append(_plan(M.FINITE_DIFFERENCE, "semi_lagrangian", I.SEMI_LAGRANGIAN, T.MEDIUM))
    out.append(_plan(M.FINITE_ELEMENT, "galerkin_p1", I.IMEX, T.MEDIUM))
    if flux_form:
        out.append(_plan(M.FINITE_DIFFERENCE, "upwind", I.FORWARD_EULER, T.LOW))
    out.append(_plan(M.FINITE_DIFFERENCE, "central", I.CRANK_NICOLSON, T.MEDIUM))
    if flux_form:
        out.append(_plan(M.FINITE_VOLUME, "upwind", I.FORWARD_EULER, T.LOW))
    out.append(_plan(M.FINITE_ELEMENT, "galerkin_p1", I.BACKWARD_EULER, T.MEDIUM))
    # spares, used when the table above came up short of n
    out.append(_plan(M.FOURIER_SPECTRAL, "spectral", I.ETDRK4, T.HIGH))
    out.append(_plan(M.FOURIER_SPECTRAL, "spectral", I.RK4, T.MEDIUM))
    if diffusive:
        out.append(_plan(M.FOURIER_SPECTRAL, "spectral", I.IMEX, T.HIGH))
        out.append(_plan(M.FINITE_DIFFERENCE, "central", I.CRANK_NICOLSON, T.HIGH))
    if flux_form:
        out.append(_plan(M.FINITE_DIFFERENCE, "weno3", I.RK3, T.MEDIUM))
        out.append(_plan(M.FINITE_VOLUME, "muscl", I.RK2, T.HIGH))
    out.append(_plan(M.FINITE_ELEMENT, "galerkin_p1", I.CRANK_NICOLSON, T.MEDIUM))
    out.append(_plan(M.FOURIER_SPECTRAL, "spectral", I.ETDRK4, T.LOW))
    return out


def _elliptic_slate() -> list[SolverPlan]:
    M, I, T = SpatialMethod, TimeIntegrator, ResolutionTier
    out = []
    for tier in (T.HIGH, T.MEDIUM, T.LOW):
        out.append(_plan(M.CHEBYSHEV_SPECTRAL, "collocation", I.NONE, tier))
    for tier in (T.HIGH, T.MEDIUM, T.LOW):
        out.append(_plan(M.FINITE_ELEMENT, "galerkin_p1", I.NONE, tier))
    for tier in (T.HIGH, T.MEDIUM, T.LOW):
        out.append(_plan(M.FINITE_DIFFERENCE, "central", I.NONE, tier))
    return out


def _bounded_parabolic_slate() -> list[SolverPlan]:
    M, I, T = SpatialMethod, TimeIntegrator, ResolutionTier
    out = [
        _plan(M.FINITE_DIFFERENCE, "central", I.CRANK_NICOLSON, T.HIGH),
        _plan(M.FINITE_DIFFERENCE, "central", I.CRANK_NICOLSON, T.MEDIUM),
        _plan(M.FINITE_ELEMENT, "galerkin_p1", I.CRANK_NICOLSON, T.MEDIUM),
        _plan(M.FINITE_DIFFERENCE, "central", I.IMEX, T.MEDIUM),
        _plan(M.FINITE_DIFFERENCE, "central", I.BACKWARD_EULER, T.MEDIUM),
        _plan(M.FINITE_ELEMENT, "galerkin_p1", I.BACKWARD_EULER, T.MEDIUM),
        _plan(M.CHEBYSHEV_SPECTRAL, "collocation", I.CRANK_NICOLSON, T.MEDIUM),
        _plan(M.FINITE_DIFFERENCE, "central", I.FORWARD_EULER, T.LOW),
        _plan(M.FINITE_DIFFERENCE, "central", I.BACKWARD_EULER, T.HIGH),
        _plan(M.FINITE_ELEMENT, "galerkin_p1", I.IMEX, T.MEDIUM),
    ]
    return out


def _bounded_wave_slate() -> list[SolverPlan]:
    M, I, T = SpatialMethod, TimeIntegrator, ResolutionTier
    return [
        _plan(M.CHEBYSHEV_SPECTRAL, "collocation", I.RK4, T.MEDIUM),
        _plan(M.CHEBYSHEV_SPECTRAL, "collocation", I.RK4, T.HIGH),
        _plan(M.CHEBYSHEV_SPECTRAL, "collocation", I.RK4, T.LOW),
        _plan(M.FINITE_DIFFERENCE, "central", I.CRANK_NICOLSON, T.MEDIUM),
        _plan(M.FINITE_ELEMENT, "galerkin_p1", I.CRANK_NICOLSON, T.MEDIUM),
        _plan(M.FINITE_DIFFERENCE, "central", I.RK4, T.MEDIUM),
        _plan(M.FINITE_ELEMENT, "galerkin_p1", I.BACKWARD_EULER, T.MEDIUM),
    ]


def generate_plans(spec: ProblemSpec, n: int = 10) -> list[SolverPlan]:
    """Propose up to n distinct candidate schemes compatible with the problem."""
    problem = classify_problem(spec)
    if problem.bc_kind == BcKind.PERIODIC and not problem.steady:
        table = _periodic_marching_slate(spec, problem)
    elif problem.bc_kind == BcKind.DIRICHLET and problem.steady:
        table = _elliptic_slate()
    elif problem.bc_kind == BcKind.DIRICHLET and spec.pde.max_time_order() >= 2:
        table = _bounded_wave_slate()
    elif problem.bc_kind == BcKind.DIRICHLET:
        table = _bounded_parabolic_slate()
    else:
        raise NoCompatiblePlanError(
            f"no method family supports bc={problem.bc_kind.value} "
            f"steady={problem.steady}"
        )
    seen = set()
    out = []
    for plan in table:
        if plan.plan_id in seen:
            continue
        seen.add(plan.plan_id)
        out.append(plan)
        if len(out) == n:
            break
    return out


# -- filtering --------------------------------------------------------------------


def filter_plans(
    spec: ProblemSpec, plans: list[SolverPlan]
) -> tuple[list[tuple[SolverPlan, FeatureVector]], list[tuple[SolverPlan, str]]]:
    survivors = []
    rejected = []
    for plan in plans:
        fv = extract_features(spec, plan)
        why = _hard_reject_reason(fv)
        if why is None:
            survivors.append((plan, fv))
        else:
            rejected.append((dataclasses.replace(plan, hard_flags=(why,)), why))
    return survivors, rejected


def _hard_reject_reason(fv: FeatureVector) -> str | None:
    p = fv.problem
    plan = fv.plan
    if p.steady and plan.time_integrator != TimeIntegrator.NONE:
        return "time integrator on a steady problem"
    if not p.steady and plan.time_integrator == TimeIntegrator.NONE:
        return "marching problem needs a time integrator"
    if plan.spatial_method == SpatialMethod.FOURIER_SPECTRAL and p.bc_kind != BcKind.PERIODIC:
        return "Fourier basis requires periodic boundaries"
    if fv.explicit and fv.cfl_estimate is not None and fv.cfl_estimate > 1.0:
        return f"explicit integrator unstable: estimated CFL {fv.cfl_estimate:.3g} > 1"
    if (
        plan.time_integrator == TimeIntegrator.FORWARD_EULER
        and not fv.upwinded
        and not fv.spectral
        and fv.time_order == 1
        and not fv.diffusive
    ):
        return ("unstable: central differencing with explicit Euler on a pure "
                "transport problem (eigenvalues on the imaginary axis)")
    return None


# -- scoring ----------------------------------------------------------------------


def _base_score(fv: FeatureVector) -> int:
    p = fv.problem
    m = fv.plan.spatial_method
    M = SpatialMethod
    if p.steady:
        return {M.CHEBYSHEV_SPECTRAL: 60, M.FINITE_ELEMENT: 55, M.FINITE_DIFFERENCE: 50,
                M.FINITE_VOLUME: 35, M.FOURIER_SPECTRAL: 30}[m]
    if p.bc_kind == BcKind.DIRICHLET:
        if fv.time_order >= 2:
            return {M.CHEBYSHEV_SPECTRAL: 60, M.FINITE_DIFFERENCE: 55, M.FINITE_ELEMENT: 55,
                    M.FINITE_VOLUME: 40, M.FOURIER_SPECTRAL: 0}[m]
        return {M.FINITE_DIFFERENCE: 60, M.FINITE_ELEMENT: 58, M.CHEBYSHEV_SPECTRAL: 40,
                M.FINITE_VOLUME: 40, M.FOURIER_SPECTRAL: 0}[m]
    return {M.FOURIER_SPECTRAL: 55, M.FINITE_DIFFERENCE: 55, M.FINITE_ELEMENT: 55,
            M.FINITE_VOLUME: 50, M.CHEBYSHEV_SPECTRAL: 30}[m]


def score_plan(fv: FeatureVector) -> tuple[int, str]:
    """Additive rubric; returns (score 0..100, rationale)."""
    p = fv.problem
    plan = fv.plan
    notes = []
    score = _base_score(fv)

    if fv.spectral:
        score += 25
        notes.append("spectral accuracy")
    elif plan.variant in ("weno3", "muscl"):
        score += 20
        notes.append("high-order shock capturing")
    elif fv.order_estimate >= 2:
        score += 10
        notes.append("second order")
    else:
        notes.append("first order only")

    score += {ResolutionTier.HIGH: 10, ResolutionTier.MEDIUM: 5, ResolutionTier.LOW: 0}[
        plan.resolution_tier
    ]

    transport_like = fv.time_order >= 1 and not fv.diffusive and not p.steady
    needs_stiff = (
        p.stiffness == Stiffness.STIFF or fv.diffusive or fv.max_spatial_order >= 3
    )

    if plan.time_integrator == TimeIntegrator.ETDRK4 and not needs_stiff:
        score -= 5
        notes.append("exponential integrator cost unjustified on a nonstiff problem")
    if plan.time_integrator in IMPLICIT_INTEGRATORS and transport_like:
        score -= 10
        notes.append("implicit cost unjustified on pure transport")
    if plan.time_integrator == TimeIntegrator.BACKWARD_EULER:
        score -= 5
        notes.append("first-order dissipation")
    if (
        plan.spatial_method == SpatialMethod.FINITE_DIFFERENCE
        and plan.variant == "central"
        and transport_like
    ):
        score -= 10
        notes.append("no upwinding: oscillation risk")
    if (
        fv.explicit
        and p.stiffness == Stiffness.STIFF
        and not p.steady
    ):
        score -= 15
        notes.append("explicit stepping on a stiff operator")
    if (
        plan.time_integrator == TimeIntegrator.IMEX
        and not transport_like
        and p.linearity == Linearity.LINEAR
    ):
        score -= 3
        notes.append("splitting brings nothing on a fully linear problem")
    if (
        plan.time_integrator in (TimeIntegrator.CRANK_NICOLSON, TimeIntegrator.BACKWARD_EULER)
        and p.linearity == Linearity.NONLINEAR
        and not transport_like
    ):
        score -= 5
        notes.append("fully implicit nonlinear solves each step")

    return max(0, min(100, score)), "; ".join(notes)


# -- ranking ----------------------------------------------------------------------


def select_top_k(spec: ProblemSpec, plans: list[SolverPlan], k: int = 5) -> RankedSlate:
    survivors, rejected = filter_plans(spec, plans)
    scored = []
    for plan, fv in survivors:
        s, why = score_plan(fv)
        scored.append((dataclasses.replace(plan, score=s, rationale=why), fv))
    scored.sort(key=lambda pf: (-pf[0].score, pf[1].cost_class, pf[0].plan_id))
    ordered = tuple(p for p, _ in scored)
    return RankedSlate(
        selected=ordered[: max(0, k)],
        rejected=tuple(rejected),
        scored=ordered,
    )


@dataclass(frozen=True)
class CandidateOutcome:
    """What execution + verification produced for one plan."""

    plan: SolverPlan
    error: float | None  # primary metric; None when the run failed outright
    wall_time: float
    verified: bool
    detail: dict = field(default_factory=dict)


ERROR_TIE_WIDTH = 1e-15


def final_select(outcomes: list[CandidateOutcome]) -> CandidateOutcome:
    """Evaluate-then-select: measured error first, wall time for near-ties.

    Planner scores are never consulted here; a plan that looked mediocre on
    paper but produced the smallest verified error wins.
    """
    live = [o for o in outcomes if o.verified and o.error is not None and np.isfinite(o.error)]
    if not live:
        raise AllCandidatesFailedError(
            f"none of the {len(outcomes)} executed candidates passed verification"
        )
    best = min(o.error for o in live)
    leaders = [o for o in live if o.error <= best + ERROR_TIE_WIDTH]
    leaders.sort(key=lambda o: (o.wall_time, o.plan.plan_id))
    return leaders[0]
