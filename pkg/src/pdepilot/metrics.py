"""Error metrics and validity checks.

Three relative metrics, chosen by the reference class of the problem:

    explicit reference  ->  e_l2   = |u - u*| / (|u*| + eps)
    implicit reference  ->  e_impl = |F(u)| / (|F_ref| + eps)
    no reference        ->  e_res  = |L(u) - f| / (|f| + eps)

Norms are weighted-mean-square over the grid (RMS on uniform axes,
Clenshaw-Curtis on Chebyshev axes) and RMS across snapshots/equations.
The PDE residual is assembled with the independent operators from
:mod:`.operators`, never the solver's own discretization.

When the source term vanishes identically, |f| + eps alone would inflate
e_res by ~1e12; the denominator then falls back to the largest operator
term's own norm so the metric stays a relative quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyAggregateError,
    GridMismatchError,
    MissingRelationError,
    UnsupportedOperatorError,
)
from .grids import Grid, SolutionField, SolutionSet
from .operators import interior_mask_slices, spatial_derivative
from .problem import ProblemSpec, ReferenceClass
from .solution_io import RawSolution


@dataclass(frozen=True)
class MetricConfig:
    epsilon: float = 1e-12
    discrepancy_factor: float = 10.0     # cross-check: flag order-of-magnitude lies
    time_stencil: str = "centered2"      # or "centered4"
    max_eval_times: int = 33             # residual times subsampled to this many
    source_floor: float = 1e-8           # |f| below this x operator scale counts as zero
    cross_check_floor: float = 1e-3      # slack absorbing the probe's own discretization error

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class ValidityFlags:
    all_finite: bool = True
    residual_reported: bool = False
    dims_match: bool = True
    snapshot_count_ok: bool = True
    residual_cross_check_pass: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.all_finite
            and self.dims_match
            and self.snapshot_count_ok
            and self.residual_cross_check_pass is not False
        )


@dataclass
class ErrorReport:
    e_l2: float | None = None
    e_res: float | None = None
    e_impl: float | None = None
    validity: ValidityFlags | None = None
    notes: list = field(default_factory=list)

    @property
    def nrmse(self) -> float | None:
        """Alias of e_l2; identical under uniform weights."""
        return self.e_l2

    @property
    def primary(self) -> float | None:
        for v in (self.e_l2, self.e_impl, self.e_res):
            if v is not None:
                return v
        return None

    def as_dict(self) -> dict:
        return {
            "e_l2": self.e_l2,
            "e_res": self.e_res,
            "e_impl": self.e_impl,
            "validity": None if self.validity is None else {
                "all_finite": self.validity.all_finite,
                "residual_reported": self.validity.residual_reported,
                "dims_match": self.validity.dims_match,
                "snapshot_count_ok": self.validity.snapshot_count_ok,
                "residual_cross_check_pass": self.validity.residual_cross_check_pass,
                "notes": list(self.validity.notes),
            },
            "notes": list(self.notes),
        }


def _masked_rms(stack: np.ndarray, grid: Grid, mask) -> float:
    """Weighted RMS over the grid region selected by mask, plain RMS over leading axes."""
    w = grid.mean_weights()[mask]
    wsum = w.sum()
    flat = stack.reshape(-1, *grid.shape)[(slice(None),) + mask]
    sq = flat * flat
    return float(np.sqrt(np.mean(np.sum(sq * w, axis=tuple(range(1, sq.ndim))) / wsum)))


def relative_l2(u: SolutionField, u_star: SolutionField, cfg: MetricConfig | None = None) -> float:
    cfg = cfg or MetricConfig()
    if u.grid != u_star.grid:
        raise GridMismatchError(f"{u.name}: grids differ")
    if u.values.shape != u_star.values.shape:
        raise GridMismatchError(
            f"{u.name}: snapshot stacks {u.values.shape} vs {u_star.values.shape}"
        )
    num = u.grid.weighted_norm(u.values - u_star.values)
    den = u.grid.weighted_norm(u_star.values)
    # max, not den+eps: the guard must only engage near zero so that scaling
    # both fields by a constant leaves the ratio bit-identical
    return num / max(den, cfg.epsilon)


def relative_l2_set(sol: SolutionSet, ref: SolutionSet, cfg: MetricConfig | None = None) -> float:
    """Multi-field variant: fields stacked so the ratio matches the complex-norm convention."""
    cfg = cfg or MetricConfig()
    names = sorted(sol.fields)
    if sorted(ref.fields) != names:
        raise GridMismatchError(f"field sets differ: {names} vs {sorted(ref.fields)}")
    grid = sol.grid
    diff = np.stack([sol.fields[n].values - ref.fields[n].values for n in names])
    base = np.stack([ref.fields[n].values for n in names])
    return grid.weighted_norm(diff) / max(grid.weighted_norm(base), cfg.epsilon)


def nrmse(u: SolutionField, u_star: SolutionField, cfg: MetricConfig | None = None) -> float:
    return relative_l2(u, u_star, cfg)


def evaluate_reference(spec: ProblemSpec, grid: Grid, times) -> SolutionSet:
    """Sample the explicit reference solution on a grid at snapshot times."""
    if spec.reference.kind != ReferenceClass.EXPLICIT_ANALYTIC:
        raise MissingRelationError(f"{spec.name} has no explicit reference")
    times = np.asarray(times, dtype=float)
    fields = {}
    for name, expr in spec.reference.expressions.items():
        slabs = [expr.eval_on(grid.coords(t=float(t)), broadcast_shape=grid.shape) for t in times]
        fields[name] = SolutionField(name, np.stack(slabs), grid)
    return SolutionSet(fields, times, {})


# ---------------------------------------------------------------------------
# independent PDE residual


_TIME_STENCILS = {
    # (scheme, order) -> (offsets, coeffs, dt power)
    ("centered2", 1): ((-1, 1), (-0.5, 0.5), 1),
    ("centered2", 2): ((-1, 0, 1), (1.0, -2.0, 1.0), 2),
    ("centered4", 1): ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12), 1),
    ("centered4", 2): ((-2, -1, 0, 1, 2), (-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12), 2),
}


def _residual_rms(sol: SolutionSet, spec: ProblemSpec, cfg: MetricConfig, stride: int = 1):
    """Assemble |L(u) - f| and |f| over interior snapshot times.

    Returns (residual rms, source rms, largest term rms).
    """
    grid = sol.grid
    pde = spec.pde
    times = np.asarray(sol.times, dtype=float)[::stride]
    slabs = {name: f.values[::stride] for name, f in sol.fields.items()}
    for name in pde.unknowns:
        if name not in slabs:
            raise UnsupportedOperatorError(f"solution lacks field {name!r}")
    n = len(times)
    steady = pde.max_time_order() == 0

    if steady:
        scheme, margin = None, 0
        interior = np.arange(n)
    else:
        scheme = cfg.time_stencil
        if scheme == "centered4" and n < 5:
            scheme = "centered2"
        margin = 2 if scheme == "centered4" else 1
        if n < 2 * margin + 1:
            raise UnsupportedOperatorError(
                f"need >= {2 * margin + 1} snapshots for time derivatives, have {n}"
            )
        dt = np.diff(times)
        if not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-12):
            raise UnsupportedOperatorError("snapshot times must be uniformly spaced")
        interior = np.arange(margin, n - margin)
    if len(interior) > cfg.max_eval_times:
        pick = np.round(np.linspace(0, len(interior) - 1, cfg.max_eval_times)).astype(int)
        interior = interior[np.unique(pick)]

    h = float(times[1] - times[0]) if n > 1 else 1.0
    mask = interior_mask_slices(grid)
    cache: dict = {}
    coords0 = grid.coords()
    n_eq = pde.n_equations
    total = np.zeros((n_eq, len(interior)) + grid.shape)
    max_term = 0.0

    for term in pde.terms:
        t_order = term.time_order
        s_orders = term.spatial_orders(grid.dim)
        if t_order:
            if steady:
                raise UnsupportedOperatorError("time-derivative term on a steady problem")
            offsets, coeffs, power = _TIME_STENCILS[(scheme, t_order)]
        else:
            offsets, coeffs, power = (0,), (1.0,), 0
        needed = sorted({int(i) + o for i in interior for o in offsets})
        pos = {j: p for p, j in enumerate(needed)}
        base = slabs[term.field][needed]
        if any(s_orders):
            base = spatial_derivative(base, s_orders, grid, cache=cache)
        combined = np.zeros((len(interior),) + grid.shape)
        for off, c in zip(offsets, coeffs):
            rows = np.array([pos[int(i) + off] for i in interior])
            combined += c * base[rows]
        if power:
            combined /= h**power
        for j, i in enumerate(interior):
            t_i = float(times[i])
            factor = term.coeff.eval_on({**coords0, "t": t_i}, broadcast_shape=grid.shape)
            if term.nonlinearity is not None:
                env = {**coords0, "t": t_i}
                env.update({name: slabs[name][i] for name in pde.unknowns})
                factor = factor * term.nonlinearity.eval_on(env, broadcast_shape=grid.shape)
            combined[j] = combined[j] * factor
        max_term = max(max_term, _masked_rms(combined, grid, mask))
        total[term.equation] += combined

    source = np.zeros_like(total)
    for eq in range(n_eq):
        expr = pde.source[eq]
        for j, i in enumerate(interior):
            source[eq, j] = expr.eval_on(
                {**coords0, "t": float(times[i])}, broadcast_shape=grid.shape
            )

    res_rms = _masked_rms(total - source, grid, mask)
    src_rms = _masked_rms(source, grid, mask)
    return res_rms, src_rms, max_term


def _finish_residual(res: float, src: float, scale: float, cfg: MetricConfig) -> float:
    den = src if src > cfg.source_floor * max(scale, 1.0) else scale
    return res / (den + cfg.epsilon)


def residual_relative(sol: SolutionSet, spec: ProblemSpec, cfg: MetricConfig | None = None,
                      stride: int = 1) -> float:
    cfg = cfg or MetricConfig()
    res, src, scale = _residual_rms(sol, spec, cfg, stride)
    return _finish_residual(res, src, scale, cfg)


def analytic_residual(spec: ProblemSpec, grid: Grid, times=None,
                      cfg: MetricConfig | None = None) -> float:
    """Residual of the explicit reference itself, with exact time derivatives.

    Time derivatives come from symbolic differentiation of the reference
    expression, so only the spatial probe contributes error.  This is the
    self-consistency gate run over the problem corpus: a disagreement means
    the problem document itself is inconsistent.
    """
    import sympy as sp

    from .expr import Expression

    cfg = cfg or MetricConfig()
    if spec.reference.kind != ReferenceClass.EXPLICIT_ANALYTIC:
        raise MissingRelationError(f"{spec.name} has no explicit reference")
    pde = spec.pde
    if times is None:
        if spec.domain.time_horizon:
            lo = spec.domain.time_horizon * 0.02
            times = np.linspace(lo, spec.domain.time_horizon, min(cfg.max_eval_times, 16))
        else:
            times = np.array([0.0])
    times = np.asarray(times, dtype=float)

    t_sym = sp.Symbol("t")
    dcache: dict = {}

    def ref_time_deriv(name: str, order: int) -> Expression:
        if (name, order) not in dcache:
            base = spec.reference.expressions[name]
            if order == 0:
                dcache[(name, order)] = base
            else:
                dsym = sp.diff(base.sympy_expr, t_sym, order)
                dcache[(name, order)] = Expression(sp.sstr(dsym))
        return dcache[(name, order)]

    mask = interior_mask_slices(grid)
    coords0 = grid.coords()
    cache: dict = {}
    n_eq = pde.n_equations
    total = np.zeros((n_eq, len(times)) + grid.shape)
    max_term = 0.0

    ref_vals = {
        name: np.stack([
            expr.eval_on({**coords0, "t": float(t)}, broadcast_shape=grid.shape)
            for t in times
        ])
        for name, expr in spec.reference.expressions.items()
    }

    for term in pde.terms:
        expr = ref_time_deriv(term.field, term.time_order)
        slab = np.stack([
            expr.eval_on({**coords0, "t": float(t)}, broadcast_shape=grid.shape)
            for t in times
        ])
        s_orders = term.spatial_orders(grid.dim)
        if any(s_orders):
            slab = spatial_derivative(slab, s_orders, grid, cache=cache)
        for j, t in enumerate(times):
            factor = term.coeff.eval_on({**coords0, "t": float(t)}, broadcast_shape=grid.shape)
            if term.nonlinearity is not None:
                env = {**coords0, "t": float(t)}
                env.update({name: ref_vals[name][j] for name in pde.unknowns})
                factor = factor * term.nonlinearity.eval_on(env, broadcast_shape=grid.shape)
            slab[j] = slab[j] * factor
        max_term = max(max_term, _masked_rms(slab, grid, mask))
        total[term.equation] += slab

    source = np.zeros_like(total)
    for eq in range(n_eq):
        for j, t in enumerate(times):
            source[eq, j] = pde.source[eq].eval_on(
                {**coords0, "t": float(t)}, broadcast_shape=grid.shape
            )
    res = _masked_rms(total - source, grid, mask)
    src = _masked_rms(source, grid, mask)
    return _finish_residual(res, src, max_term, cfg)


def implicit_residual(sol: SolutionSet, spec: ProblemSpec, cfg: MetricConfig | None = None) -> float:
    cfg = cfg or MetricConfig()
    if spec.reference.relation is None:
        raise MissingRelationError(f"{spec.name} declares no implicit relation")
    grid = sol.grid
    coords0 = grid.coords()

    def sample(expr):
        out = []
        for i, t in enumerate(np.asarray(sol.times, dtype=float)):
            env = {**coords0, "t": float(t)}
            env.update({name: f.values[i] for name, f in sol.fields.items()})
            out.append(expr.eval_on(env, broadcast_shape=grid.shape))
        return np.stack(out)

    num = grid.weighted_norm(sample(spec.reference.relation))
    den = grid.weighted_norm(sample(spec.reference.reference_magnitude))
    return num / (den + cfg.epsilon)


def aggregate_geomean(values) -> float:
    vals = [float(v) for v in values if v is not None and math.isfinite(v)]
    if not vals:
        raise EmptyAggregateError("no finite metrics to aggregate")
    if any(v < 0 for v in vals):
        raise EmptyAggregateError("metrics must be >= 0")
    floor = 1e-300
    return float(math.exp(sum(math.log(max(v, floor)) for v in vals) / len(vals)))


def validity_check(
    raw: RawSolution,
    expected_shape=None,
    snapshot_cap: int = 400,
    spec: ProblemSpec | None = None,
    grid: Grid | None = None,
    cfg: MetricConfig | None = None,
) -> ValidityFlags:
    """Flags on a decoded solution file; never raises on bad content."""
    cfg = cfg or MetricConfig()
    flags = ValidityFlags()

    finite = all(np.all(np.isfinite(v)) for v in raw.fields.values())
    finite = finite and bool(np.all(np.isfinite(raw.times)))
    flags.all_finite = bool(finite)
    if not finite:
        flags.notes.append("non-finite values in solution")

    self_res = raw.meta.get("self_residual")
    ok = isinstance(self_res, (int, float)) and math.isfinite(self_res) and self_res >= 0
    flags.residual_reported = bool(ok)
    if not ok:
        flags.notes.append("self_residual missing or invalid")

    if expected_shape is not None:
        expected_shape = tuple(expected_shape)
        for name, v in raw.fields.items():
            if tuple(v.shape[1:]) != expected_shape:
                flags.dims_match = False
                flags.notes.append(f"{name}: shape {v.shape[1:]} != requested {expected_shape}")
    if len(raw.times) > snapshot_cap:
        flags.snapshot_count_ok = False
        flags.notes.append(f"{len(raw.times)} snapshots exceed cap {snapshot_cap}")

    if spec is not None and grid is not None and flags.all_finite and flags.residual_reported:
        from .solution_io import attach_grid

        try:
            sol = attach_grid(raw, grid)
            independent = residual_relative(sol, spec, cfg, stride=1)
            floor = 0.0
            if spec.time_dependent and len(raw.times) >= 5:
                coarser = residual_relative(sol, spec, cfg, stride=2)
                floor = abs(coarser - independent) / 3.0  # 2nd-order-in-time extrapolation gap
            bound = cfg.discrepancy_factor * (float(self_res) + floor + cfg.cross_check_floor)
            flags.residual_cross_check_pass = bool(independent <= bound)
            if not flags.residual_cross_check_pass:
                flags.notes.append(
                    f"independent residual {independent:.3e} exceeds {bound:.3e} "
                    f"(self={float(self_res):.3e})"
                )
        except UnsupportedOperatorError as exc:
            flags.residual_cross_check_pass = None
            flags.notes.append(f"cross-check skipped: {exc}")
    return flags


def build_error_report(
    sol: SolutionSet,
    spec: ProblemSpec,
    cfg: MetricConfig | None = None,
    validity: ValidityFlags | None = None,
) -> ErrorReport:
    """Populate the metric matching the problem's reference class."""
    cfg = cfg or MetricConfig()
    report = ErrorReport(validity=validity)
    kind = spec.reference.kind
    if kind == ReferenceClass.EXPLICIT_ANALYTIC:
        ref = evaluate_reference(spec, sol.grid, sol.times)
        report.e_l2 = relative_l2_set(sol, ref, cfg)
    elif kind == ReferenceClass.IMPLICIT_ANALYTIC:
        report.e_impl = implicit_residual(sol, spec, cfg)
    else:
        report.e_res = residual_relative(sol, spec, cfg)
    return report
