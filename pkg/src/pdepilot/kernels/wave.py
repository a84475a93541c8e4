"""Second-order-in-time bounded problems: Chebyshev collocation in space,
RK4 on the first-order system (u, u_t), Dirichlet values pinned each stage."""

from __future__ import annotations

import numpy as np
import sympy as sp

from ..errors import UnsupportedOperatorError
from ..expr import Expression
from ..grids import Grid
from ..problem import BcKind, ProblemSpec
from .chebyshev import _boundary_mask, _term_matrix
from .common import march, plan_steps, relative_diff


def solve_bounded_explicit(spec: ProblemSpec, grid: Grid, *, dt: float, horizon: float,
                           stride: int = 1):
    if grid.kind != "chebyshev":
        raise UnsupportedOperatorError("bounded explicit kernel needs a Chebyshev grid")
    if len(spec.pde.unknowns) != 1:
        raise UnsupportedOperatorError("single-field problems only")
    if any(bc.kind != BcKind.DIRICHLET for bc in spec.boundary):
        raise UnsupportedOperatorError("only Dirichlet faces supported")
    field = spec.pde.unknowns[0]
    pde = spec.pde

    c0 = None
    n_total = int(np.prod(grid.shape))
    op = np.zeros((n_total, n_total))
    coords = grid.coords()
    for term in pde.terms:
        if term.time_order == 2:
            if any(term.spatial_orders(grid.dim)) or not term.coeff.is_constant:
                raise UnsupportedOperatorError("needs a plain second-order time term")
            c0 = term.coeff.constant_value
            continue
        if term.time_order or term.nonlinearity is not None:
            raise UnsupportedOperatorError("only u_tt plus linear spatial terms supported")
        mat = _term_matrix(grid, term.spatial_orders(grid.dim))
        if term.coeff.is_constant:
            op += term.coeff.constant_value * mat
        else:
            c = term.coeff.eval_on(coords, broadcast_shape=grid.shape)
            op += c.ravel()[:, None] * mat
    if c0 is None:
        raise UnsupportedOperatorError("no second-order time term found")

    b_idx = np.flatnonzero(_boundary_mask(grid).ravel())
    bc_rows = []  # (flat indices, value expr, d/dt expr)
    t_sym = sp.Symbol("t")
    for bc in spec.boundary:
        sl = [slice(None)] * grid.dim
        sl[bc.axis] = 0 if bc.side == "low" else grid.axes[bc.axis].n - 1
        mask = np.zeros(grid.shape, dtype=bool)
        mask[tuple(sl)] = True
        dval = Expression(sp.sstr(sp.diff(bc.value.sympy_expr, t_sym)))
        bc_rows.append((np.flatnonzero(mask.ravel()), bc.value, dval))

    def pin(u, v, t):
        for idx, val, dval in bc_rows:
            vals = val.eval_on({**coords, "t": t}, broadcast_shape=grid.shape).ravel()
            dvals = dval.eval_on({**coords, "t": t}, broadcast_shape=grid.shape).ravel()
            u[idx] = vals[idx]
            v[idx] = dvals[idx]
        return u, v

    def source_vec(t):
        return pde.source[0].eval_on({**coords, "t": t}, broadcast_shape=grid.shape).ravel()

    def accel(u, t):
        a = (source_vec(t) - op @ u) / c0
        a[b_idx] = 0.0  # boundary trajectory is prescribed, not integrated
        return a

    init = spec.initial or {}
    u0 = init[field].eval_on({**coords, "t": 0.0}, broadcast_shape=grid.shape).ravel().copy()
    vel_key = f"{field}_t"
    if vel_key in init:
        v0 = init[vel_key].eval_on({**coords, "t": 0.0}, broadcast_shape=grid.shape).ravel().copy()
    else:
        v0 = np.zeros(n_total)
    u0, v0 = pin(u0, v0, 0.0)

    steps, dt = plan_steps(horizon, dt)

    def step(state, t, _n):
        u, v = state

        def deriv(uu, vv, tt):
            return vv, accel(uu, tt)

        k1u, k1v = deriv(u, v, t)
        k2u, k2v = deriv(u + dt / 2 * k1u, v + dt / 2 * k1v, t + dt / 2)
        k3u, k3v = deriv(u + dt / 2 * k2u, v + dt / 2 * k2v, t + dt / 2)
        k4u, k4v = deriv(u + dt * k3u, v + dt * k3v, t + dt)
        un = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        vn = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        return pin(un, vn, t + dt)

    fields, times = march(
        (u0, v0), step, lambda s: {field: s[0].reshape(grid.shape)}, steps, dt, stride
    )
    u_fin = fields[field][-1].ravel()
    a = accel(u_fin, times[-1])
    b = np.zeros_like(a)
    interior = np.setdiff1d(np.arange(n_total), b_idx)
    b[interior] = ((source_vec(times[-1]) - op @ u_fin) / c0)[interior]
    meta = {"self_residual": relative_diff(a, b), "scheme": "chebyshev_rk4"}
    return fields, times, meta
