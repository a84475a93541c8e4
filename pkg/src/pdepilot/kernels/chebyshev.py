"""Chebyshev collocation for steady boundary-value problems (1D/2D dense)."""

from __future__ import annotations

import numpy as np

from ..errors import SingularSystemError, UnsupportedOperatorError
from ..grids import Grid
from ..problem import BcKind, ProblemSpec
from ..operators import cheb_diff_matrix

MAX_POINTS_PER_AXIS = 64


def _term_matrix(grid: Grid, orders) -> np.ndarray:
    mats = []
    for a, ax in enumerate(grid.axes):
        if orders[a] == 0:
            mats.append(np.eye(ax.n))
        else:
            mats.append(cheb_diff_matrix(ax.n, ax.lo, ax.hi, orders[a]))
    m = mats[0]
    for nxt in mats[1:]:
        m = np.kron(m, nxt)
    return m


def _boundary_mask(grid: Grid) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for a, ax in enumerate(grid.axes):
        sl = [slice(None)] * grid.dim
        sl[a] = 0
        mask[tuple(sl)] = True
        sl[a] = ax.n - 1
        mask[tuple(sl)] = True
    return mask


def solve_elliptic(spec: ProblemSpec, grid: Grid):
    if grid.kind != "chebyshev":
        raise UnsupportedOperatorError("collocation kernel needs a Chebyshev grid")
    if grid.dim > 2:
        raise UnsupportedOperatorError("dense collocation capped at 2 dimensions")
    if any(ax.n > MAX_POINTS_PER_AXIS for ax in grid.axes):
        raise UnsupportedOperatorError(
            f"collocation capped at {MAX_POINTS_PER_AXIS} points per axis"
        )
    if len(spec.pde.unknowns) != 1:
        raise UnsupportedOperatorError("collocation kernel is single-field")
    if any(bc.kind != BcKind.DIRICHLET for bc in spec.boundary):
        raise UnsupportedOperatorError("only Dirichlet faces supported")
    coords = grid.coords()

    n_total = int(np.prod(grid.shape))
    op = np.zeros((n_total, n_total))
    for term in spec.pde.terms:
        if term.time_order or term.nonlinearity is not None:
            raise UnsupportedOperatorError("steady linear problems only")
        mat = _term_matrix(grid, term.spatial_orders(grid.dim))
        if term.coeff.is_constant:
            op += term.coeff.constant_value * mat
        else:
            c = term.coeff.eval_on(coords, broadcast_shape=grid.shape)
            op += c.ravel()[:, None] * mat

    rhs = spec.pde.source[0].eval_on(coords, broadcast_shape=grid.shape).ravel().copy()
    bmask = _boundary_mask(grid)
    bvals = np.zeros(grid.shape)
    for bc in spec.boundary:
        sl = [slice(None)] * grid.dim
        sl[bc.axis] = 0 if bc.side == "low" else grid.axes[bc.axis].n - 1
        vals = bc.value.eval_on({**coords, "t": 0.0}, broadcast_shape=grid.shape)
        bvals[tuple(sl)] = np.broadcast_to(vals, grid.shape)[tuple(sl)]
    b_idx = np.flatnonzero(bmask.ravel())
    op[b_idx, :] = 0.0
    op[b_idx, b_idx] = 1.0
    rhs[b_idx] = bvals.ravel()[b_idx]

    try:
        u = np.linalg.solve(op, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"collocation system singular: {exc}") from None
    self_res = float(np.linalg.norm(op @ u - rhs) / (np.linalg.norm(rhs) + 1e-300))
    field = spec.pde.unknowns[0]
    fields = {field: u.reshape(grid.shape)[None]}
    meta = {"self_residual": self_res, "scheme": "chebyshev_collocation"}
    return fields, np.array([0.0]), meta
