"""Implicit finite-difference marching on bounded uniform grids.

Second-order central stencils are assembled into one sparse operator; the
theta-method handles the linear part (Crank-Nicolson theta=1/2, backward
Euler theta=1) and nonlinear terms go explicit via Adams-Bashforth-2
(the "imex" integrator).  Dirichlet faces are enforced as identity rows.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from ..errors import LinearSolveError, UnsupportedOperatorError
from ..grids import Grid
from ..problem import BcKind, ProblemSpec
from .common import initial_state, march, plan_steps


def _axis_stencil(n: int, dx: float, order: int) -> sps.csr_matrix:
    if order == 1:
        d = sps.diags([-1.0, 1.0], [-1, 1], shape=(n, n), format="lil") / (2 * dx)
        # one-sided 2nd-order rows at the faces keep the operator total-order 2
        d[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * dx)
        d[-1, -3:] = np.array([1.0, -4.0, 3.0]) / (2 * dx)
        return d.tocsr()
    if order == 2:
        d = sps.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format="lil") / dx**2
        d[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / dx**2
        d[-1, -4:] = np.array([-1.0, 4.0, -5.0, 2.0]) / dx**2
        return d.tocsr()
    raise UnsupportedOperatorError(f"FD stencil order {order} not supported")


def _term_matrix(grid: Grid, orders) -> sps.csr_matrix:
    mats = []
    for a, ax in enumerate(grid.axes):
        if orders[a] == 0:
            mats.append(sps.identity(ax.n, format="csr"))
        else:
            mats.append(_axis_stencil(ax.n, ax.dx, orders[a]))
    m = mats[0]
    for nxt in mats[1:]:
        m = sps.kron(m, nxt, format="csr")
    return m


def _boundary_index(grid: Grid) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for a, ax in enumerate(grid.axes):
        sl = [slice(None)] * grid.dim
        sl[a] = 0
        mask[tuple(sl)] = True
        sl[a] = ax.n - 1
        mask[tuple(sl)] = True
    return np.flatnonzero(mask.ravel())


class CompiledParabolic:
    def __init__(self, spec: ProblemSpec, grid: Grid):
        if grid.kind != "uniform" or grid.periodic:
            raise UnsupportedOperatorError("FD parabolic kernel needs a bounded uniform grid")
        if any(ax.periodic for ax in grid.axes):
            raise UnsupportedOperatorError("mixed periodic axes not supported here")
        if len(spec.pde.unknowns) != 1:
            raise UnsupportedOperatorError("FD parabolic kernel is single-field")
        if any(bc.kind != BcKind.DIRICHLET for bc in spec.boundary):
            raise UnsupportedOperatorError("only Dirichlet faces supported")
        self.spec = spec
        self.grid = grid
        self.field = spec.pde.unknowns[0]
        pde = spec.pde

        self.c0 = None
        lin = None
        self.explicit = []  # (term, matrix or None)
        for t in pde.terms:
            if t.time_order:
                if t.time_order != 1 or any(t.spatial_orders(grid.dim)) or not t.coeff.is_constant:
                    raise UnsupportedOperatorError("needs a plain first-order time term")
                self.c0 = t.coeff.constant_value
                continue
            orders = t.spatial_orders(grid.dim)
            if sum(1 for o in orders if o) > 1:
                raise UnsupportedOperatorError("mixed derivatives not supported")
            order = max(orders) if orders else 0
            mat = _term_matrix(grid, orders) if order else None
            if t.nonlinearity is None and not t.coeff.depends_on("t"):
                m = mat if mat is not None else sps.identity(np.prod(grid.shape), format="csr")
                if t.coeff.is_constant:
                    m = t.coeff.constant_value * m
                else:
                    c = t.coeff.eval_on(grid.coords(), broadcast_shape=grid.shape)
                    m = sps.diags(c.ravel()) @ m
                lin = m if lin is None else lin + m
            else:
                self.explicit.append((t, mat))
        if self.c0 is None:
            raise UnsupportedOperatorError("no time-derivative term found")
        n_total = int(np.prod(grid.shape))
        self.A = (lin if lin is not None else sps.csr_matrix((n_total, n_total))).tocsr()
        self.b_idx = _boundary_index(grid)
        self.coords0 = grid.coords()
        self._bc_static = None
        self._bc_exprs = [(bc, bc.value) for bc in spec.boundary]

    def bc_values(self, t: float) -> np.ndarray:
        """Prescribed values at every boundary node (flat, boundary index order)."""
        if self._bc_static is not None:
            return self._bc_static
        full = np.zeros(self.grid.shape)
        for bc, expr in self._bc_exprs:
            sl = [slice(None)] * self.grid.dim
            sl[bc.axis] = 0 if bc.side == "low" else self.grid.axes[bc.axis].n - 1
            vals = expr.eval_on({**self.coords0, "t": t}, broadcast_shape=self.grid.shape)
            full[tuple(sl)] = np.broadcast_to(vals, self.grid.shape)[tuple(sl)]
        out = full.ravel()[self.b_idx]
        if all(not expr.depends_on("t") for _, expr in self._bc_exprs):
            self._bc_static = out
        return out

    def source_vec(self, t: float) -> np.ndarray:
        return self.spec.pde.source[0].eval_on(
            {**self.coords0, "t": t}, broadcast_shape=self.grid.shape
        ).ravel()

    def explicit_vec(self, u_flat: np.ndarray, t: float) -> np.ndarray:
        """Nonlinear / time-varying-coefficient terms, evaluated pointwise."""
        if not self.explicit:
            return 0.0
        u = u_flat.reshape(self.grid.shape)
        acc = np.zeros(self.grid.shape)
        for term, mat in self.explicit:
            d = (mat @ u_flat).reshape(self.grid.shape) if mat is not None else u
            val = term.coeff.eval_on({**self.coords0, "t": t}, broadcast_shape=self.grid.shape) * d
            if term.nonlinearity is not None:
                env = {**self.coords0, "t": t, self.field: u}
                val = val * term.nonlinearity.eval_on(env, broadcast_shape=self.grid.shape)
            acc += val
        return acc.ravel()

def solve_parabolic(
    spec: ProblemSpec,
    grid: Grid,
    *,
    dt: float,
    horizon: float,
    stride: int = 1,
    integrator: str = "crank_nicolson",
):
    theta = {"crank_nicolson": 0.5, "backward_euler": 1.0, "imex": 0.5}.get(integrator)
    if theta is None:
        raise UnsupportedOperatorError(f"unknown parabolic integrator {integrator!r}")
    comp = CompiledParabolic(spec, grid)
    steps, dt = plan_steps(horizon, dt)
    n_total = int(np.prod(grid.shape))
    ident = sps.identity(n_total, format="csr")

    # du/dt = B u + g,  B = -A/c0
    B = (-comp.A / comp.c0).tocsr()
    lhs = (ident - theta * dt * B).tolil()
    lhs[comp.b_idx, :] = 0.0
    for i in comp.b_idx:
        lhs[i, i] = 1.0
    try:
        solver = spla.splu(lhs.tocsc())
    except RuntimeError as exc:
        raise LinearSolveError(f"factorisation failed: {exc}") from None
    rhs_mat = (ident + (1.0 - theta) * dt * B).tocsr()

    u0 = initial_state(spec, grid)[comp.field].ravel().copy()
    u0[comp.b_idx] = comp.bc_values(0.0)
    carry = {"prev_g": None, "last_rel": 0.0}

    def g_vec(u, t):
        return (comp.source_vec(t) - np.asarray(comp.explicit_vec(u, t))) / comp.c0

    def step(u, t, _n):
        t1 = t + dt
        if integrator == "imex" and comp.explicit:
            g_now = g_vec(u, t)
            g_prev = carry["prev_g"] if carry["prev_g"] is not None else g_now
            g_term = 1.5 * g_now - 0.5 * g_prev
            carry["prev_g"] = g_now
        elif integrator == "backward_euler":
            g_term = g_vec(u, t1)
        else:
            g_term = g_vec(u, t + dt / 2)
        rhs = rhs_mat @ u + dt * g_term
        rhs[comp.b_idx] = comp.bc_values(t1)
        out = solver.solve(rhs)
        carry["last_rel"] = float(
            np.linalg.norm(lhs @ out - rhs) / (np.linalg.norm(rhs) + 1e-300)
        )
        return out

    fields, times = march(
        u0, step, lambda u: {comp.field: u.reshape(grid.shape)}, steps, dt, stride
    )
    # implicit schemes report the final linear-solve residual as their self-check
    meta = {"self_residual": carry["last_rel"], "scheme": f"fd_{integrator}"}
    return fields, times, meta


def solve_steady(spec: ProblemSpec, grid: Grid):
    """Direct sparse solve of a linear steady problem on a bounded uniform grid."""
    if grid.kind != "uniform" or grid.periodic:
        raise UnsupportedOperatorError("FD elliptic kernel needs a bounded uniform grid")
    if len(spec.pde.unknowns) != 1:
        raise UnsupportedOperatorError("FD elliptic kernel is single-field")
    if any(bc.kind != BcKind.DIRICHLET for bc in spec.boundary):
        raise UnsupportedOperatorError("only Dirichlet faces supported")
    field = spec.pde.unknowns[0]
    coords = grid.coords()

    lin = None
    for t in spec.pde.terms:
        if t.time_order:
            raise UnsupportedOperatorError("steady solve given a time-derivative term")
        if t.nonlinearity is not None:
            raise UnsupportedOperatorError("steady solve is linear only")
        orders = t.spatial_orders(grid.dim)
        if sum(1 for o in orders if o) > 1:
            raise UnsupportedOperatorError("mixed derivatives not supported")
        mat = _term_matrix(grid, orders) if any(orders) else sps.identity(
            int(np.prod(grid.shape)), format="csr"
        )
        if t.coeff.is_constant:
            mat = t.coeff.constant_value * mat
        else:
            c = t.coeff.eval_on(coords, broadcast_shape=grid.shape)
            mat = sps.diags(c.ravel()) @ mat
        lin = mat if lin is None else lin + mat
    if lin is None:
        raise UnsupportedOperatorError("no operator terms to assemble")

    b_idx = _boundary_index(grid)
    rhs = spec.pde.source[0].eval_on(coords, broadcast_shape=grid.shape).ravel()
    lhs = lin.tolil()
    lhs[b_idx, :] = 0.0
    for i in b_idx:
        lhs[i, i] = 1.0
    bc_full = np.zeros(grid.shape)
    for bc in spec.boundary:
        sl = [slice(None)] * grid.dim
        sl[bc.axis] = 0 if bc.side == "low" else grid.axes[bc.axis].n - 1
        vals = bc.value.eval_on(coords, broadcast_shape=grid.shape)
        bc_full[tuple(sl)] = np.broadcast_to(vals, grid.shape)[tuple(sl)]
    rhs[b_idx] = bc_full.ravel()[b_idx]

    try:
        u = spla.spsolve(lhs.tocsc(), rhs)
    except RuntimeError as exc:
        raise LinearSolveError(f"sparse solve failed: {exc}") from None
    if not np.all(np.isfinite(u)):
        raise LinearSolveError("steady solve returned non-finite values")
    self_res = float(np.linalg.norm(lhs @ u - rhs) / (np.linalg.norm(rhs) + 1e-300))
    fields = {field: u.reshape((1,) + grid.shape)}
    meta = {"self_residual": self_res, "scheme": "fd_elliptic"}
    return fields, np.zeros(1), meta
