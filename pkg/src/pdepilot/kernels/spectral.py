"""Pseudospectral solvers on fully periodic uniform grids.

One compiled representation of the PDE feeds four integrators:

  rk4         explicit, any expressible right-hand side
  etdrk4      single field; constant-coefficient linear part integrated
              exactly, remainder explicit (contour-quadrature phi weights)
  imex        Crank-Nicolson on even-order constant diffusion terms,
              Adams-Bashforth-2 on everything else, per field in Fourier space
  split_step  two-field cross-coupled dispersive pair (free propagator)

Quadratic products are de-aliased with the 2/3 rule.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonPeriodicGridError, UnsupportedOperatorError
from ..grids import Grid
from ..operators import wavenumbers
from ..problem import ProblemSpec
from .common import initial_state, march, plan_steps, relative_diff


def _axis_symbol(grid: Grid, axis: int, order: int) -> np.ndarray:
    ax = grid.axes[axis]
    k = wavenumbers(ax.n, ax.length)
    f = (1j * k) ** order
    if order % 2 == 1 and ax.n % 2 == 0:
        f[ax.n // 2] = 0.0
    shape = [1] * grid.dim
    shape[axis] = ax.n
    return f.reshape(shape)


def _term_symbol(grid: Grid, orders) -> np.ndarray:
    mult = np.ones((1,) * grid.dim, dtype=complex)
    for a, o in enumerate(orders):
        if o:
            mult = mult * _axis_symbol(grid, a, o)
    return np.broadcast_to(mult, grid.shape) if mult.shape != grid.shape else mult


def _dealias_mask(grid: Grid) -> np.ndarray:
    mask = np.ones((1,) * grid.dim, dtype=bool)
    for a, ax in enumerate(grid.axes):
        idx = np.abs(np.fft.fftfreq(ax.n) * ax.n)
        keep = idx <= ax.n // 3
        shape = [1] * grid.dim
        shape[a] = ax.n
        mask = mask & keep.reshape(shape)
    return np.broadcast_to(mask, grid.shape)


class CompiledSpectral:
    """Term-compiled periodic PDE: merged linear symbols + explicit remainder."""

    def __init__(self, spec: ProblemSpec, grid: Grid):
        if not grid.periodic:
            raise NonPeriodicGridError("spectral kernel requires fully periodic grids")
        self.spec = spec
        self.grid = grid
        pde = spec.pde
        self.evolved: dict[int, tuple[str, float]] = {}
        spatial = []
        for t in pde.terms:
            if t.time_order:
                if (
                    t.time_order != 1
                    or any(t.spatial_orders(grid.dim))
                    or t.nonlinearity is not None
                    or not t.coeff.is_constant
                ):
                    raise UnsupportedOperatorError(
                        "spectral kernel needs plain first-order time terms"
                    )
                if t.equation in self.evolved:
                    raise UnsupportedOperatorError("two time derivatives in one equation")
                self.evolved[t.equation] = (t.field, t.coeff.constant_value)
            else:
                spatial.append(t)
        if set(self.evolved) != set(range(pde.n_equations)):
            raise UnsupportedOperatorError("every equation needs a time-derivative term")
        if sorted(f for f, _ in self.evolved.values()) != sorted(pde.unknowns):
            raise UnsupportedOperatorError("evolved fields must cover the unknowns")

        # merged constant-coefficient linear symbols; diffusion-like ones kept
        # separate so the IMEX integrator can treat them implicitly
        self.lin_imp: dict[int, np.ndarray] = {}
        self.lin_exp: dict[tuple[int, str], np.ndarray] = {}
        self.explicit: list[tuple] = []  # (term, symbol or None)
        for t in spatial:
            orders = t.spatial_orders(grid.dim)
            if t.coeff.is_constant and t.nonlinearity is None:
                sym = t.coeff.constant_value * _term_symbol(grid, orders)
                self_coupled = t.field == self.evolved[t.equation][0]
                diffusion_like = (
                    self_coupled
                    and sum(orders) >= 2
                    and all(o % 2 == 0 for o in orders)
                )
                if diffusion_like:
                    self.lin_imp[t.equation] = self.lin_imp.get(t.equation, 0) + sym
                else:
                    key = (t.equation, t.field)
                    self.lin_exp[key] = self.lin_exp.get(key, 0) + sym
            else:
                sym = _term_symbol(grid, orders) if any(orders) else None
                self.explicit.append((t, sym))
        self.has_nonlinear = any(t.nonlinearity is not None for t, _ in self.explicit)
        self.mask = _dealias_mask(grid) if self.has_nonlinear else None
        self._coeff_cache: dict[int, np.ndarray] = {}
        self._source_cache: dict[int, np.ndarray] = {}
        self.coords0 = grid.coords()

    # -- pointwise data -----------------------------------------------------

    def _coeff(self, idx: int, term, t: float):
        if term.coeff.is_constant:
            return term.coeff.constant_value
        if not term.coeff.depends_on("t"):
            if idx not in self._coeff_cache:
                self._coeff_cache[idx] = term.coeff.eval_on(
                    self.coords0, broadcast_shape=self.grid.shape
                )
            return self._coeff_cache[idx]
        return term.coeff.eval_on({**self.coords0, "t": t}, broadcast_shape=self.grid.shape)

    def source(self, eq: int, t: float) -> np.ndarray:
        expr = self.spec.pde.source[eq]
        if not expr.depends_on("t"):
            if eq not in self._source_cache:
                self._source_cache[eq] = expr.eval_on(
                    self.coords0, broadcast_shape=self.grid.shape
                )
            return self._source_cache[eq]
        return expr.eval_on({**self.coords0, "t": t}, broadcast_shape=self.grid.shape)

    def dealias(self, v: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(np.fft.fftn(v) * self.mask).real

    # -- right-hand sides ----------------------------------------------------

    def rhs(self, state: dict, t: float, *, implicit_too: bool = True) -> dict:
        """du/dt per field; optionally excluding the implicit diffusion block."""
        F = {f: np.fft.fftn(state[f]) for f in self.spec.pde.unknowns}
        out = {eq: self.source(eq, t).copy() for eq in self.evolved}
        if implicit_too:
            for eq, sym in self.lin_imp.items():
                f = self.evolved[eq][0]
                out[eq] -= np.fft.ifftn(sym * F[f]).real
        for (eq, fld), sym in self.lin_exp.items():
            out[eq] -= np.fft.ifftn(sym * F[fld]).real
        for idx, (term, sym) in enumerate(self.explicit):
            d = np.fft.ifftn(sym * F[term.field]).real if sym is not None else state[term.field]
            val = self._coeff(idx, term, t) * d
            if term.nonlinearity is not None:
                env = {**self.coords0, "t": t}
                env.update(state)
                val = self.dealias(
                    term.nonlinearity.eval_on(env, broadcast_shape=self.grid.shape) * val
                )
            out[term.equation] = out[term.equation] - val
        return {self.evolved[eq][0]: out[eq] / self.evolved[eq][1] for eq in self.evolved}

    def rhs_reference(self, state: dict, t: float) -> dict:
        """Term-by-term re-assembly on a separate code path (self-check)."""
        out = {}
        for eq in self.evolved:
            fld, c0 = self.evolved[eq]
            acc = np.array(self.source(eq, t), dtype=float)
            for term in reversed(self.spec.pde.terms):
                if term.equation != eq or term.time_order:
                    continue
                orders = term.spatial_orders(self.grid.dim)
                v = np.asarray(state[term.field], dtype=float)
                if any(orders):
                    v = np.fft.ifftn(np.fft.fftn(v) * _term_symbol(self.grid, orders)).real
                c = term.coeff.eval_on(
                    {**self.coords0, "t": t}, broadcast_shape=self.grid.shape
                )
                v = c * v
                if term.nonlinearity is not None:
                    env = {**self.coords0, "t": t}
                    env.update(state)
                    v = v * term.nonlinearity.eval_on(env, broadcast_shape=self.grid.shape)
                acc = acc - v
            out[fld] = acc / c0
        return out

    def self_check(self, state: dict, t: float) -> float:
        a = self.rhs(state, t)
        b = self.rhs_reference(state, t)
        names = sorted(a)
        return relative_diff(
            np.stack([a[n] for n in names]), np.stack([b[n] for n in names])
        )


# -- integrators --------------------------------------------------------------


def _rk4(comp: CompiledSpectral, state: dict, dt: float, steps: int, stride: int):
    def add(u, k, h):
        return {f: u[f] + h * k[f] for f in u}

    def step(u, t, _n):
        k1 = comp.rhs(u, t)
        k2 = comp.rhs(add(u, k1, dt / 2), t + dt / 2)
        k3 = comp.rhs(add(u, k2, dt / 2), t + dt / 2)
        k4 = comp.rhs(add(u, k3, dt), t + dt)
        return {
            f: u[f] + dt / 6 * (k1[f] + 2 * k2[f] + 2 * k3[f] + k4[f]) for f in u
        }

    return march(state, step, lambda s: dict(s), steps, dt, stride)


def _phi_contour(L: np.ndarray, dt: float, m: int = 32):
    """ETDRK4 weights by contour quadrature around the scaled symbol."""
    r = np.exp(1j * np.pi * (np.arange(m) + 0.5) / m)
    lr = dt * L[..., None] + r
    elr = np.exp(lr)
    q = dt * np.mean((np.exp(lr / 2) - 1) / lr, axis=-1)
    f1 = dt * np.mean((-4 - lr + elr * (4 - 3 * lr + lr**2)) / lr**3, axis=-1)
    f2 = dt * np.mean((2 + lr + elr * (-2 + lr)) / lr**3, axis=-1)
    f3 = dt * np.mean((-4 - 3 * lr - lr**2 + elr * (4 - lr)) / lr**3, axis=-1)
    return q, f1, f2, f3


def _etdrk4(comp: CompiledSpectral, state: dict, dt: float, steps: int, stride: int):
    if len(comp.spec.pde.unknowns) != 1:
        raise UnsupportedOperatorError("etdrk4 kernel handles a single field")
    (fld, c0) = comp.evolved[0]
    L = -(
        np.asarray(comp.lin_imp.get(0, 0), dtype=complex)
        + np.asarray(comp.lin_exp.get((0, fld), 0), dtype=complex)
    ) / c0
    L = np.broadcast_to(L, comp.grid.shape).astype(complex)
    E = np.exp(dt * L)
    E2 = np.exp(dt * L / 2)
    q, f1, f2, f3 = _phi_contour(L, dt)

    src = comp.spec.pde.source[0]
    has_remainder = bool(comp.explicit) or not (
        src.is_constant and src.constant_value == 0.0
    )

    def n_hat(v, t):
        if not has_remainder:
            return 0.0
        u = np.fft.ifftn(v).real
        fu = np.fft.fftn(u)
        acc = comp.source(0, t).astype(float).copy()
        for idx, (term, sym) in enumerate(comp.explicit):
            d = np.fft.ifftn(sym * fu).real if sym is not None else u
            val = comp._coeff(idx, term, t) * d
            if term.nonlinearity is not None:
                env = {**comp.coords0, "t": t, fld: u}
                val = comp.dealias(
                    term.nonlinearity.eval_on(env, broadcast_shape=comp.grid.shape) * val
                )
            acc -= val
        return np.fft.fftn(acc / c0)

    def step(v, t, _n):
        nv = n_hat(v, t)
        a = E2 * v + q * nv
        na = n_hat(a, t + dt / 2)
        b = E2 * v + q * na
        nb = n_hat(b, t + dt / 2)
        c = E2 * a + q * (2 * nb - nv)
        nc = n_hat(c, t + dt)
        return E * v + f1 * nv + 2 * f2 * (na + nb) + f3 * nc

    v0 = np.fft.fftn(state[fld])
    return march(v0, step, lambda v: {fld: np.fft.ifftn(v).real}, steps, dt, stride)


def _imex_cnab2(comp: CompiledSpectral, state: dict, dt: float, steps: int, stride: int):
    fields = {eq: comp.evolved[eq][0] for eq in comp.evolved}
    L = {}
    for eq, (fld, c0) in comp.evolved.items():
        sym = -np.asarray(comp.lin_imp.get(eq, 0), dtype=complex) / c0
        L[eq] = np.broadcast_to(sym, comp.grid.shape)
    num = {eq: 1.0 + 0.5 * dt * L[eq] for eq in L}
    den = {eq: 1.0 - 0.5 * dt * L[eq] for eq in L}

    def explicit_hat(state_real, t):
        expl = comp.rhs(state_real, t, implicit_too=False)
        return {eq: np.fft.fftn(expl[fields[eq]]) for eq in fields}

    v = {eq: np.fft.fftn(state[fields[eq]]) for eq in fields}
    carry = {"prev": None}

    def step(v, t, n):
        state_real = {fields[eq]: np.fft.ifftn(v[eq]).real for eq in fields}
        nh = explicit_hat(state_real, t)
        prev = carry["prev"] if carry["prev"] is not None else nh
        out = {
            eq: (num[eq] * v[eq] + dt * (1.5 * nh[eq] - 0.5 * prev[eq])) / den[eq]
            for eq in fields
        }
        carry["prev"] = nh
        return out

    return march(
        v, step,
        lambda v: {fields[eq]: np.fft.ifftn(v[eq]).real for eq in fields},
        steps, dt, stride,
    )


def _detect_dispersive_pair(comp: CompiledSpectral):
    """Match the two-field cross-coupled free dispersive structure.

    eq0: a_t + alpha * Lap(b) = 0,  eq1: b_t - alpha * Lap(a) = 0
    Returns (a, b, alpha) or None.
    """
    pde = comp.spec.pde
    if len(pde.unknowns) != 2 or pde.n_equations != 2 or comp.explicit:
        return None
    if comp.lin_imp:
        return None
    for eq in (0, 1):
        if not comp.spec.pde.source[eq].is_constant or comp.spec.pde.source[eq].constant_value:
            return None
    a, _ = comp.evolved[0]
    b, _ = comp.evolved[1]
    cross0 = [t for t in pde.terms if t.equation == 0 and not t.time_order]
    cross1 = [t for t in pde.terms if t.equation == 1 and not t.time_order]
    if len(cross0) != 1 or len(cross1) != 1:
        return None
    t0, t1 = cross0[0], cross1[0]
    for t in (t0, t1):
        orders = t.spatial_orders(comp.grid.dim)
        if sum(orders) != 2 or any(o not in (0, 2) for o in orders):
            return None
        if not t.coeff.is_constant or t.nonlinearity is not None:
            return None
    if t0.field != b or t1.field != a:
        return None
    alpha = t0.coeff.constant_value / comp.evolved[0][1]
    beta = t1.coeff.constant_value / comp.evolved[1][1]
    if not np.isclose(alpha, -beta, rtol=1e-12):
        return None
    return a, b, alpha


def _split_step(comp: CompiledSpectral, state: dict, dt: float, steps: int, stride: int):
    pair = _detect_dispersive_pair(comp)
    if pair is None:
        raise UnsupportedOperatorError(
            "split-step kernel needs the free cross-coupled dispersive pair"
        )
    a, b, alpha = pair
    k2 = np.zeros(comp.grid.shape)
    for ax in range(comp.grid.dim):
        k2 = k2 + (-_axis_symbol(comp.grid, ax, 2)).real  # k_a^2
    # psi = a + i b obeys psi_t = i*alpha*Lap(psi): each mode rotates by -alpha*k^2
    prop = np.exp(-1j * alpha * k2 * dt)

    def step(psi_hat, _t, _n):
        return prop * psi_hat

    psi0 = np.fft.fftn(state[a] + 1j * state[b])

    def extract(psi_hat):
        psi = np.fft.ifftn(psi_hat)
        return {a: psi.real, b: psi.imag}

    return march(psi0, step, extract, steps, dt, stride)


_INTEGRATORS = {
    "rk4": _rk4,
    "etdrk4": _etdrk4,
    "imex": _imex_cnab2,
    "split_step": _split_step,
}


def solve_spectral(
    spec: ProblemSpec,
    grid: Grid,
    *,
    dt: float,
    horizon: float,
    stride: int = 1,
    integrator: str = "rk4",
):
    if integrator not in _INTEGRATORS:
        raise UnsupportedOperatorError(f"unknown spectral integrator {integrator!r}")
    comp = CompiledSpectral(spec, grid)
    steps, dt = plan_steps(horizon, dt)
    state0 = initial_state(spec, grid)
    fields, times = _INTEGRATORS[integrator](comp, state0, dt, steps, stride)
    final = {name: vals[-1] for name, vals in fields.items()}
    meta = {
        "self_residual": comp.self_check(final, times[-1]),
        "scheme": f"fourier_{integrator}",
    }
    return fields, times, meta
