"""Numerical solver kernels, one module per method family.

Every kernel takes (spec, grid, run parameters) and returns
``(fields, times, meta)`` where fields maps name -> (n_snapshots, *shape)
arrays and meta carries {self_residual, wall_time, scheme}.  Dispatch by
method/integrator name lives in :func:`run_kernel`.
"""

from __future__ import annotations

import time

from ..errors import UnsupportedOperatorError
from ..grids import Grid
from ..problem import ProblemSpec


def run_kernel(
    spec: ProblemSpec,
    grid: Grid,
    *,
    method: str,
    variant: str = "",
    integrator: str = "",
    dt: float = 0.0,
    horizon: float | None = None,
    snapshot_stride: int = 1,
):
    """Solve spec on grid with the named kernel; see module docstring for output."""
    from . import chebyshev, hyperbolic, parabolic, spectral, wave

    t0 = time.perf_counter()
    if horizon is None:
        horizon = spec.domain.time_horizon
    if method == "fourier_spectral":
        out = spectral.solve_spectral(
            spec, grid, dt=dt, horizon=horizon, stride=snapshot_stride,
            integrator=integrator or "rk4",
        )
    elif method == "chebyshev_spectral":
        if spec.domain.steady:
            out = chebyshev.solve_elliptic(spec, grid)
        else:
            out = wave.solve_bounded_explicit(
                spec, grid, dt=dt, horizon=horizon, stride=snapshot_stride,
            )
    elif method in ("finite_difference", "finite_volume", "finite_element"):
        if method == "finite_volume" and not variant:
            variant = "muscl"
        if variant == "semi_lagrangian" or integrator == "semi_lagrangian":
            out = hyperbolic.solve_semi_lagrangian(
                spec, grid, dt=dt, horizon=horizon, stride=snapshot_stride,
            )
        elif variant in ("weno3", "muscl") or (variant == "upwind" and spec.periodic):
            out = hyperbolic.solve_conservation(
                spec, grid, dt=dt, horizon=horizon, stride=snapshot_stride,
                reconstruction=variant,
            )
        elif spec.domain.steady:
            out = parabolic.solve_steady(spec, grid)
        else:
            out = parabolic.solve_parabolic(
                spec, grid, dt=dt, horizon=horizon, stride=snapshot_stride,
                integrator=integrator or "crank_nicolson",
            )
        if method == "finite_element":
            # P1 elements with lumped mass on a uniform mesh assemble to the
            # same stencils; keep the label honest about the pedigree
            _, _, meta = out
            meta["scheme"] = meta["scheme"].replace("fd_", "fem_", 1)
    else:
        raise UnsupportedOperatorError(f"no kernel for method {method!r}")
    fields, times, meta = out
    meta.setdefault("wall_time", time.perf_counter() - t0)
    return fields, times, meta
