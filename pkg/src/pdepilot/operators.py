"""Discrete differentiation used by the verifier's independent residual probe.

These operators are deliberately NOT the ones solvers use: spectral
differentiation on periodic axes, 4th-order central stencils on bounded
uniform axes (valid two layers in from each face), Chebyshev collocation
matrices on Chebyshev axes, centered differences in time across stored
snapshots.
"""

from __future__ import annotations

import numpy as np

from .errors import NonPeriodicGridError, UnsupportedOperatorError
from .grids import Axis, Grid


def wavenumbers(n: int, length: float) -> np.ndarray:
    """Angular wavenumbers for an n-point periodic axis of given length."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)


def fourier_diff(u: np.ndarray, order: int, axis: int, length: float) -> np.ndarray:
    """Spectral derivative along a periodic axis."""
    n = u.shape[axis]
    k = wavenumbers(n, length)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0  # Nyquist mode has no well-defined odd derivative
    shape = [1] * u.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(u, axis=axis) * mult.reshape(shape), axis=axis)
    return out.real if np.isrealobj(u) else out


def cheb_diff_matrix(n: int, lo: float = -1.0, hi: float = 1.0, order: int = 1) -> np.ndarray:
    """Collocation derivative matrix on n ascending Gauss-Lobatto points."""
    if n < 2:
        raise UnsupportedOperatorError("chebyshev matrix needs >= 2 points")
    m = n - 1
    x = np.cos(np.pi * np.arange(n) / m)  # descending on [-1, 1]
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    d -= np.diag(d.sum(axis=1))
    d = d[::-1, ::-1]  # ascending node order
    d *= 2.0 / (hi - lo)
    return np.linalg.matrix_power(d, order) if order != 1 else d


def apply_matrix(mat: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    """Apply a square matrix along one axis of u."""
    return np.moveaxis(np.tensordot(mat, u, axes=([1], [axis])), 0, axis)


_FD_STENCILS = {
    # order -> (offsets, coefficients, dx power); 4th-order accurate for 1 and 2,
    # 2nd-order for 3 and 4; all have a two-layer margin
    1: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12), 1),
    2: ((-2, -1, 0, 1, 2), (-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12), 2),
    3: ((-2, -1, 1, 2), (-1 / 2, 1.0, -1.0, 1 / 2), 3),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0), 4),
}
FD_MARGIN = 2


def fd_central(u: np.ndarray, order: int, axis: int, dx: float) -> np.ndarray:
    """Central-difference derivative on a bounded uniform axis.

    Only entries at least FD_MARGIN layers from each face are meaningful;
    the margin band is zero-filled.
    """
    if order not in _FD_STENCILS:
        raise UnsupportedOperatorError(f"no central stencil for order {order}")
    offsets, coeffs, power = _FD_STENCILS[order]
    n = u.shape[axis]
    if n < 2 * FD_MARGIN + 1:
        raise UnsupportedOperatorError(f"axis too short ({n}) for central stencils")
    out = np.zeros_like(u, dtype=float)
    core = slice(FD_MARGIN, n - FD_MARGIN)

    def sl(s):
        idx = [slice(None)] * u.ndim
        idx[axis] = s
        return tuple(idx)

    acc = np.zeros_like(u[sl(core)], dtype=float)
    for off, c in zip(offsets, coeffs):
        acc += c * u[sl(slice(FD_MARGIN + off, n - FD_MARGIN + off))]
    out[sl(core)] = acc / dx**power
    return out


def axis_margin(ax: Axis) -> int:
    """Layers near each face where the probe's spatial stencil is invalid."""
    if ax.periodic:
        return 0
    if ax.kind == "chebyshev":
        return 1  # skip collocation rows used for boundary enforcement
    return FD_MARGIN


def spatial_derivative(u: np.ndarray, orders, grid: Grid, *, cache: dict | None = None) -> np.ndarray:
    """Mixed spatial derivative of u, one entry of ``orders`` per grid axis.

    u may carry leading (snapshot) axes before the grid axes.  Entries in
    the margin bands of bounded axes are not meaningful.
    """
    offset = u.ndim - grid.dim
    if offset < 0 or u.shape[offset:] != grid.shape:
        raise UnsupportedOperatorError(
            f"array shape {u.shape} does not end with grid shape {grid.shape}"
        )
    out = u
    for a, order in enumerate(orders):
        if order == 0:
            continue
        ax = grid.axes[a]
        if ax.periodic:
            out = fourier_diff(out, order, offset + a, ax.length)
        elif ax.kind == "chebyshev":
            key = ("cheb", a, order, ax.n)
            mat = cache.get(key) if cache is not None else None
            if mat is None:
                mat = cheb_diff_matrix(ax.n, ax.lo, ax.hi, order)
                if cache is not None:
                    cache[key] = mat
            out = apply_matrix(mat, out, offset + a)
        else:
            out = fd_central(out, order, offset + a, ax.dx)
    return out


def interior_mask_slices(grid: Grid) -> tuple[slice, ...]:
    """Slices selecting the region where every probe stencil is valid."""
    out = []
    for ax in grid.axes:
        m = axis_margin(ax)
        out.append(slice(m, ax.n - m) if m else slice(None))
    return tuple(out)


def time_derivative(values: np.ndarray, times: np.ndarray, order: int, scheme: str = "centered2"):
    """Centered time derivative across snapshots.

    Returns (derivative at interior snapshots, interior snapshot indices).
    values has the snapshot axis first.  Falls back from centered4 to
    centered2 when too few snapshots are stored.
    """
    n = len(times)
    if order not in (1, 2):
        raise UnsupportedOperatorError(f"time derivative order {order} not supported")
    if scheme == "centered4" and n < 5:
        scheme = "centered2"
    if n < 3:
        raise UnsupportedOperatorError(f"need >= 3 snapshots for time derivatives, have {n}")
    dt = np.diff(times)
    uniform = np.allclose(dt, dt[0], rtol=1e-8, atol=1e-14)
    h = float(dt[0])
    if scheme == "centered4":
        if not uniform:
            scheme = "centered2"
        else:
            idx = np.arange(2, n - 2)
            if order == 1:
                d = (-values[4:] + 8 * values[3:-1] - 8 * values[1:-3] + values[:-4]) / (12 * h)
            else:
                d = (
                    -values[4:] + 16 * values[3:-1] - 30 * values[2:-2]
                    + 16 * values[1:-3] - values[:-4]
                ) / (12 * h * h)
            return d, idx
    if scheme != "centered2":
        raise UnsupportedOperatorError(f"unknown time stencil {scheme!r}")
    idx = np.arange(1, n - 1)
    if order == 1:
        span = (times[2:] - times[:-2]).reshape((-1,) + (1,) * (values.ndim - 1))
        d = (values[2:] - values[:-2]) / span
    else:
        if not uniform:
            raise UnsupportedOperatorError("second time derivative needs uniform snapshots")
        d = (values[2:] - 2 * values[1:-1] + values[:-2]) / (h * h)
    return d, idx
