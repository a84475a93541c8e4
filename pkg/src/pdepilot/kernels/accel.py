"""Hot reconstruction loops: numba-jitted when available, numpy otherwise.

Arrays arrive reshaped to (rows, n) with the sweep axis last and periodic
wrap.  Set PDEPILOT_DISABLE_NUMBA=1 to force the numpy path (the benchmark
in benchmarks/bench_kernels.py compares the two).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba as nb

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time extra
    nb = None
    HAVE_NUMBA = False

_WENO_EPS = 1e-6


def numba_enabled() -> bool:
    if not HAVE_NUMBA:
        return False
    return os.environ.get("PDEPILOT_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes")


# -- numpy reference implementations ------------------------------------------


def _weno3_left_np(f: np.ndarray) -> np.ndarray:
    """Left-biased 3rd-order reconstruction of f at interface i+1/2."""
    fm = np.roll(f, 1, axis=-1)
    fp = np.roll(f, -1, axis=-1)
    p0 = -0.5 * fm + 1.5 * f
    p1 = 0.5 * f + 0.5 * fp
    b0 = (f - fm) ** 2
    b1 = (fp - f) ** 2
    a0 = (1.0 / 3.0) / (_WENO_EPS + b0) ** 2
    a1 = (2.0 / 3.0) / (_WENO_EPS + b1) ** 2
    return (a0 * p0 + a1 * p1) / (a0 + a1)


def _weno3_right_np(f: np.ndarray) -> np.ndarray:
    """Right-biased reconstruction at interface i+1/2 (mirror of the left)."""
    f1 = np.roll(f, -1, axis=-1)
    f2 = np.roll(f, -2, axis=-1)
    p0 = 1.5 * f1 - 0.5 * f2
    p1 = 0.5 * f1 + 0.5 * f
    b0 = (f2 - f1) ** 2
    b1 = (f1 - f) ** 2
    a0 = (1.0 / 3.0) / (_WENO_EPS + b0) ** 2
    a1 = (2.0 / 3.0) / (_WENO_EPS + b1) ** 2
    return (a0 * p0 + a1 * p1) / (a0 + a1)


def _minmod_slopes_np(u: np.ndarray) -> np.ndarray:
    a = u - np.roll(u, 1, axis=-1)
    b = np.roll(u, -1, axis=-1) - u
    return np.where(a * b <= 0.0, 0.0, np.where(np.abs(a) < np.abs(b), a, b))


# -- numba twins ---------------------------------------------------------------

if HAVE_NUMBA:

    @nb.njit(cache=True)
    def _weno3_left_nb(f):  # pragma: no cover - exercised via dispatch tests
        rows, n = f.shape
        out = np.empty_like(f)
        for r in range(rows):
            for i in range(n):
                fm = f[r, (i - 1) % n]
                fc = f[r, i]
                fp = f[r, (i + 1) % n]
                p0 = -0.5 * fm + 1.5 * fc
                p1 = 0.5 * fc + 0.5 * fp
                b0 = (fc - fm) ** 2
                b1 = (fp - fc) ** 2
                a0 = (1.0 / 3.0) / (_WENO_EPS + b0) ** 2
                a1 = (2.0 / 3.0) / (_WENO_EPS + b1) ** 2
                out[r, i] = (a0 * p0 + a1 * p1) / (a0 + a1)
        return out

    @nb.njit(cache=True)
    def _weno3_right_nb(f):  # pragma: no cover
        rows, n = f.shape
        out = np.empty_like(f)
        for r in range(rows):
            for i in range(n):
                fc = f[r, i]
                f1 = f[r, (i + 1) % n]
                f2 = f[r, (i + 2) % n]
                p0 = 1.5 * f1 - 0.5 * f2
                p1 = 0.5 * f1 + 0.5 * fc
                b0 = (f2 - f1) ** 2
                b1 = (f1 - fc) ** 2
                a0 = (1.0 / 3.0) / (_WENO_EPS + b0) ** 2
                a1 = (2.0 / 3.0) / (_WENO_EPS + b1) ** 2
                out[r, i] = (a0 * p0 + a1 * p1) / (a0 + a1)
        return out

    @nb.njit(cache=True)
    def _minmod_slopes_nb(u):  # pragma: no cover
        rows, n = u.shape
        out = np.empty_like(u)
        for r in range(rows):
            for i in range(n):
                a = u[r, i] - u[r, (i - 1) % n]
                b = u[r, (i + 1) % n] - u[r, i]
                if a * b <= 0.0:
                    out[r, i] = 0.0
                elif abs(a) < abs(b):
                    out[r, i] = a
                else:
                    out[r, i] = b
        return out


def weno3_left(f: np.ndarray) -> np.ndarray:
    if numba_enabled():
        return _weno3_left_nb(np.ascontiguousarray(f))
    return _weno3_left_np(f)


def weno3_right(f: np.ndarray) -> np.ndarray:
    if numba_enabled():
        return _weno3_right_nb(np.ascontiguousarray(f))
    return _weno3_right_np(f)


def minmod_slopes(u: np.ndarray) -> np.ndarray:
    if numba_enabled():
        return _minmod_slopes_nb(np.ascontiguousarray(u))
    return _minmod_slopes_np(u)
