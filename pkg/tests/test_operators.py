import numpy as np
import pytest

from pdepilot.errors import UnsupportedOperatorError
from pdepilot.grids import Grid
from pdepilot.operators import (
    apply_matrix,
    cheb_diff_matrix,
    fd_central,
    fourier_diff,
    interior_mask_slices,
    spatial_derivative,
    time_derivative,
)


def test_fourier_first_derivative_exact_mode():
    n = 32
    x = np.arange(n) / n
    u = np.sin(2 * np.pi * x)
    du = fourier_diff(u, 1, 0, 1.0)
    np.testing.assert_allclose(du, 2 * np.pi * np.cos(2 * np.pi * x), atol=1e-11)


def test_fourier_second_derivative():
    n = 64
    x = 2.0 * np.arange(n) / n  # length-2 domain
    u = np.cos(3 * np.pi * x)
    d2 = fourier_diff(u, 2, 0, 2.0)
    np.testing.assert_allclose(d2, -((3 * np.pi) ** 2) * u, atol=1e-9)


def test_fourier_multi_axis():
    n = 32
    x = (np.arange(n) / n)[:, None]
    y = (np.arange(n) / n)[None, :]
    u = np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y)
    dy = fourier_diff(u, 1, 1, 1.0)
    np.testing.assert_allclose(dy, -4 * np.pi * np.sin(2 * np.pi * x) * np.sin(4 * np.pi * y), atol=1e-9)


def test_cheb_matrix_differentiates_cubic_exactly():
    for lo, hi in [(-1.0, 1.0), (0.0, 2.0)]:
        d = cheb_diff_matrix(12, lo, hi)
        from pdepilot.grids import chebyshev_nodes

        x = chebyshev_nodes(12, lo, hi)
        np.testing.assert_allclose(d @ x**3, 3 * x**2, atol=1e-10)


def test_cheb_second_derivative():
    from pdepilot.grids import chebyshev_nodes

    d2 = cheb_diff_matrix(24, 0.0, 1.0, order=2)
    x = chebyshev_nodes(24, 0.0, 1.0)
    u = np.sin(np.pi * x)
    np.testing.assert_allclose(d2 @ u, -np.pi**2 * u, atol=1e-8)


def test_apply_matrix_along_axis():
    d = cheb_diff_matrix(9)
    from pdepilot.grids import chebyshev_nodes

    x = chebyshev_nodes(9)
    u = np.tile(x**2, (3, 1))  # leading snapshot axis
    out = apply_matrix(d, u, 1)
    np.testing.assert_allclose(out, np.tile(2 * x, (3, 1)), atol=1e-11)


@pytest.mark.parametrize("order,rate", [(1, 4), (2, 4)])
def test_fd_central_fourth_order_convergence(order, rate):
    errs = []
    for n in (33, 65):
        x = np.linspace(0, 1, n)
        u = np.sin(2 * np.pi * x)
        exact = (2 * np.pi) ** order * np.sin(2 * np.pi * x + order * np.pi / 2)
        approx = fd_central(u, order, 0, x[1] - x[0])
        errs.append(np.max(np.abs((approx - exact)[2:-2])))
    assert errs[0] / errs[1] > 2 ** rate * 0.7


def test_fd_central_short_axis_rejected():
    with pytest.raises(UnsupportedOperatorError):
        fd_central(np.zeros(4), 1, 0, 0.1)


def test_spatial_derivative_mixed_periodic():
    g = Grid.uniform([(0, 1), (0, 1)], (32, 32), (True, True))
    c = g.coords()
    u = np.sin(2 * np.pi * c["x"]) * np.cos(2 * np.pi * c["y"]) * np.ones(g.shape)
    uxy = spatial_derivative(u[None], (1, 1), g)[0]
    exact = (2 * np.pi) ** 2 * np.cos(2 * np.pi * c["x"]) * -np.sin(2 * np.pi * c["y"])
    np.testing.assert_allclose(uxy, np.broadcast_to(exact, g.shape), atol=1e-9)


def test_interior_mask():
    g = Grid.uniform([(0, 1), (0, 1)], (16, 10), (True, False))
    sl = interior_mask_slices(g)
    assert sl[0] == slice(None)
    assert sl[1] == slice(2, 8)
    gc = Grid.chebyshev([(0, 1)], (9,))
    assert interior_mask_slices(gc)[0] == slice(1, 8)


def test_time_derivative_centered2():
    t = np.linspace(0, 1, 21)
    u = t[:, None] ** 2 * np.ones((21, 4))
    d, idx = time_derivative(u, t, 1, "centered2")
    np.testing.assert_allclose(d, 2 * t[idx][:, None] * np.ones((19, 4)), atol=1e-12)


def test_time_derivative_centered4_exact_for_cubic():
    t = np.linspace(0, 1, 11)
    u = t**3
    d, idx = time_derivative(u, t, 1, "centered4")
    np.testing.assert_allclose(d, 3 * t[idx] ** 2, atol=1e-12)


def test_second_time_derivative():
    t = np.linspace(0, 2, 41)
    u = np.cos(t)
    d, idx = time_derivative(u, t, 2, "centered2")
    h = t[1] - t[0]
    np.testing.assert_allclose(d, -np.cos(t[idx]), atol=h**2)


def test_time_derivative_too_few_snapshots():
    with pytest.raises(UnsupportedOperatorError):
        time_derivative(np.zeros((2, 3)), np.array([0.0, 1.0]), 1)
