import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpl.domain import (Grid, ShapeError, dealias, dx_pow, dy, spectral_l2, to_physical,
                        to_spectral, weighted_l2)


@pytest.fixture
def grid():
    return Grid(Nx=16, Ny=40, Y=4.0)


def smooth_field(grid, rng, kmax=None):
    kmax = grid.dealias_cutoff if kmax is None else kmax
    X, Yg = grid.mesh()
    f = np.zeros(grid.shape)
    for k in range(kmax + 1):
        a, b = rng.normal(size=2)
        f += (a * np.cos(k * X) + b * np.sin(k * X)) * np.sin((k + 1) * Yg) * np.exp(-Yg)
    return f


# grid ------------------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(Nx=3, Ny=8), dict(Nx=2, Ny=8), dict(Nx=8, Ny=3),
                                dict(Nx=8, Ny=8, Y=0.0), dict(Nx=8, Ny=8, ell=0.5),
                                dict(Nx=8, Ny=8, dealias_cutoff=5)])
def test_grid_rejects_invalid(kw):
    with pytest.raises(ValueError):
        Grid(**kw)


def test_grid_nodes():
    g = Grid(Nx=8, Ny=10, Y=3.0)
    assert g.y[0] == 0.0 and g.y[-1] == 3.0
    assert np.all(np.diff(g.y) > 0)
    assert g.dealias_cutoff == 8 // 3
    assert g.shape == (8, 12)
    assert g.dy == pytest.approx(3.0 / 11)


def test_shape_mismatch(grid):
    with pytest.raises(ShapeError):
        to_spectral(grid, np.zeros((4, 4)))
    with pytest.raises(ShapeError):
        to_physical(grid, np.zeros((4, 4), dtype=complex))


# transforms ------------------------------------------------------------------

def test_zero_transform(grid):
    assert np.all(to_spectral(grid, grid.zeros()) == 0)


def test_single_mode_coefficients(grid):
    X, _ = grid.mesh()
    c = to_spectral(grid, np.cos(2 * np.pi * X / grid.Lx))
    nz = np.argwhere(np.abs(c[:, 0]) > 1e-14).ravel()
    assert sorted(grid.k[nz]) == [-1, 1]
    assert np.allclose(c[nz, :], 0.5, atol=1e-15)


def test_round_trip(grid):
    f = np.random.default_rng(0).normal(size=grid.shape)
    back = to_physical(grid, to_spectral(grid, f))
    assert np.max(np.abs(back - f)) <= 1e-12 * np.max(np.abs(f))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_transform_linear_and_invertible(seed, a, b):
    g = Grid(Nx=8, Ny=6)
    rng = np.random.default_rng(seed)
    f1, f2 = rng.normal(size=(2, *g.shape))
    lhs = to_spectral(g, a * f1 + b * f2)
    rhs = a * to_spectral(g, f1) + b * to_spectral(g, f2)
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)))
    back = to_physical(g, to_spectral(g, f1))
    assert np.max(np.abs(back - f1)) <= 1e-12 * np.max(np.abs(f1))


# dx_pow ----------------------------------------------------------------------

def test_dx_pow_identity(grid):
    c = to_spectral(grid, smooth_field(grid, np.random.default_rng(1)))
    assert np.array_equal(dx_pow(grid, c, 0), c)


def test_dx_pow_third_power(grid):
    c = np.zeros(grid.shape, dtype=complex)
    c[1] = 1.0
    assert np.allclose(dx_pow(grid, c, 3)[1], -1j)


def test_dx_pow_second_derivative_of_sine(grid):
    X, Yg = grid.mesh()
    f = np.sin(X) * Yg * np.exp(-Yg)
    d2 = to_physical(grid, dx_pow(grid, to_spectral(grid, f), 2))
    assert np.max(np.abs(d2 + f)) <= 1e-12


def test_dx_pow_rejects_negative(grid):
    with pytest.raises(ValueError):
        dx_pow(grid, grid.zeros(), -1)


def test_dx_pow_against_dense_matrix():
    # independent oracle: dense Fourier differentiation matrix
    g = Grid(Nx=12, Ny=5)
    N = g.Nx
    x = g.x
    D = np.zeros((N, N))
    for i in range(N):
        for j in range(N):
            if i != j:
                D[i, j] = 0.5 * (-1) ** (i - j) / math.tan((x[i] - x[j]) / 2)
    f = smooth_field(g, np.random.default_rng(2), kmax=4)
    ours = to_physical(g, dx_pow(g, to_spectral(g, f), 1))
    assert np.allclose(ours, D @ f, atol=1e-12)


def test_dealias_removes_high_modes(grid):
    X, _ = grid.mesh()
    f = np.cos(7 * X) + np.cos(2 * X)
    out = dealias(grid, f)
    assert np.allclose(out, np.cos(2 * X), atol=1e-13)


# dy ---------------------------------------------------------------------------

def test_dy_linear_exact(grid):
    _, Yg = grid.mesh()
    assert np.max(np.abs(dy(grid, 3.0 * Yg + 1.0) - 3.0)) <= 1e-12


def test_dy_quadratic_second_derivative(grid):
    _, Yg = grid.mesh()
    assert np.max(np.abs(dy(grid, Yg**2, 2) - 2.0)) <= 1e-10
    assert np.max(np.abs(dy(grid, Yg**2, 1) - 2 * Yg)) <= 1e-10


def test_dy_rejects_order(grid):
    with pytest.raises(ValueError):
        dy(grid, grid.zeros(), 3)


def test_dy_refinement_rate():
    errs = []
    for ny in (39, 79, 159):
        g = Grid(Nx=4, Ny=ny, Y=3.0)
        _, Yg = g.mesh()
        errs.append(np.max(np.abs(dy(g, np.sin(Yg)) - np.cos(Yg))))
    rates = [math.log2(a / b) for a, b in zip(errs[:-1], errs[1:])]
    assert all(1.9 <= r <= 2.1 for r in rates), rates


# weighted_l2 ------------------------------------------------------------------

def test_weighted_l2_zero(grid):
    assert weighted_l2(grid, grid.zeros()) == 0.0


def test_weighted_l2_constant():
    g = Grid(Nx=8, Ny=2000, Y=1.0, ell=1.0)
    val = weighted_l2(g, np.ones(g.shape))
    assert val == pytest.approx(math.sqrt(2 * math.pi * 4 / 3), abs=1e-6)


def test_parseval(grid):
    f = smooth_field(grid, np.random.default_rng(3))
    a = weighted_l2(grid, f, 0.0)
    b = spectral_l2(grid, to_spectral(grid, f))
    assert abs(a - b) <= 1e-10 * a


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50).filter(lambda c: c == 0 or abs(c) > 1e-100))
def test_weighted_l2_norm_axioms(seed, c):
    g = Grid(Nx=8, Ny=10, Y=2.0)
    rng = np.random.default_rng(seed)
    f1, f2 = rng.normal(size=(2, *g.shape))
    n1 = weighted_l2(g, f1)
    assert weighted_l2(g, c * f1) == pytest.approx(abs(c) * n1, rel=1e-13, abs=1e-300)
    assert weighted_l2(g, f1 + f2) <= n1 + weighted_l2(g, f2) + 1e-12
