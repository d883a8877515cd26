import math

import numpy as np
import pytest

from hpl.convergence import order_vs_exact, refinement_ratio, restrict, self_convergence_order
from hpl.domain import Grid


def test_restrict_nested():
    coarse, fine = Grid(Nx=8, Ny=9), Grid(Nx=16, Ny=19)
    Xf, Yf = fine.mesh()
    Xc, Yc = coarse.mesh()
    assert np.allclose(restrict(fine, Xf + Yf, coarse), Xc + Yc)


def test_restrict_rejects_non_nested():
    with pytest.raises(ValueError, match="nest"):
        restrict(Grid(Nx=16, Ny=18), np.zeros((16, 20)), Grid(Nx=8, Ny=9))
    with pytest.raises(ValueError, match="domains"):
        restrict(Grid(Nx=16, Ny=19, Y=2.0), np.zeros((16, 21)), Grid(Nx=8, Ny=9))


def test_self_convergence_recovers_known_order():
    grids = [Grid(Nx=4, Ny=n, Y=1.0) for n in (9, 19, 39)]
    sols = []
    for g in grids:
        _, Yg = g.mesh()
        sols.append((g, np.sin(Yg) + g.dy**2 * np.cos(Yg)))
    assert self_convergence_order(sols, 2.0) == pytest.approx(2.0, abs=1e-10)


def test_order_vs_exact():
    assert order_vs_exact([1.0, 0.25, 0.0625], 2.0) == pytest.approx([2.0, 2.0])


def test_refinement_ratio():
    assert refinement_ratio("dt", [0.004, 0.002, 0.001]) == pytest.approx(2.0)
    assert refinement_ratio("Ny", [319, 639, 1279]) == pytest.approx(2.0)
    with pytest.raises(ValueError, match="geometric"):
        refinement_ratio("dt", [0.004, 0.002, 0.0005])
    assert math.isnan(self_convergence_order([(Grid(Nx=4, Ny=4), np.zeros((4, 6)))] * 3, 2.0))
