"""Observed orders of accuracy from nested refinements."""

from __future__ import annotations

import math

import numpy as np

from .domain import Grid


def restrict(fine: Grid, u: np.ndarray, coarse: Grid) -> np.ndarray:
    """Sample ``u`` from ``fine`` at the nodes of ``coarse``; the grids must nest."""
    if abs(fine.Y - coarse.Y) > 1e-12 or abs(fine.Lx - coarse.Lx) > 1e-12:
        raise ValueError("grids cover different domains")
    if fine.Nx % coarse.Nx or (fine.Ny + 1) % (coarse.Ny + 1):
        raise ValueError(f"grid ({fine.Nx}, {fine.Ny}) does not nest over ({coarse.Nx}, {coarse.Ny})")
    return np.asarray(u)[:: fine.Nx // coarse.Nx, :: (fine.Ny + 1) // (coarse.Ny + 1)]


def self_convergence_order(solutions, ratio: float) -> float:
    """``log(|u1 - u2| / |u2 - u3|) / log(ratio)`` in the max norm.

    ``solutions`` holds three ``(grid, u)`` pairs from coarse to fine; every
    field is compared at the nodes of the coarsest grid.
    """
    if len(solutions) != 3:
        raise ValueError("self-convergence needs exactly three solutions")
    g0 = solutions[0][0]
    u1, u2, u3 = (restrict(g, u, g0) for g, u in solutions)
    e12 = float(np.max(np.abs(u1 - u2)))
    e23 = float(np.max(np.abs(u2 - u3)))
    if e23 == 0 or e12 == 0:
        return float("nan")
    return math.log(e12 / e23) / math.log(ratio)


def order_vs_exact(errors, ratio: float) -> list[float]:
    """Successive orders ``log(e_i / e_{i+1}) / log(ratio)``."""
    return [math.log(a / b) / math.log(ratio) for a, b in zip(errors[:-1], errors[1:])]


def refinement_ratio(key: str, values) -> float:
    """Constant ratio of a refinement sequence for parameter ``key``."""
    v = [float(x) + (1.0 if key == "Ny" else 0.0) for x in values]
    ratios = [max(a, b) / min(a, b) for a, b in zip(v[:-1], v[1:])]
    if any(abs(r - ratios[0]) > 1e-9 * ratios[0] for r in ratios) or ratios[0] <= 1:
        raise ValueError(f"{key} values {list(values)} are not a geometric refinement")
    return ratios[0]
