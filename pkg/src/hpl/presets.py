"""Initial-data presets.

Each preset returns ``(State, OuterFlow, exact)`` where ``exact(t)`` is the
closed-form solution when one is known and ``None`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .domain import Grid, dy, trapezoid_weights
from .gevrey import estimate_radius
from .model import ModelKind, OuterFlow
from .stepper import State


@dataclass
class Preset:
    state: State
    outer: OuterFlow
    exact: Callable | None = None
    description: str = ""


def _pin(f):
    f = np.array(f, dtype=float)
    f[:, 0] = 0.0
    f[:, -1] = 0.0
    return f


def _profile(grid: Grid, name: str, n: int = 1, a: float = 5.0, b: float = 6.0):
    y = grid.y
    if name == "sin":
        return np.sin(n * np.pi * y / grid.Y)
    if name == "yexp":
        return y**n * np.exp(-y)
    if name == "bump":
        r = (2 * y - (a + b)) / (b - a)
        inside = np.abs(r) < 1
        out = np.zeros_like(y)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out
    raise ValueError(f"unknown profile {name!r}; expected sin, yexp or bump")


def zero(grid: Grid) -> Preset:
    return Preset(State.zero(grid), OuterFlow(), lambda t: grid.zeros(), "zero")


def mode(grid: Grid, k: int = 1, n: int = 1, amplitude: float = 0.1, profile: str = "sin") -> Preset:
    """``amplitude * sin(k x') * phi_n(y)`` with ``x' = 2 pi x / Lx``; ``u_t = 0``."""
    if abs(k) > grid.dealias_cutoff:
        raise ValueError(f"mode k={k} exceeds dealias_cutoff={grid.dealias_cutoff}")
    x = 2 * np.pi * grid.x / grid.Lx
    u = amplitude * np.sin(k * x)[:, None] * _profile(grid, profile, n)[None, :]
    return Preset(State(grid, _pin(u), grid.zeros()), OuterFlow(), None, f"mode(k={k}, n={n})")


def shear(grid: Grid, profile: str = "sin", n: int = 1, amplitude: float = 1.0,
          a: float = 5.0, b: float = 6.0) -> Preset:
    """x-independent data ``amplitude * phi(y)``."""
    phi = _profile(grid, profile, n, a, b)
    u = np.repeat((amplitude * phi)[None, :], grid.Nx, axis=0)
    exact = None
    if profile == "sin":
        lam = n * np.pi / grid.Y

        def exact(t, kind=ModelKind.HYPERBOLIC, lam=lam):
            return amplitude * damped_mode_factor(lam, t) * np.repeat(phi[None, :], grid.Nx, axis=0)
    return Preset(State(grid, _pin(u), grid.zeros()), OuterFlow(), exact, f"shear({profile})")


def damped_mode_factor(lam: float, t: float) -> float:
    """Solution of ``a'' + a' + lam^2 a = 0``, ``a(0) = 1``, ``a'(0) = 0``."""
    disc = lam * lam - 0.25
    if disc > 0:
        w = math.sqrt(disc)
        return math.exp(-t / 2) * (math.cos(w * t) + math.sin(w * t) / (2 * w))
    if disc == 0:
        return math.exp(-t / 2) * (1 + t / 2)
    s = math.sqrt(-disc)
    return math.exp(-t / 2) * (math.cosh(s * t) + math.sinh(s * t) / (2 * s))


# manufactured solution ----------------------------------------------------------
#   u* = exp(-t) sin(q x) s(y),  s = y exp(-y),  q = 2 pi / Lx
#   v* = -exp(-t) q cos(q x) I(y),  I = 1 - (1 + y) exp(-y)

def manufactured_fields(grid: Grid, t: float, X=None, Yg=None):
    if X is None:
        X, Yg = grid.mesh()
    q = 2 * np.pi / grid.Lx
    e = math.exp(-t)
    s = Yg * np.exp(-Yg)
    u = e * np.sin(q * X) * s
    v = -e * q * np.cos(q * X) * (1 - (1 + Yg) * np.exp(-Yg))
    return u, v


def manufactured_forcing(kind: ModelKind, grid: Grid):
    q = 2 * np.pi / grid.Lx
    kind = ModelKind.parse(kind)

    def f(t, X, Yg):
        e = math.exp(-t)
        S, C = np.sin(q * X), np.cos(q * X)
        ey = np.exp(-Yg)
        s, s1, s2 = Yg * ey, (1 - Yg) * ey, (Yg - 2) * ey
        integral = 1 - (1 + Yg) * ey
        transport = e * e * q * S * C * (s * s - integral * s1)
        out = transport - e * S * s2
        if kind is ModelKind.PARABOLIC:
            out = out - e * S * s
        return out
    return f


def manufactured(grid: Grid, kind=ModelKind.HYPERBOLIC) -> Preset:
    kind = ModelKind.parse(kind)
    u0, _ = manufactured_fields(grid, 0.0)
    ut0 = -u0 if kind is ModelKind.HYPERBOLIC else grid.zeros()

    def exact(t):
        return _pin(manufactured_fields(grid, t)[0])
    outer = OuterFlow(forcing=manufactured_forcing(kind, grid))
    return Preset(State(grid, _pin(u0), _pin(ut0)), outer, exact, "manufactured")


# Gevrey seed ---------------------------------------------------------------------

def _seed_ladder(c, sigma, kk, ms, A, B, Lx):
    # log of (A + m B) ||g^(m)|| for g = sum_k exp(-c k^(1/sigma)) cos(k x), x-period 2 pi
    loga2 = -2 * c * kk ** (1.0 / sigma)
    terms = 2 * ms[:, None] * np.log(kk)[None, :] + loga2[None, :]
    return 0.5 * (logsumexp(terms, axis=1) + math.log(Lx / 2)) + np.log(A + ms * B)


def gevrey_seed(grid: Grid, rho: float = 0.5, sigma: float = 2.0, amplitude: float = 0.1,
                M: int = 16) -> Preset:
    """Band-limited data whose ladder follows ``C ((m-7)!)^sigma rho^-(m-7)``.

    The field is ``g(x) phi(y)`` with ``phi = y exp(-y)`` and
    ``g = sum_k exp(-c k^(1/sigma)) cos(k x)`` over the retained modes.  Such
    coefficients give derivative growth of Gevrey class ``sigma``; the rate
    ``c`` is calibrated so that :func:`estimate_radius` applied to the exact
    ladder on orders ``8..M`` returns ``rho``.
    """
    if not 0 < rho <= 1 or not 1 <= sigma <= 2:
        raise ValueError("gevrey_seed needs 0 < rho <= 1 and 1 <= sigma <= 2")
    if M > grid.dealias_cutoff:
        raise ValueError(f"M={M} exceeds dealias_cutoff={grid.dealias_cutoff}")
    if abs(grid.Lx - 2 * np.pi) > 1e-12:
        raise ValueError("gevrey_seed assumes the tangential period 2 pi")
    y = grid.y
    phi = y * np.exp(-y)
    wy = trapezoid_weights(grid) * (1 + y**2) ** grid.ell
    dphi = dy(grid, np.repeat(phi[None, :], grid.Nx, axis=0))[0]
    A = math.sqrt(np.sum(wy * dphi**2))
    B = math.sqrt(np.sum(wy * phi**2))
    kk = np.arange(1, grid.dealias_cutoff + 1, dtype=float)
    ms = np.arange(M + 1)

    def log_rho_hat(c):
        lad = np.exp(_seed_ladder(c, sigma, kk, ms, A, B, grid.Lx) - 50.0)
        return math.log(estimate_radius(lad, sigma, min_orders=1).rho_hat) - math.log(rho)

    try:
        c = brentq(log_rho_hat, 1e-3, 50.0, xtol=1e-12)
    except ValueError:
        raise ValueError(f"cannot synthesise rho={rho}, sigma={sigma} up to M={M} "
                         f"with {len(kk)} modes; increase Nx") from None
    a = np.exp(-c * kk ** (1.0 / sigma))
    x = grid.x
    g = np.cos(np.outer(x, kk)) @ a
    g *= amplitude / np.max(np.abs(g))
    u = g[:, None] * phi[None, :]
    return Preset(State(grid, _pin(u), grid.zeros()), OuterFlow(), None,
                  f"gevrey_seed(rho={rho}, sigma={sigma}, c={c:.6g})")


PRESETS = {
    "zero": zero,
    "mode": mode,
    "shear": shear,
    "gevrey_seed": gevrey_seed,
    "manufactured": manufactured,
}


def build(name: str, grid: Grid, kind=ModelKind.HYPERBOLIC, **params) -> Preset:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    if name == "manufactured":
        return manufactured(grid, kind)
    return PRESETS[name](grid, **params)
