"""
Right-hand sides of the hyperbolic Prandtl system and its parabolic counterpart.

    (d_t^2 + d_t + u d_x + v d_y - d_y^2) u + d_x p = 0,   d_x u + d_y v = 0,

with ``u = v = 0`` on the wall.  A nonzero outer flow ``U(t, x)`` is handled
through the shifted unknown ``u~ = u - chi(y) U`` so that the Dirichlet data
stay homogeneous; the states the stepper advances always hold ``u~``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import lapack

from .domain import Grid, ddx, dealias, dy


class ModelKind(enum.Enum):
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"model must be one of {[k.value for k in cls]}, got {value!r}") from None


class NonFiniteError(FloatingPointError):
    """NaN or Inf met while assembling a right-hand side."""

    def __init__(self, term: str, t: float):
        super().__init__(f"non-finite values in {term} at t={t:.6g}")
        self.term = term
        self.t = t


def _zero(t, x):
    return np.zeros_like(x)


def _fd_t(fn, order, h=1e-3):
    # fourth-order central differences in t
    if order == 1:
        return lambda t, x: (-fn(t + 2 * h, x) + 8 * fn(t + h, x) - 8 * fn(t - h, x) + fn(t - 2 * h, x)) / (12 * h)
    return lambda t, x: (-fn(t + 2 * h, x) + 16 * fn(t + h, x) - 30 * fn(t, x)
                         + 16 * fn(t - h, x) - fn(t - 2 * h, x)) / (12 * h**2)


@dataclass(frozen=True)
class OuterFlow:
    """Outer tangential velocity ``U(t, x)`` and pressure gradient ``dp/dx(t, x)``.

    ``U_t`` and ``U_tt`` default to finite differences of ``U``.  ``forcing``
    is an optional body force ``f(t, X, Yg)`` added to the momentum balance;
    it is how manufactured solutions are injected.
    """

    U: Callable | None = None
    dpdx: Callable | None = None
    U_t: Callable | None = None
    U_tt: Callable | None = None
    forcing: Callable | None = None

    @property
    def has_outer_velocity(self) -> bool:
        return self.U is not None

    @property
    def is_homogeneous(self) -> bool:
        return self.U is None and self.dpdx is None and self.forcing is None

    def velocity(self, t, x):
        return _zero(t, x) if self.U is None else np.asarray(self.U(t, x), dtype=float)

    def velocity_t(self, t, x):
        if self.U is None:
            return _zero(t, x)
        return np.asarray((self.U_t or _fd_t(self.U, 1))(t, x), dtype=float)

    def velocity_tt(self, t, x):
        if self.U is None:
            return _zero(t, x)
        return np.asarray((self.U_tt or _fd_t(self.U, 2))(t, x), dtype=float)

    def pressure_gradient(self, t, x):
        return _zero(t, x) if self.dpdx is None else np.asarray(self.dpdx(t, x), dtype=float)

    def compatibility_residual(self, grid: Grid, t: float) -> float:
        """``max |U_tt + U_t + U U_x + p_x|`` on the tangential nodes."""
        x = grid.x
        U = self.velocity(t, x)
        Ux = ddx(grid, np.repeat(U[:, None], grid.Ny + 2, axis=1))[:, 0]
        r = self.velocity_tt(t, x) + self.velocity_t(t, x) + U * Ux + self.pressure_gradient(t, x)
        return float(np.max(np.abs(r)))

    def check_compatibility(self, grid: Grid, t: float, tol: float = 1e-6) -> float:
        if self.U is None or self.dpdx is None:
            return 0.0
        r = self.compatibility_residual(grid, t)
        if r > tol:
            raise ValueError(f"outer flow violates U_tt + U_t + U U_x + p_x = 0: residual {r:.3e} > {tol:.1e}")
        return r


def cutoff(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Smooth cutoff ``chi`` (``chi(0) = 0``, ``chi = 1`` for ``y >= Y/2``) and ``chi''``."""
    half = grid.Y / 2
    s = np.clip(grid.y / half, 0.0, 1.0)
    chi = s**4 * (35 - 84 * s + 70 * s**2 - 20 * s**3)
    chi2 = (420 * s**2 - 1680 * s**3 + 2100 * s**4 - 840 * s**5) / half**2
    return chi, chi2


def physical_u(grid: Grid, u_shifted: np.ndarray, outer: OuterFlow, t: float) -> np.ndarray:
    if not outer.has_outer_velocity:
        return u_shifted
    chi, _ = cutoff(grid)
    return u_shifted + outer.velocity(t, grid.x)[:, None] * chi[None, :]


def recover_v(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Normal velocity ``v = -int_0^y d_x u`` by cumulative trapezoid; ``v(x, 0) = 0``."""
    ux = ddx(grid, grid.check(u, "u"))
    return -cumulative_trapezoid(ux, dx=grid.dy, axis=1, initial=0.0)


def nonlinear_term(grid: Grid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Dealiased transport ``u d_x u + v d_y u`` with zeroed boundary rows."""
    n = dealias(grid, u * ddx(grid, u) + v * dy(grid, u))
    n[:, 0] = 0.0
    n[:, -1] = 0.0
    return n


class DiffusionOperator:
    """Wall-normal second derivative on the interior nodes.

    Fourth-order compact (Pade) stencil
    ``(f''_{i-1} + 10 f''_i + f''_{i+1}) / 12 = (f_{i-1} - 2 f_i + f_{i+1}) / dy^2``
    away from the boundaries, with the explicit three-point stencil on the
    first and last interior rows.  Every implicit system stays tridiagonal.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        n = grid.Ny
        self.a_diag = np.full(n, 10.0 / 12.0)
        self.a_lo = np.full(n - 1, 1.0 / 12.0)
        self.a_up = np.full(n - 1, 1.0 / 12.0)
        self.a_diag[0] = self.a_diag[-1] = 1.0
        self.a_up[0] = 0.0
        self.a_lo[-1] = 0.0
        self._lu = self._factor(self.a_lo, self.a_diag, self.a_up)

    @staticmethod
    def _factor(lo, d, up):
        dl, dd, du, du2, ipiv, info = lapack.dgttrf(lo, d, up)
        if info:
            raise np.linalg.LinAlgError(f"tridiagonal factorisation failed (info={info})")
        return dl, dd, du, du2, ipiv

    @staticmethod
    def _solve(lu, rhs):
        x, info = lapack.dgttrs(*lu, rhs)
        if info:
            raise np.linalg.LinAlgError(f"tridiagonal solve failed (info={info})")
        return x

    def second_difference(self, f: np.ndarray) -> np.ndarray:
        """``(f_{i-1} - 2 f_i + f_{i+1}) / dy^2`` at interior nodes, shape ``(Ny, Nx)``."""
        return ((f[:, :-2] - 2 * f[:, 1:-1] + f[:, 2:]) / self.grid.dy**2).T

    def mass(self, f_int: np.ndarray) -> np.ndarray:
        """Apply the compact mass matrix to interior values of shape ``(Ny, Nx)``."""
        out = self.a_diag[:, None] * f_int
        out[:-1] += self.a_up[:, None] * f_int[1:]
        out[1:] += self.a_lo[:, None] * f_int[:-1]
        return out

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``d_y^2 f`` on the full grid (boundary rows zero)."""
        f = self.grid.check(f)
        out = np.zeros_like(f, dtype=float)
        out[:, 1:-1] = self._solve(self._lu, self.second_difference(f)).T
        return out

    def implicit(self, c: float) -> "ImplicitSolver":
        """Solver for ``(I - c d_y^2) z = r`` with homogeneous Dirichlet data."""
        return ImplicitSolver(self, c)


class ImplicitSolver:
    def __init__(self, op: DiffusionOperator, c: float):
        self.op = op
        self.c = c
        h2 = op.grid.dy**2
        d = op.a_diag + 2 * c / h2
        lo = op.a_lo - c / h2
        up = op.a_up - c / h2
        self._lu = op._factor(lo, d, up)

    def solve_mass_rhs(self, rhs_int: np.ndarray) -> np.ndarray:
        """Solve ``(A - c B) z = rhs`` where ``rhs`` is already multiplied by ``A``."""
        return self.op._solve(self._lu, rhs_int)


def transport_forcing(kind: ModelKind, grid: Grid, u_shifted: np.ndarray, outer: OuterFlow,
                      t: float, transport: bool = True) -> np.ndarray:
    """Every explicit term of the momentum balance.

    ``-N(u) - p_x + f`` plus the shift terms produced by ``u = u~ + chi U``.
    """
    x = grid.x
    out = np.zeros(grid.shape)
    if transport:
        u = physical_u(grid, u_shifted, outer, t)
        if not np.all(np.isfinite(u)):
            raise NonFiniteError("u", t)
        n = nonlinear_term(grid, u, recover_v(grid, u))
        if not np.all(np.isfinite(n)):
            raise NonFiniteError("transport u*d_x u + v*d_y u", t)
        out -= n
    if outer.dpdx is not None:
        out -= outer.pressure_gradient(t, x)[:, None]
    if outer.forcing is not None:
        X, Yg = grid.mesh()
        out += outer.forcing(t, X, Yg)
    if outer.has_outer_velocity:
        chi, chi2 = cutoff(grid)
        U = outer.velocity(t, x)
        if kind is ModelKind.HYPERBOLIC:
            acc = outer.velocity_tt(t, x) + outer.velocity_t(t, x)
        else:
            acc = outer.velocity_t(t, x)
        out += -acc[:, None] * chi[None, :] + U[:, None] * chi2[None, :]
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("outer-flow forcing", t)
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


def rhs(kind: ModelKind, state, outer: OuterFlow, t: float | None = None,
        transport: bool = True, diffusion: DiffusionOperator | None = None) -> np.ndarray:
    """Hyperbolic: ``u_tt = F``; parabolic: ``u_t = F``.

    ``F = d_y^2 u - u_t - N(u) - p_x`` (the ``-u_t`` term only for the
    hyperbolic model).  Boundary rows are zero.
    """
    kind = ModelKind.parse(kind)
    grid = state.grid
    t = state.t if t is None else t
    if not np.all(np.isfinite(state.u)):
        raise NonFiniteError("u", t)
    op = diffusion or DiffusionOperator(grid)
    F = op.apply(state.u)
    if not np.all(np.isfinite(F)):
        raise NonFiniteError("diffusion d_y^2 u", t)
    if kind is ModelKind.HYPERBOLIC:
        if not np.all(np.isfinite(state.ut)):
            raise NonFiniteError("u_t", t)
        F -= state.ut
    F += transport_forcing(kind, grid, state.u, outer, t, transport)
    F[:, 0] = 0.0
    F[:, -1] = 0.0
    return F
