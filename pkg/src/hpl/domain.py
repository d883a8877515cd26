"""
Discretization of the strip (x, y) in T x [0, Y].

The tangential direction is periodic and handled pseudo-spectrally; the
wall-normal direction is a uniform grid with ``Ny`` interior nodes plus the
two boundary nodes ``y = 0`` and ``y = Y``.  Fields are plain ``numpy``
arrays of shape ``(Nx, Ny + 2)``; :class:`Grid` owns the geometry and checks
shapes at the operation boundary.

Spectral coefficients use the normalisation ``c_k = (1/Nx) sum_j f_j
exp(-i k x_j)`` so that ``cos(x)`` has coefficients ``1/2`` at ``k = +-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    """Field array does not match the grid it is used with."""


@dataclass(frozen=True)
class Grid:
    """Tangential-periodic x truncated half-line grid.

    Parameters
    ----------
    Nx : int
        Even number of tangential samples.
    Ny : int
        Number of interior wall-normal nodes.
    Y : float
        Truncation height of the half-line.
    Lx : float
        Tangential period.
    ell : float
        Exponent of the weight ``<y>^ell = (1 + y^2)^(ell/2)``; must exceed 1/2.
    dealias_cutoff : int, optional
        Largest retained wavenumber magnitude after nonlinear products.
        Defaults to ``Nx // 3``.
    """

    Nx: int
    Ny: int
    Y: float = 20.0
    Lx: float = 2 * np.pi
    ell: float = 1.0
    dealias_cutoff: int | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.Nx) != self.Nx or self.Nx < 4 or self.Nx % 2:
            raise ValueError(f"Nx must be an even integer >= 4, got {self.Nx}")
        if int(self.Ny) != self.Ny or self.Ny < 4:
            raise ValueError(f"Ny must be an integer >= 4, got {self.Ny}")
        if not self.Y > 0:
            raise ValueError(f"Y must be positive, got {self.Y}")
        if not self.Lx > 0:
            raise ValueError(f"Lx must be positive, got {self.Lx}")
        if not self.ell > 0.5:
            raise ValueError(f"ell must exceed 1/2, got {self.ell}")
        if self.dealias_cutoff is None:
            object.__setattr__(self, "dealias_cutoff", self.Nx // 3)
        if not 0 <= self.dealias_cutoff <= self.Nx // 2:
            raise ValueError(
                f"dealias_cutoff must lie in [0, Nx/2 = {self.Nx // 2}], got {self.dealias_cutoff}"
            )

    # geometry -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Ny + 2)

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return self.Y / (self.Ny + 1)

    @property
    def x(self) -> np.ndarray:
        return self.Lx * np.arange(self.Nx) / self.Nx

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.Y, self.Ny + 2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Yg)`` broadcast to the field shape."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order."""
        return np.fft.fftfreq(self.Nx, 1.0 / self.Nx)

    @property
    def kappa(self) -> np.ndarray:
        """Physical wavenumbers ``2 pi k / Lx``."""
        return 2 * np.pi * self.k / self.Lx

    @property
    def weight(self) -> np.ndarray:
        """``<y>^(2 ell)`` on the wall-normal nodes."""
        return (1.0 + self.y**2) ** self.ell

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def check(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise ShapeError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        return f

    def with_(self, **changes) -> "Grid":
        params = dict(Nx=self.Nx, Ny=self.Ny, Y=self.Y, Lx=self.Lx, ell=self.ell,
                      dealias_cutoff=self.dealias_cutoff)
        if "Nx" in changes and "dealias_cutoff" not in changes:
            params["dealias_cutoff"] = None
        params.update(changes)
        return Grid(**params)


# spectral transforms ------------------------------------------------------

def to_spectral(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Tangential Fourier coefficients, one column per wall-normal node."""
    f = grid.check(f)
    return np.fft.fft(f, axis=0) / grid.Nx


def to_physical(grid: Grid, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g)
    if g.shape != grid.shape:
        raise ShapeError(f"coefficients have shape {g.shape}, grid expects {grid.shape}")
    return np.fft.ifft(g * grid.Nx, axis=0).real


def dx_pow(grid: Grid, g: np.ndarray, m: int) -> np.ndarray:
    """Multiply coefficients by ``(i kappa)^m``.

    For odd ``m`` the Nyquist coefficient is dropped, since its derivative
    has no real-valued representation on the grid.
    """
    if m < 0 or int(m) != m:
        raise ValueError(f"derivative order must be a nonnegative integer, got {m}")
    if m == 0:
        return np.array(g, copy=True)
    mult = (1j * grid.kappa) ** m
    if m % 2:
        mult[grid.Nx // 2] = 0.0
    return g * mult[:, None]


def ddx(grid: Grid, f: np.ndarray, m: int = 1) -> np.ndarray:
    """Physical-space ``d^m f / dx^m`` (spectral)."""
    return to_physical(grid, dx_pow(grid, to_spectral(grid, f), m))


def dealias(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Zero every tangential mode with ``|k| > dealias_cutoff``."""
    g = to_spectral(grid, f)
    g[np.abs(grid.k) > grid.dealias_cutoff] = 0.0
    return to_physical(grid, g)


# wall-normal finite differences -------------------------------------------

def dy(grid: Grid, f: np.ndarray, order: int = 1) -> np.ndarray:
    """Second-order finite differences in ``y``.

    Centred at interior nodes; one-sided second-order stencils on both
    boundary rows.
    """
    f = grid.check(f)
    h = grid.dy
    out = np.empty_like(f, dtype=float)
    if order == 1:
        out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2 * h)
        out[:, 0] = (-3 * f[:, 0] + 4 * f[:, 1] - f[:, 2]) / (2 * h)
        out[:, -1] = (3 * f[:, -1] - 4 * f[:, -2] + f[:, -3]) / (2 * h)
    elif order == 2:
        out[:, 1:-1] = (f[:, 2:] - 2 * f[:, 1:-1] + f[:, :-2]) / h**2
        out[:, 0] = (2 * f[:, 0] - 5 * f[:, 1] + 4 * f[:, 2] - f[:, 3]) / h**2
        out[:, -1] = (2 * f[:, -1] - 5 * f[:, -2] + 4 * f[:, -3] - f[:, -4]) / h**2
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    return out


def trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.full(grid.Ny + 2, grid.dy)
    w[0] = w[-1] = grid.dy / 2
    return w


# norms ---------------------------------------------------------------------

def inner(grid: Grid, f: np.ndarray, g: np.ndarray, ell: float | None = None) -> float:
    """Weighted pairing ``int int <y>^(2 ell) f g dx dy``.

    Trapezoid rule in ``y``; rectangle rule in ``x`` (exact for resolved
    trigonometric polynomials).
    """
    ell = grid.ell if ell is None else ell
    wy = trapezoid_weights(grid) * (1.0 + grid.y**2) ** ell
    return float(grid.dx * np.sum(np.sum(f * g, axis=0) * wy))


def weighted_l2(grid: Grid, f: np.ndarray, ell: float | None = None) -> float:
    """``(int int <y>^(2 ell) f^2 dx dy)^(1/2)``; ``ell=0`` gives plain L2."""
    f = grid.check(f)
    return float(np.sqrt(max(inner(grid, f, f, ell), 0.0)))


def spectral_l2(grid: Grid, g: np.ndarray) -> float:
    """L2 norm computed from Fourier coefficients (Parseval)."""
    col = grid.Lx * np.sum(np.abs(g) ** 2, axis=0)
    return float(np.sqrt(np.sum(col * trapezoid_weights(grid))))
