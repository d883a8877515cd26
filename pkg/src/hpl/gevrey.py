"""
Weighted Gevrey norms and radius-of-analyticity diagnostics.

For a field ``u`` with time derivative ``u_t`` the ladder entry at order ``m`` is
the triple

    ( ||<y>^l d_t d_x^m u||,  ||<y>^l d_y d_x^m u||,  m ||<y>^l d_x^m u|| )

and the norm is

    sup_{m >= 7} rho^(m-7) / ((m-7)!)^sigma * b_m  +  sup_{m <= 6} b_m,

with ``b_m`` the sum of the triple, truncated at ``m <= M``.  Factorial
weights are accumulated in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .domain import Grid, dx_pow, dy, to_physical, to_spectral, weighted_l2

OFFSET = 7


@dataclass(frozen=True)
class GevreyParams:
    rho: float
    sigma: float
    M: int = 32
    offset: int = OFFSET

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must satisfy 0 < rho <= 1, got {self.rho}")
        if not 1 <= self.sigma <= 2:
            raise ValueError(f"sigma must satisfy 1 <= sigma <= 2, got {self.sigma}")
        if self.M < 8:
            raise ValueError(f"M must be >= 8, got {self.M}")
        if self.M <= self.offset:
            raise ValueError(f"M={self.M} must exceed offset={self.offset}")


@dataclass
class GevreyReport:
    t: float
    ladder: np.ndarray
    norm: float
    rho_hat: float | None
    fit_quality: float
    sigma_used: float
    reliable: bool = True
    argmax: tuple = field(default=(0, OFFSET))


@dataclass(frozen=True)
class RadiusFit:
    rho_hat: float | None
    fit_quality: float
    reliable: bool
    slope: float = float("nan")
    orders: tuple = ()


class LadderOrderError(ValueError):
    pass


def default_M(grid: Grid) -> int:
    return min(32, grid.dealias_cutoff)


def derivative_ladder(grid: Grid, u: np.ndarray, ut: np.ndarray | None, M: int | None = None) -> np.ndarray:
    """Weighted derivative norms for ``m = 0..M``; shape ``(M+1, 3)``.

    ``ut=None`` gives the time-independent form (first column zero).  Modes
    above the dealiasing cutoff are discarded first: they carry only
    round-off and would otherwise dominate the high orders.
    """
    M = default_M(grid) if M is None else M
    if M > grid.dealias_cutoff:
        raise LadderOrderError(
            f"M={M} exceeds the resolvable order; largest resolvable M is {grid.dealias_cutoff}")
    keep = (np.abs(grid.k) <= grid.dealias_cutoff)[:, None]
    gu = to_spectral(grid, u) * keep
    gut = None if ut is None else to_spectral(grid, ut) * keep
    out = np.zeros((M + 1, 3))
    for m in range(M + 1):
        um = to_physical(grid, dx_pow(grid, gu, m))
        if gut is not None:
            out[m, 0] = weighted_l2(grid, to_physical(grid, dx_pow(grid, gut, m)))
        out[m, 1] = weighted_l2(grid, dy(grid, um))
        out[m, 2] = m * weighted_l2(grid, um)
    return out


def log_weights(M: int, rho: float, sigma: float, offset: int = OFFSET) -> np.ndarray:
    """``log(rho^(m-offset) / ((m-offset)!)^sigma)`` for ``m = offset..M``."""
    j = np.arange(M - offset + 1)
    return j * math.log(rho) - sigma * gammaln(j + 1)


def _orders_sum(ladder) -> np.ndarray:
    ladder = np.asarray(ladder, dtype=float)
    return ladder.sum(axis=1) if ladder.ndim == 2 else ladder


def block_sups(ladder, rho: float, sigma: float, M: int | None = None, offset: int = OFFSET):
    """Return ``(low_sup, m_low, high_sup, m_high)``; smallest ``m`` wins ties."""
    b = _orders_sum(ladder)
    M = len(b) - 1 if M is None else M
    if len(b) < M + 1:
        raise ValueError(f"ladder has {len(b)} orders, needs M+1 = {M + 1}")
    low = b[: min(offset, M + 1)]
    m_low = int(np.argmax(low))
    if M < offset:
        return float(low[m_low]), m_low, 0.0, offset
    high = b[offset: M + 1]
    with np.errstate(divide="ignore"):
        logs = np.where(high > 0, np.log(np.where(high > 0, high, 1.0)), -np.inf)
    logs = logs + log_weights(M, rho, sigma, offset)
    j = int(np.argmax(logs))
    high_val = float(np.exp(logs[j])) if np.isfinite(logs[j]) else 0.0
    return float(low[m_low]), m_low, high_val, offset + j


def weighted_sup(ladder, rho: float, sigma: float, M: int | None = None, offset: int = OFFSET) -> float:
    """Norm kernel without parameter-range checks (used for ``rho > 1``)."""
    low, _, high, _ = block_sups(ladder, rho, sigma, M, offset)
    return low + high


def gevrey_norm(ladder, params: GevreyParams) -> float:
    M = min(params.M, len(_orders_sum(ladder)) - 1)
    return weighted_sup(ladder, params.rho, params.sigma, M, params.offset)


def attaining_orders(ladder, params: GevreyParams) -> tuple[int, int]:
    """Orders ``(m_low, m_high)`` attaining the two suprema."""
    M = min(params.M, len(_orders_sum(ladder)) - 1)
    _, m_low, _, m_high = block_sups(ladder, params.rho, params.sigma, M, params.offset)
    return m_low, m_high


def estimate_radius(ladder, sigma: float, offset: int = OFFSET, min_orders: int = 6,
                    weights=None, quality_threshold: float = 0.999) -> RadiusFit:
    """Fit ``log b_m - sigma log((m-7)!) = log C + (m-7) log(1/rho)``.

    The slope ``s`` gives ``rho_hat = exp(-s)``.  The fit is flagged
    unreliable when fewer than ``min_orders`` usable orders exist or the
    coefficient of determination falls below ``quality_threshold``.
    """
    b = _orders_sum(ladder)
    m = np.arange(len(b))
    use = (m > offset) & (b > 0) & np.isfinite(b)
    if use.sum() < min_orders:
        return RadiusFit(None, float("nan"), False)
    j = (m[use] - offset).astype(float)
    z = np.log(b[use]) - sigma * gammaln(j + 1)
    w = np.ones_like(j) if weights is None else np.asarray(weights, dtype=float)[use]
    A = np.stack([np.ones_like(j), j], axis=1) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(A, z * np.sqrt(w), rcond=None)
    pred = coef[0] + coef[1] * j
    zbar = np.average(z, weights=w)
    ss_tot = float(np.sum(w * (z - zbar) ** 2))
    ss_res = float(np.sum(w * (z - pred) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    rho_hat = math.exp(-coef[1])
    reliable = bool(r2 >= quality_threshold and np.isfinite(rho_hat))
    return RadiusFit(rho_hat, r2, reliable, float(coef[1]), tuple(int(k) for k in m[use]))


def report(grid: Grid, u, ut, params: GevreyParams, t: float = 0.0) -> GevreyReport:
    M = min(params.M, grid.dealias_cutoff)
    lad = derivative_ladder(grid, u, ut, M)
    fit = estimate_radius(lad, params.sigma, params.offset)
    return GevreyReport(t, lad, gevrey_norm(lad, params), fit.rho_hat, fit.fit_quality,
                        params.sigma, fit.reliable, attaining_orders(lad, params))


@dataclass(frozen=True)
class AssumptionCheck:
    observed: float
    passed: bool
    budget: float


def assumption_lhs(grid: Grid, u) -> float:
    """``sup_{m<=2} ||d_x^m u|| + sup_{m<=2} ||d_x^m d_y u||`` (unweighted L2)."""
    g = to_spectral(grid, u)
    a = b = 0.0
    for m in range(3):
        um = to_physical(grid, dx_pow(grid, g, m))
        a = max(a, weighted_l2(grid, um, 0.0))
        b = max(b, weighted_l2(grid, dy(grid, um), 0.0))
    return a + b


def check_assumption(grid: Grid, u, ut=None, budget: float = 10.0) -> AssumptionCheck:
    """Low-order bound monitor; ``ut`` is accepted for interface symmetry."""
    obs = assumption_lhs(grid, u)
    return AssumptionCheck(obs, bool(np.isfinite(obs) and obs <= budget), budget)
