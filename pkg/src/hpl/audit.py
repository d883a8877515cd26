"""
Audits of stored hyperbolic runs.

``energy_audit`` evaluates, for one tangential order ``m``, every term of the
weighted energy balance obtained by pairing ``d_x^m`` of the momentum
equation with ``<y>^(2l) d_t d_x^m u``:

    1/2 ||<y>^l d_t u_m(t)||^2 + 1/2 ||<y>^l d_y u_m(t)||^2 + int_0^t ||<y>^l d_t u_m||^2
      = 1/2 ||<y>^l d_x^m u_1||^2 + 1/2 ||<y>^l d_y d_x^m u_0||^2
        - int_0^t (<y>^l L_m, <y>^l d_t u_m) - int_0^t (d_y u_m, (d_y <y>^(2l)) d_t u_m)

where ``L_m`` is the Leibniz expansion of ``d_x^m (u d_x u + v d_y u)``.  The
residual is reported as computed.

``theorem_ledger`` tracks the smallest constant compatible with the a priori
Gevrey estimate along a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import comb

from .domain import Grid, dx_pow, dy, inner, to_physical, to_spectral, trapezoid_weights
from .gevrey import assumption_lhs, default_M, derivative_ladder, weighted_sup
from .model import ModelKind, recover_v


class CadenceError(ValueError):
    pass


def _snapshots(history):
    snaps = getattr(history, "snapshots", history)
    snaps = list(snaps)
    if len(snaps) < 3:
        raise CadenceError(f"audit needs >= 3 snapshots at uniform cadence (snapshot_every >= 1 "
                           f"with at least two steps), got {len(snaps)}")
    t = np.array([s.t for s in snaps])
    dt = np.diff(t)
    if np.any(dt <= 0) or np.max(np.abs(dt - dt[0])) > 1e-9 * max(1.0, abs(t[-1])):
        raise CadenceError("snapshots are not uniformly spaced in time; store them with a fixed snapshot_every")
    return snaps, t


def _check_history(history):
    kind = getattr(history, "kind", ModelKind.HYPERBOLIC)
    if ModelKind.parse(kind) is not ModelKind.HYPERBOLIC:
        raise ValueError("the energy identity applies to hyperbolic runs only")
    outer = getattr(history, "outer", None)
    if outer is not None and not outer.is_homogeneous:
        raise ValueError("the energy audit requires U = 0, p_x = 0 and no body forcing")
    cfg = getattr(history, "config", None)
    if cfg is not None and not cfg.transport:
        return False
    return True


def _pow(grid, g, m):
    return to_physical(grid, dx_pow(grid, g, m))


def leibniz_term(grid: Grid, u, m: int, v=None) -> np.ndarray:
    """Product-rule sum ``sum_j C(m,j) [(d^j u) d^(m-j+1) u + (d^j v) d^(m-j) d_y u]``."""
    v = recover_v(grid, u) if v is None else v
    gu, gv, guy = to_spectral(grid, u), to_spectral(grid, v), to_spectral(grid, dy(grid, u))
    out = np.zeros(grid.shape)
    for j in range(m + 1):
        c = comb(m, j, exact=True)
        out += c * (_pow(grid, gu, j) * _pow(grid, gu, m - j + 1)
                    + _pow(grid, gv, j) * _pow(grid, guy, m - j))
    return out


def assembled_term(grid: Grid, u, m: int, v=None) -> np.ndarray:
    """``d_x^m`` of the assembled product ``u d_x u + v d_y u`` (spectral)."""
    v = recover_v(grid, u) if v is None else v
    prod = u * _pow(grid, to_spectral(grid, u), 1) + v * dy(grid, u)
    return _pow(grid, to_spectral(grid, prod), m)


def leibniz_pairing(grid: Grid, u, w, m: int, ell: float | None = None, method: str = "product_rule") -> float:
    """``(<y>^l L_m, <y>^l d_x^m w)`` evaluated by ``method``."""
    if method == "product_rule":
        L = leibniz_term(grid, u, m)
    elif method == "assembled":
        L = assembled_term(grid, u, m)
    else:
        raise ValueError(f"unknown method {method!r}")
    return inner(grid, L, _pow(grid, to_spectral(grid, w), m), ell)


def audit_terms(grid: Grid, u, w, m: int, ell: float, transport: bool = True) -> np.ndarray:
    """Per-snapshot integrands ``[E_t, E_y, damping, pairing, commutator]``."""
    um = _pow(grid, to_spectral(grid, u), m)
    wm = _pow(grid, to_spectral(grid, w), m)
    uym = dy(grid, um)
    e_t = 0.5 * inner(grid, wm, wm, ell)
    e_y = 0.5 * inner(grid, uym, uym, ell)
    damp = 2 * e_t
    pair = inner(grid, leibniz_term(grid, u, m), wm, ell) if transport else 0.0
    y = grid.y
    dweight = 2 * ell * y * (1 + y**2) ** (ell - 1)
    comm = float(grid.dx * np.sum(np.sum(uym * wm, axis=0) * dweight * trapezoid_weights(grid)))
    return np.array([e_t, e_y, damp, pair, comm])


@dataclass
class EnergyAudit:
    m: int
    ell: float
    times: np.ndarray
    lhs_series: np.ndarray       # (n, 3): half-norms and integrated damping
    initial: float
    pairing_series: np.ndarray   # -int_0^t transport pairing
    commutator_series: np.ndarray  # -int_0^t weight-commutator term
    residual_series: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.residual_series is None:
            self.residual_series = (self.lhs_series.sum(axis=1)
                                    - (self.initial + self.pairing_series + self.commutator_series))

    @property
    def lhs(self) -> tuple[float, float, float]:
        return tuple(float(x) for x in self.lhs_series[-1])

    @property
    def rhs(self) -> tuple[float, float, float, float]:
        return (float(self.initial), float(self.pairing_series[-1]),
                float(self.commutator_series[-1]), self.residual)

    @property
    def residual(self) -> float:
        return float(self.residual_series[-1])

    @property
    def lhs_total(self) -> float:
        return float(self.lhs_series[-1].sum())


def energy_audit(history, m: int, ell: float | None = None) -> EnergyAudit:
    transport = _check_history(history)
    snaps, t = _snapshots(history)
    grid = snaps[0].grid
    ell = grid.ell if ell is None else ell
    if m > grid.dealias_cutoff:
        raise ValueError(f"m={m} exceeds the resolvable order {grid.dealias_cutoff}")
    terms = np.array([audit_terms(grid, s.u, s.ut, m, ell, transport) for s in snaps])
    lhs = np.empty((len(t), 3))
    lhs[:, 0] = terms[:, 0]
    lhs[:, 1] = terms[:, 1]
    lhs[:, 2] = cumulative_trapezoid(terms[:, 2], t, initial=0.0)
    initial = terms[0, 0] + terms[0, 1]
    pairing = -cumulative_trapezoid(terms[:, 3], t, initial=0.0)
    comm = -cumulative_trapezoid(terms[:, 4], t, initial=0.0)
    return EnergyAudit(m, ell, t, lhs, float(initial), pairing, comm)


# a priori estimate ledger -------------------------------------------------------

def kr_bound(r: float, kmax: int = 10_000) -> tuple[float, float, bool]:
    """Exhaustive check of ``k r^k <= 1/(1-r)`` for ``k = 0..kmax``."""
    if not 0 < r < 1:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    k = np.arange(kmax + 1, dtype=float)
    with np.errstate(under="ignore"):
        vals = k * np.exp(k * math.log(r))
    worst = float(vals.max())
    bound = 1.0 / (1.0 - r)
    return worst, bound, bool(worst <= bound)


@dataclass
class PairLedger:
    rho: float
    rho_tilde: float
    times: np.ndarray
    lhs: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    chat: np.ndarray

    @property
    def running_sup(self) -> np.ndarray:
        return np.maximum.accumulate(self.chat)

    @property
    def sup(self) -> float:
        return float(self.running_sup[-1])

    def stabilized(self, tol: float = 0.10) -> bool:
        rs = self.running_sup
        q = rs[int(np.floor(0.75 * (len(rs) - 1)))]
        if not np.all(np.isfinite(rs)):
            return False
        if rs[-1] == 0:
            return True
        return bool((rs[-1] - q) / rs[-1] < tol)


@dataclass
class TheoremLedger:
    sigma: float
    rho0: float
    C0: float
    cstar: float
    pairs: list


def _check_pairs(pairs, rho0):
    for rho, rt in pairs:
        if not 0 < rho < rt <= rho0 <= 1:
            raise ValueError(f"pair (rho={rho}, rho_tilde={rt}) violates 0 < rho < rho_tilde <= rho0={rho0} <= 1")


def theorem_ledger(history, pairs: Sequence[tuple[float, float]], sigma: float,
                   rho0: float | None = None, M: int | None = None,
                   cstar: float | None = None) -> TheoremLedger:
    """Observed constant ``C(t) = LHS / (C0 + I1 + C_* I2)`` for every pair."""
    if not 1 <= sigma <= 2:
        raise ValueError(f"sigma must satisfy 1 <= sigma <= 2, got {sigma}")
    pairs = [(float(a), float(b)) for a, b in pairs]
    rho0 = max(b for _, b in pairs) if rho0 is None else rho0
    _check_pairs(pairs, rho0)
    snaps = list(getattr(history, "snapshots", history))
    if len(snaps) < 2:
        raise CadenceError("theorem ledger needs at least two snapshots")
    grid = snaps[0].grid
    M = default_M(grid) if M is None else M
    t = np.array([s.t for s in snaps])
    s0 = snaps[0]
    C0 = (weighted_sup(derivative_ladder(grid, s0.u, None, M), 2 * rho0, sigma) ** 2
          + weighted_sup(derivative_ladder(grid, s0.ut, None, M), 2 * rho0, sigma) ** 2)
    ladders = [derivative_ladder(grid, s.u, s.ut, M) for s in snaps]
    if cstar is None:
        cstar = max(1.0, max(assumption_lhs(grid, s.u) for s in snaps))
    out = []
    for rho, rt in pairs:
        n = np.array([weighted_sup(lad, rho, sigma) for lad in ladders])
        nt = np.array([weighted_sup(lad, rt, sigma) for lad in ladders])
        I1 = cumulative_trapezoid(n**2 + n**3, t, initial=0.0)
        I2 = cumulative_trapezoid(nt**2 / (rt - rho), t, initial=0.0)
        denom = C0 + I1 + cstar * I2
        with np.errstate(invalid="ignore", divide="ignore"):
            chat = np.where(denom > 0, n**2 / np.where(denom > 0, denom, 1.0), 0.0)
        out.append(PairLedger(rho, rt, t, n**2, I1, I2, chat))
    return TheoremLedger(sigma, rho0, float(C0), float(cstar), out)
