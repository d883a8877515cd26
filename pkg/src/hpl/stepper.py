"""
Time integration.

The hyperbolic model is advanced as the first-order system ``u' = w``,
``w' = d_y^2 u - w + G(u, t)`` where ``G`` collects transport, pressure and
forcing.  One step is the symmetric (Strang) composition

    damping(dt/2) -> transport(dt/2) -> theta-diffusion(dt) -> transport(dt/2) -> damping(dt/2)

with the damping flow ``w' = -w`` integrated exactly, the transport flow
``w' = G(u, t)`` (``u`` frozen) by the midpoint rule and the wave part
``u' = w, w' = d_y^2 u`` by the theta scheme with one tridiagonal solve per
tangential node.  The parabolic model uses the same composition without the
damping stages, with Heun's method for the transport half-steps.  Both are
second order in ``dt`` at ``theta = 1/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .domain import Grid, dy, weighted_l2
from .model import (DiffusionOperator, ModelKind, NonFiniteError, OuterFlow,
                    physical_u, recover_v, transport_forcing)

COMPLETED = "completed"
BLOWUP = "blowup suspected"


class CFLError(RuntimeError):
    """The advective CFL condition rejects the configured ``dt``."""

    def __init__(self, dt: float, admissible: float, t: float):
        super().__init__(f"dt={dt:.3e} violates the advective CFL condition at t={t:.4g}; "
                         f"admissible dt <= {admissible:.3e}")
        self.dt = dt
        self.admissible = admissible
        self.t = t


@dataclass(frozen=True)
class State:
    grid: Grid
    u: np.ndarray
    ut: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.grid.check(self.u, "u")
        self.grid.check(self.ut, "ut")

    @classmethod
    def zero(cls, grid: Grid, t: float = 0.0) -> "State":
        return cls(grid, grid.zeros(), grid.zeros(), t)

    def validate(self) -> "State":
        for name, f in (("u", self.u), ("ut", self.ut)):
            if not np.all(np.isfinite(f)):
                raise NonFiniteError(name, self.t)
            if np.any(f[:, 0] != 0) or np.any(f[:, -1] != 0):
                raise ValueError(f"{name} must vanish on y=0 and y=Y")
        return self


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    theta: float = 0.5
    blowup_threshold: float = 1e8
    transport: bool = True
    monitor_every: int = 1
    snapshot_every: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.t_end > 0 and self.dt > self.t_end * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [1/2, 1], got {self.theta}")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if self.monitor_every < 1:
            raise ValueError("monitor_every must be >= 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")

    @property
    def nsteps(self) -> int:
        n = self.t_end / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(f"t_end={self.t_end} is not an integer multiple of dt={self.dt}")
        return int(round(n))


@dataclass
class RunResult:
    kind: ModelKind
    config: StepperConfig
    final: State
    status: str
    t_stop: float
    steps: int
    times: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    outer: OuterFlow | None = None

    @property
    def blew_up(self) -> bool:
        return self.status == BLOWUP


def admissible_dt(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    umax = float(np.max(np.abs(u)))
    vmax = float(np.max(np.abs(v)))
    bounds = [math.inf]
    if umax > 0:
        bounds.append(grid.dx / umax)
    if vmax > 0:
        bounds.append(grid.dy / vmax)
    return 0.5 * min(bounds)


class Stepper:
    """Holds the factorised implicit operators for a fixed ``dt``."""

    def __init__(self, kind, grid: Grid, cfg: StepperConfig, outer: OuterFlow | None = None):
        self.kind = ModelKind.parse(kind)
        self.grid = grid
        self.cfg = cfg
        self.outer = outer or OuterFlow()
        self.op = DiffusionOperator(grid)
        th, dt = cfg.theta, cfg.dt
        if self.kind is ModelKind.HYPERBOLIC:
            self.solver = self.op.implicit(th * th * dt * dt)
        else:
            self.solver = self.op.implicit(th * dt)

    def _forcing(self, u, t):
        return transport_forcing(self.kind, self.grid, u, self.outer, t, self.cfg.transport)

    def check_cfl(self, s: State):
        if not self.cfg.transport:
            return
        u = physical_u(self.grid, s.u, self.outer, s.t)
        limit = admissible_dt(self.grid, u, recover_v(self.grid, u))
        if self.cfg.dt > limit:
            raise CFLError(self.cfg.dt, limit, s.t)

    def _wave(self, u, w):
        op, dt, th = self.op, self.cfg.dt, self.cfg.theta
        ui, wi = u[:, 1:-1].T, w[:, 1:-1].T
        Bu = op.second_difference(u)
        Bw = op.second_difference(w)
        r = op.mass(wi) + dt * Bu + th * (1 - th) * dt * dt * Bw
        w_new = self.solver.solve_mass_rhs(r)
        u_new = ui + dt * ((1 - th) * wi + th * w_new)
        U = np.zeros_like(u)
        W = np.zeros_like(w)
        U[:, 1:-1] = u_new.T
        W[:, 1:-1] = w_new.T
        return U, W

    def _diffuse(self, u):
        op, dt, th = self.op, self.cfg.dt, self.cfg.theta
        r = op.mass(u[:, 1:-1].T) + (1 - th) * dt * op.second_difference(u)
        out = np.zeros_like(u)
        out[:, 1:-1] = self.solver.solve_mass_rhs(r).T
        return out

    def _heun(self, u, t, h):
        k1 = self._forcing(u, t)
        k2 = self._forcing(u + h * k1, t + h)
        return u + h / 2 * (k1 + k2)

    def step(self, s: State) -> State:
        dt = self.cfg.dt
        t = s.t
        self.check_cfl(s)
        if self.kind is ModelKind.HYPERBOLIC:
            decay = math.exp(-dt / 2)
            u = s.u
            w = s.ut * decay
            w = w + dt / 2 * self._forcing(u, t + dt / 4)
            u, w = self._wave(u, w)
            w = w + dt / 2 * self._forcing(u, t + 3 * dt / 4)
            w = w * decay
        else:
            h = dt / 2
            u = self._heun(s.u, t, h)
            u = self._diffuse(u)
            u = self._heun(u, t + h, h)
            w = np.zeros_like(u)
        u[:, 0] = u[:, -1] = 0.0
        w[:, 0] = w[:, -1] = 0.0
        if not np.all(np.isfinite(u)) or not np.all(np.isfinite(w)):
            raise NonFiniteError("state after step", t + dt)
        return State(self.grid, u, w, t + dt)


def step(kind, s: State, cfg: StepperConfig, outer: OuterFlow | None = None) -> State:
    """Advance one step.  Builds the implicit operators each call; use
    :class:`Stepper` or :func:`run` for repeated steps."""
    return Stepper(kind, s.grid, cfg, outer).step(s)


def _record(series, name, value):
    if isinstance(value, dict):
        for key, val in value.items():
            series.setdefault(f"{name}.{key}", []).append(float(val))
    else:
        series.setdefault(name, []).append(float(value))


def monitor_name(m) -> str:
    return getattr(m, "name", None) or getattr(m, "__name__", type(m).__name__)


def run(kind, s0: State, cfg: StepperConfig, outer: OuterFlow | None = None,
        monitors: Sequence[Callable] = (), on_step: Callable | None = None) -> RunResult:
    """Integrate from ``s0`` to ``cfg.t_end`` or until blowup is suspected.

    Monitors are pure observers called with the current :class:`State`; each
    returns a float or a dict of floats.  They run at step 0, every
    ``monitor_every`` steps, and at the final step.
    """
    kind = ModelKind.parse(kind)
    s0.validate()
    nsteps = cfg.nsteps
    result = RunResult(kind, cfg, s0, COMPLETED, s0.t, 0, outer=outer)
    names = [monitor_name(m) for m in monitors]

    def observe(s):
        if monitors:
            result.times.append(float(s.t))
            for name, m in zip(names, monitors):
                _record(result.series, name, m(s))

    observe(s0)
    if cfg.snapshot_every:
        result.snapshots.append(s0)
    if nsteps == 0:
        return result

    stepper = Stepper(kind, s0.grid, cfg, outer)
    s = s0
    for n in range(1, nsteps + 1):
        s = stepper.step(s)
        s = replace(s, t=s0.t + n * cfg.dt)
        blew_up = float(np.max(np.abs(s.u))) > cfg.blowup_threshold
        if n % cfg.monitor_every == 0 or n == nsteps or blew_up:
            observe(s)
        if cfg.snapshot_every and (n % cfg.snapshot_every == 0):
            result.snapshots.append(s)
        if on_step is not None:
            on_step(n, s)
        if blew_up:
            result.status = BLOWUP
            break
    result.final = s
    result.t_stop = s.t
    result.steps = n
    return result


# observers -------------------------------------------------------------------

def energy(s: State) -> float:
    """``||u_t||^2 + ||d_y u||^2`` (unweighted)."""
    g = s.grid
    return weighted_l2(g, s.ut, 0.0) ** 2 + weighted_l2(g, dy(g, s.u), 0.0) ** 2


def max_abs_u(s: State) -> float:
    return float(np.max(np.abs(s.u)))
