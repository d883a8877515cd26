import math

import numpy as np
import pytest

from hpl.domain import Grid
from hpl.model import ModelKind, OuterFlow
from hpl.presets import damped_mode_factor, manufactured, mode, shear
from hpl.stepper import (BLOWUP, COMPLETED, CFLError, State, StepperConfig, energy, max_abs_u,
                         run, step)

H, P = ModelKind.HYPERBOLIC, ModelKind.PARABOLIC


@pytest.mark.parametrize("kw", [dict(dt=0.0, t_end=1.0), dict(dt=0.1, t_end=0.05),
                                dict(dt=0.1, t_end=1.0, theta=0.4), dict(dt=0.1, t_end=1.0, theta=1.1),
                                dict(dt=0.1, t_end=1.0, blowup_threshold=0.0)])
def test_stepper_config_rejects(kw):
    with pytest.raises(ValueError):
        StepperConfig(**kw)


def test_nsteps_requires_multiple():
    with pytest.raises(ValueError, match="multiple"):
        StepperConfig(dt=0.3, t_end=1.0).nsteps
    assert StepperConfig(dt=0.1, t_end=1.0).nsteps == 10


@pytest.mark.parametrize("kind", [H, P])
def test_zero_state_stays_zero(kind):
    g = Grid(Nx=8, Ny=16)
    s = step(kind, State.zero(g), StepperConfig(dt=0.01, t_end=0.01))
    assert np.all(s.u == 0) and np.all(s.ut == 0)
    assert s.t == pytest.approx(0.01)


def test_state_rejects_nonzero_boundary():
    g = Grid(Nx=8, Ny=8)
    u = g.zeros()
    u[:, 0] = 1.0
    with pytest.raises(ValueError, match="vanish"):
        State(g, u, g.zeros()).validate()


def test_modal_solution_small():
    # cheaper variant of the acceptance check
    g = Grid(Nx=4, Ny=128, Y=math.pi)
    p = shear(g, "sin", n=3)
    cfg = StepperConfig(dt=1e-3, t_end=0.5, transport=False)
    res = run(H, p.state, cfg)
    err = np.max(np.abs(res.final.u - p.exact(0.5)))
    assert err < 1e-5


def test_damped_mode_factor_branches():
    for lam in (0.2, 0.5, 3.0):
        h = 1e-4
        a = lambda t: damped_mode_factor(lam, t)  # noqa: E731
        t = 0.7
        acc = (a(t + h) - 2 * a(t) + a(t - h)) / h**2
        vel = (a(t + h) - a(t - h)) / (2 * h)
        assert acc + vel + lam**2 * a(t) == pytest.approx(0.0, abs=1e-5)
        assert a(0.0) == 1.0


@pytest.mark.parametrize("kind", [H, P])
def test_manufactured_temporal_order(kind):
    g = Grid(Nx=8, Ny=200, Y=20.0)
    p = manufactured(g, kind)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        res = run(kind, p.state, StepperConfig(dt=dt, t_end=0.4), p.outer)
        errs.append(res.final.u)
    e1 = np.max(np.abs(errs[0] - errs[1]))
    e2 = np.max(np.abs(errs[1] - errs[2]))
    assert 1.9 <= math.log2(e1 / e2) <= 2.1


def test_run_t_end_zero_returns_input():
    g = Grid(Nx=8, Ny=16)
    p = mode(g)
    res = run(H, p.state, StepperConfig(dt=0.1, t_end=0.0))
    assert res.final is p.state
    assert res.steps == 0 and res.status == COMPLETED


def test_run_without_monitors_has_empty_series():
    g = Grid(Nx=8, Ny=16)
    res = run(H, mode(g).state, StepperConfig(dt=0.01, t_end=0.05))
    assert res.series == {} and res.times == []


def test_run_monitor_cadence():
    g = Grid(Nx=8, Ny=16)
    cfg = StepperConfig(dt=0.01, t_end=0.1, monitor_every=3)
    res = run(H, mode(g).state, cfg, monitors=[max_abs_u])
    assert len(res.times) == len(res.series["max_abs_u"])
    assert res.times[0] == 0.0 and res.times[-1] == pytest.approx(0.1)
    assert len(res.times) == 1 + 3 + 1


def test_run_is_deterministic():
    g = Grid(Nx=32, Ny=128)
    p = mode(g, k=1, n=1, amplitude=0.2, profile="yexp")
    cfg = StepperConfig(dt=0.01, t_end=0.5)
    a = run(H, p.state, cfg, monitors=[energy, max_abs_u])
    b = run(H, p.state, cfg, monitors=[energy, max_abs_u])
    assert a.final.u.tobytes() == b.final.u.tobytes()
    assert a.final.ut.tobytes() == b.final.ut.tobytes()
    assert a.series == b.series and a.times == b.times


def test_linear_energy_nonincreasing():
    g = Grid(Nx=8, Ny=100, Y=5.0)
    p = mode(g, k=1, n=2, amplitude=1.0)
    cfg = StepperConfig(dt=0.005, t_end=1.0, transport=False)
    res = run(H, p.state, cfg, monitors=[energy])
    E = np.array(res.series["energy"])
    assert np.all(E[1:] <= E[:-1] * (1 + 10 * cfg.dt**2))


def test_finite_propagation_small():
    g = Grid(Nx=4, Ny=3999, Y=10.0)
    p = shear(g, "bump", a=5.0, b=6.0)
    cfg = StepperConfig(dt=2.5e-4, t_end=0.5, transport=False)
    u = run(H, p.state, cfg).final.u[0]
    support = g.y[np.abs(u) > 1e-10]
    assert support.min() >= 4.5 - 3 * g.dy and support.max() <= 6.5 + 3 * g.dy


@pytest.mark.parametrize("kind", [H, P])
def test_boundary_values_stay_zero(kind):
    g = Grid(Nx=16, Ny=32)
    p = mode(g, amplitude=0.3, profile="yexp")
    res = run(kind, p.state, StepperConfig(dt=0.01, t_end=0.1), on_step=lambda n, s: (
        np.testing.assert_array_equal(s.u[:, [0, -1]], 0.0),
        np.testing.assert_array_equal(s.ut[:, [0, -1]], 0.0)))
    assert res.status == COMPLETED


def test_cfl_violation_reports_admissible_dt():
    g = Grid(Nx=16, Ny=32)
    p = mode(g, amplitude=100.0, profile="yexp")
    with pytest.raises(CFLError) as info:
        step(H, p.state, StepperConfig(dt=0.01, t_end=0.01))
    assert 0 < info.value.admissible < 0.01
    assert "admissible" in str(info.value)


def test_blowup_is_reported_with_time():
    g = Grid(Nx=8, Ny=16)
    p = mode(g, amplitude=0.1, profile="yexp")
    res = run(H, p.state, StepperConfig(dt=0.01, t_end=0.1, blowup_threshold=1e-3))
    assert res.status == BLOWUP and res.blew_up
    assert res.t_stop == pytest.approx(0.01)


def test_parabolic_stays_bounded():
    g = Grid(Nx=16, Ny=64)
    p = mode(g, amplitude=0.5, profile="yexp")
    cfg = StepperConfig(dt=0.01, t_end=0.5)
    res = run(P, p.state, cfg)
    assert res.status == COMPLETED
    assert np.max(np.abs(res.final.u)) < cfg.blowup_threshold


def test_outer_flow_shift_keeps_constant_U_steady_far_field():
    g = Grid(Nx=8, Ny=80, Y=10.0)
    outer = OuterFlow(U=lambda t, x: 0.3 + 0 * x, dpdx=lambda t, x: 0 * x)
    res = run(H, State.zero(g), StepperConfig(dt=0.01, t_end=0.2), outer)
    assert res.status == COMPLETED
    assert np.all(np.isfinite(res.final.u))
