import math

import numpy as np
import pytest

from hpl.audit import (CadenceError, energy_audit, kr_bound, leibniz_pairing, theorem_ledger)
from hpl.domain import Grid
from hpl.presets import mode
from hpl.stepper import State, StepperConfig, run


def nonlinear_run(Nx=64, Ny=256, dt=0.005, t_end=0.25, amplitude=0.5):
    g = Grid(Nx=Nx, Ny=Ny, Y=20.0)
    X, Yg = g.mesh()
    u = amplitude * np.sin(X) * Yg * np.exp(-Yg)
    u[:, [0, -1]] = 0.0
    return run("hyperbolic", State(g, u, g.zeros()), StepperConfig(dt=dt, t_end=t_end, snapshot_every=1))


@pytest.fixture(scope="module")
def nl():
    return nonlinear_run()


def test_zero_solution_audit():
    g = Grid(Nx=16, Ny=16)
    res = run("hyperbolic", State.zero(g), StepperConfig(dt=0.01, t_end=0.05, snapshot_every=1))
    for m in (0, 1, 2):
        a = energy_audit(res, m)
        assert a.lhs == (0.0, 0.0, 0.0)
        assert a.rhs == (0.0, 0.0, 0.0, 0.0)


def test_cadence_error():
    g = Grid(Nx=16, Ny=16)
    res = run("hyperbolic", State.zero(g), StepperConfig(dt=0.01, t_end=0.05))
    with pytest.raises(CadenceError, match="snapshot_every"):
        energy_audit(res, 0)


def test_parabolic_history_rejected():
    g = Grid(Nx=16, Ny=16)
    res = run("parabolic", State.zero(g), StepperConfig(dt=0.01, t_end=0.05, snapshot_every=1))
    with pytest.raises(ValueError, match="hyperbolic"):
        energy_audit(res, 0)


def test_order_beyond_resolution_rejected(nl):
    with pytest.raises(ValueError, match="resolvable"):
        energy_audit(nl, 40)


def test_linear_residual_second_order():
    res = []
    for ny, dt in [(127, 0.01), (255, 0.005), (511, 0.0025)]:
        g = Grid(Nx=8, Ny=ny, Y=8.0)
        p = mode(g, amplitude=1.0, profile="sin", n=2)
        r = run("hyperbolic", p.state, StepperConfig(dt=dt, t_end=0.4, transport=False, snapshot_every=1))
        res.append(abs(energy_audit(r, 0).residual))
    rates = [math.log2(a / b) for a, b in zip(res[:-1], res[1:])]
    assert 1.9 <= rates[-1] <= 2.1, rates


def test_residual_reported_not_zeroed(nl):
    a = energy_audit(nl, 1)
    lhs = a.lhs_total
    rhs = a.initial + a.pairing_series[-1] + a.commutator_series[-1]
    assert a.residual == lhs - rhs
    assert np.all(np.isfinite(a.residual_series))


def test_leibniz_two_ways(nl):
    g = nl.final.grid
    s = nl.final
    a = leibniz_pairing(g, s.u, s.ut, 2, method="product_rule")
    b = leibniz_pairing(g, s.u, s.ut, 2, method="assembled")
    assert abs(a - b) <= 1e-8 * abs(b)


def test_unknown_pairing_method(nl):
    with pytest.raises(ValueError):
        leibniz_pairing(nl.final.grid, nl.final.u, nl.final.ut, 1, method="other")


# theorem ledger -------------------------------------------------------------------

def test_ledger_zero_solution():
    g = Grid(Nx=48, Ny=16)
    res = run("hyperbolic", State.zero(g), StepperConfig(dt=0.01, t_end=0.05, snapshot_every=1))
    led = theorem_ledger(res, [(0.2, 0.4)], 2.0)
    assert np.all(led.pairs[0].chat == 0.0)


def test_ledger_pair_ordering():
    g = Grid(Nx=48, Ny=16)
    res = run("hyperbolic", State.zero(g), StepperConfig(dt=0.01, t_end=0.05, snapshot_every=1))
    with pytest.raises(ValueError, match="rho_tilde"):
        theorem_ledger(res, [(0.5, 0.4)], 2.0)
    with pytest.raises(ValueError, match="sigma"):
        theorem_ledger(res, [(0.2, 0.4)], 3.0)


def test_ledger_monotone_in_rho(nl):
    lo = theorem_ledger(nl, [(0.2, 0.6)], 2.0, rho0=1.0).pairs[0]
    hi = theorem_ledger(nl, [(0.4, 0.6)], 2.0, rho0=1.0).pairs[0]
    assert np.all(hi.lhs >= lo.lhs * (1 - 1e-12))
    assert np.all(hi.I1 >= lo.I1 * (1 - 1e-12))
    assert np.all(hi.I2 >= lo.I2 * (1 - 1e-12))
    lo2 = theorem_ledger(nl, [(0.2, 0.5)], 2.0, rho0=1.0).pairs[0]
    hi2 = theorem_ledger(nl, [(0.2, 0.8)], 2.0, rho0=1.0).pairs[0]
    # I2 carries 1/(rho~ - rho); compare the integrated norms without that factor
    assert np.all(hi2.I2 * 0.6 >= lo2.I2 * 0.3 * (1 - 1e-12))


@pytest.mark.parametrize("r", [0.1, 0.5, 0.9, 0.99])
def test_kr_bound(r):
    worst, bound, ok = kr_bound(r)
    k = np.arange(10_001)
    assert ok and worst <= bound
    assert worst == pytest.approx(max(float(j) * r**j for j in k), rel=1e-12)


def test_kr_bound_domain():
    with pytest.raises(ValueError):
        kr_bound(1.0)
