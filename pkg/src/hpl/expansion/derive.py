"""
Mechanical boundary-layer derivation for the hyperbolic Navier-Stokes system

    eta d_t^2 u + d_t u + (u . grad) u - eps^2 Lap u + grad p = 0,   div u = 0,

with no-slip walls, ``eta = 1``.  The multi-scale ansatz
``f ~ sum_j eps^j (f^{I,j}(t, x, y) + f^{B,j}(t, x, y/eps))`` is substituted,
orders of eps are matched, inner symbols are Taylor-matched at the wall and
the decay of layer symbols as ``ỹ -> infinity`` is applied as an explicit,
logged rewrite rule.  The resulting closed system is compared structurally
against a hand transcription of the hyperbolic Prandtl equations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .expr import (Atom, Expr, StructuralError, YT, d, diff_exprs, inner, layer, physical_dy,
                   render, sum_exprs, trace)

ORIGINS = ("x-momentum", "y-momentum", "divergence", "boundary", "Taylor-matching", "outer")


class DerivationMismatch(AssertionError):
    """Pipeline output differs from the transcribed system."""

    def __init__(self, what: str, lines: list[str]):
        self.what = what
        self.lines = lines
        super().__init__(f"{what} differs from the transcription:\n  " + "\n  ".join(lines))


class UnsupportedOrder(NotImplementedError):
    pass


@dataclass
class Equation:
    expr: Expr
    origin: str
    order: int = 0
    label: str = ""
    rename_Y: str | None = None

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise StructuralError(f"unknown origin {self.origin!r}")

    def text(self) -> str:
        return f"{render(self.expr, self.rename_Y)} = 0"


@dataclass
class OrderedSystem:
    """Equations grouped by exact power of eps."""

    equations: dict = field(default_factory=dict)

    def add(self, eq: Equation):
        self.equations.setdefault(eq.order, []).append(eq)

    def at(self, n: int) -> list:
        return self.equations.get(n, [])

    def find(self, label: str) -> Equation:
        for eqs in self.equations.values():
            for eq in eqs:
                if eq.label == label:
                    return eq
        raise KeyError(label)

    @property
    def orders(self) -> list[int]:
        return sorted(self.equations)

    def records(self) -> list[dict]:
        return [{"order": n, "origin": eq.origin, "equation": eq.text()}
                for n in self.orders for eq in self.equations[n]]


@dataclass
class DerivationLog:
    lines: list = field(default_factory=list)
    records: list = field(default_factory=list)
    decay_uses: list = field(default_factory=list)

    def note(self, text: str):
        self.lines.append(text)

    def equation(self, stage: str, order: int | None, origin: str, text: str):
        self.lines.append(f"  [{origin}{'' if order is None else f', eps^{order}'}] {text}")
        self.records.append({"stage": stage, "order": order, "origin": origin, "equation": text})

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    def json(self) -> str:
        return json.dumps(self.records, ensure_ascii=False, indent=1) + "\n"


# ansatz ---------------------------------------------------------------------

def build_ansatz(max_order: int = 2) -> dict:
    """Truncated series ``sum_{j<=max_order} eps^j (f^{I,j} + f^{B,j})`` for u, v, p."""
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    return {name: sum_exprs(Expr.atom(inner(name, j)).eps(j) + Expr.atom(layer(name, j)).eps(j)
                            for j in range(max_order + 1))
            for name in ("u", "v", "p")}


def navier_stokes(fields: dict, drop_damping: bool = False) -> dict:
    """Residuals of the two momentum equations and the divergence constraint."""
    u, v, p = fields["u"], fields["v"], fields["p"]
    lap = lambda f: f.diff("x", 2) + physical_dy(physical_dy(f))  # noqa: E731

    def momentum(f, grad_p):
        r = f.diff("t", 2) + u * f.diff("x") + v * physical_dy(f) + grad_p - lap(f).eps(2)
        if not drop_damping:
            r = r + f.diff("t")
        return r

    return {
        "x-momentum": momentum(u, p.diff("x")),
        "y-momentum": momentum(v, physical_dy(p)),
        "divergence": u.diff("x") + physical_dy(v),
    }


def transcribed_collected(N: int = 2) -> dict:
    """Hand transcription of the displayed collected momentum expansions, ``j <= N``."""
    def I(n, j):  # noqa: E743
        return Expr.atom(inner(n, j)) if 0 <= j <= N else Expr()

    def B(n, j):
        return Expr.atom(layer(n, j)) if 0 <= j <= N else Expr()

    def series(fn):
        return sum_exprs(fn(j).eps(j) for j in range(N + 1))

    out = {}
    for f, dp in (("u", lambda j: I("p", j).diff("x") + B("p", j).diff("x")), ("v", None)):
        lhs = series(lambda j: (I(f, j) + B(f, j)).diff("t", 2))
        lhs += series(lambda j: (I(f, j) + B(f, j)).diff("t"))
        lhs += series(lambda j: sum_exprs((I("u", k) + B("u", k)) * (I(f, j - k).diff("x") + B(f, j - k).diff("x"))
                                          for k in range(j + 1)))
        lhs += series(lambda j: sum_exprs((I("v", k) + B("v", k)) * I(f, j - k).diff("y") for k in range(j + 1)))
        lhs += series(lambda j: sum_exprs((I("v", k) + B("v", k)) * B(f, j - k + 1).diff("Y")
                                          for k in range(j + 2)))
        lhs += (I("v", 0) * B(f, 0).diff("Y")).eps(-1)
        if f == "u":
            lhs += series(dp)
        else:
            lhs += series(lambda j: I("p", j).diff("y"))
            lhs += B("p", 0).diff("Y").eps(-1)
            lhs += series(lambda j: B("p", j + 1).diff("Y"))
        rhs = series(lambda j: (I(f, j).diff("x", 2) + I(f, j).diff("y", 2) + B(f, j).diff("x", 2)).eps(2)
                     + B(f, j).diff("Y", 2))
        out["x-momentum" if f == "u" else "y-momentum"] = lhs - rhs
    return out


# order bookkeeping --------------------------------------------------------------

def collect_orders(residuals: dict, max_order: int | None = None) -> OrderedSystem:
    """Split each residual by exact eps power; every monomial lands in one bucket."""
    sys_ = OrderedSystem()
    for origin, expr in residuals.items():
        for n in expr.orders:
            if max_order is not None and n > max_order:
                continue
            sys_.add(Equation(expr.order(n), origin, n, f"{origin}@{n}"))
    return sys_


def reassemble(system: OrderedSystem, origin: str) -> Expr:
    return sum_exprs(eq.expr.eps(n) for n in system.orders for eq in system.at(n) if eq.origin == origin)


def has_layer(mono) -> bool:
    return any(a.family == "B" for a in mono)


def layer_part(expr: Expr) -> Expr:
    return expr.filter(has_layer)


def inner_part(expr: Expr) -> Expr:
    return expr.filter(lambda m: not has_layer(m))


def vanish(*bases: Atom):
    """Rule sending every derivative or evaluation of ``bases`` to zero."""
    keys = {b.base for b in bases}
    return lambda a: Expr() if a.base in keys else None


def decay_rule(eq: Expr, log: DerivationLog, reason: str) -> Atom:
    """From ``c d_ỹ^k f = 0`` with ``f`` a layer symbol conclude ``f = 0``.

    Integrating ``k`` times in ``ỹ`` leaves a polynomial in ``ỹ``; decay at
    infinity forces every coefficient to vanish.
    """
    if len(eq.terms) != 1:
        raise StructuralError(f"decay rule needs a single-term equation, got {render(eq)}")
    (e, mono), _ = next(iter(eq.terms.items()))
    if len(mono) != 1 or mono[0].family != "B":
        raise StructuralError(f"decay rule needs one layer symbol, got {render(eq)}")
    a = mono[0]
    t_, x_, y_, Y_ = a.derivs
    if Y_ == 0 or t_ or x_ or y_ or a.at:
        raise StructuralError(f"decay rule needs a pure d_ỹ derivative, got {render(eq)}")
    base = a.base
    log.decay_uses.append(base)
    log.note(f"  decay: {render(eq)} = 0 and {render(Expr.atom(base))} -> 0 as ỹ -> ∞ "
             f"give {render(Expr.atom(base))} ≡ 0 ({reason})")
    return base


# Taylor matching -------------------------------------------------------------------

def taylor_match(expr: Expr, order: int = 1, traces_zero=()) -> Expr:
    """Replace inner symbols near the wall by ``bar(f) + eps ỹ bar(d_y f)``.

    ``traces_zero`` lists ``(name, j)`` pairs whose wall trace vanishes.
    """
    if order not in (0, 1):
        raise UnsupportedOrder(f"Taylor matching is implemented to first order only, got order={order}")
    zero = set(traces_zero)

    def tr(name, j, t_, x_, n):
        if n == 0 and (name, j) in zero:
            return Expr()
        return Expr.atom(d(trace(name, j, n), t=t_, x=x_))

    def rule(a: Atom):
        if a.family != "I":
            return None
        t_, x_, y_, _ = a.derivs
        out = tr(a.name, a.index, t_, x_, y_)
        if order == 1:
            out = out + (Expr.atom(YT) * tr(a.name, a.index, t_, x_, y_ + 1)).eps(1)
        return out
    return expr.subs(rule)


def at_wall(expr: Expr) -> Expr:
    """Evaluate at ``ỹ = 0`` (outer symbols at ``y = 0`` become traces)."""
    def rule(a: Atom):
        if a.family == "Y":
            return Expr()
        if a.family in ("B", "F"):
            return Expr.atom(replace(a, at="wall"))
        if a.family == "I":
            return Expr.atom(d(trace(a.name, a.index, a.derivs[2]), t=a.derivs[0], x=a.derivs[1]))
        return None
    return expr.subs(rule)


def at_far(expr: Expr) -> Expr:
    def rule(a: Atom):
        if a.family in ("B", "F"):
            return Expr.atom(replace(a, at="far"))
        return None
    return expr.subs(rule)


# closed-system notation -------------------------------------------------------------

u_F, v_F = Atom("u", "F"), Atom("v", "F")
U_O, P_O = Atom("U", "O"), Atom("P", "O")


def _lift_derivs(target: Expr, a: Atom) -> Expr:
    out = target
    for var, n in zip(("t", "x", "y", "Y"), a.derivs):
        out = out.diff(var, n)
    if a.at == "wall":
        out = at_wall(out)
    elif a.at == "far":
        out = at_far(out)
    return out


def rename(expr: Expr) -> Expr:
    """Rewrite in the closed-system unknowns.

    ``u^{B,0} -> u - U``, ``v^{B,1} -> v - bar(v^{I,1}) - ỹ bar(d_y v^{I,0})``,
    ``bar(u^{I,0}) -> U``, ``bar(p^{I,0}) -> P``.
    """
    U, P, u, v = (Expr.atom(a) for a in (U_O, P_O, u_F, v_F))
    table = {
        layer("u", 0): u - U,
        layer("v", 1): v - Expr.atom(trace("v", 1)) - Expr.atom(YT) * Expr.atom(trace("v", 0, 1)),
        trace("u", 0): U,
        trace("p", 0): P,
    }

    def rule(a: Atom):
        if a.family == "T":
            key = trace(a.name, a.index, a.derivs[2])
            if key in table:
                return _lift_derivs(table[key], replace(a, derivs=(a.derivs[0], a.derivs[1], 0, 0)))
            return None
        if a.base in table:
            return _lift_derivs(table[a.base], a)
        return None
    return expr.subs(rule)


def transcribed_closed(U_zero: bool = False) -> dict:
    """The hyperbolic Prandtl system in closed form, transcribed by hand."""
    u, v = Expr.atom(u_F), Expr.atom(v_F)
    U = Expr() if U_zero else Expr.atom(U_O)
    P = Expr() if U_zero else Expr.atom(P_O)
    out = {
        "momentum": u.diff("t", 2) + u.diff("t") + u * u.diff("x") + v * u.diff("Y") + P.diff("x") - u.diff("Y", 2),
        "divergence": u.diff("x") + v.diff("Y"),
        "wall u": at_wall(u),
        "wall v": at_wall(v),
        "far field": at_far(u) - U,
    }
    if not U_zero:
        out["outer law"] = U.diff("t", 2) + U.diff("t") + U * U.diff("x") + P.diff("x")
    return out


def transcribed_layer_equation() -> Expr:
    """Displayed order-zero layer equation, with ``v^{B,1}`` in the transport speed."""
    uB = Expr.atom(layer("u", 0))
    ub = Expr.atom(trace("u", 0))
    speed = Expr.atom(trace("v", 1)) + Expr.atom(layer("v", 1)) + Expr.atom(YT) * Expr.atom(trace("v", 0, 1))
    return (uB.diff("t", 2) + uB.diff("t") + uB * ub.diff("x") + (ub + uB) * uB.diff("x")
            + speed * uB.diff("Y") - uB.diff("Y", 2))


def _compare(what: str, derived: Expr, expected: Expr, log: DerivationLog, rename_Y=None):
    lines = diff_exprs(derived, expected, rename_Y)
    if lines:
        log.note(f"MISMATCH in {what}:")
        for ln in lines:
            log.note(f"  {ln}")
        raise DerivationMismatch(what, lines)
    log.note(f"  check: {what} matches the transcription")


# pipeline -------------------------------------------------------------------------

@dataclass
class Derivation:
    system: OrderedSystem
    log: DerivationLog
    facts: dict
    raw: OrderedSystem


def derive_layer_system(max_order: int = 2, drop_damping: bool = False) -> Derivation:
    """Run the full derivation and check it against the transcribed system."""
    if max_order < 2:
        raise ValueError("the derivation needs max_order >= 2")
    log = DerivationLog()
    facts = {}
    valid = max_order - 1
    log.note("Boundary-layer derivation for the hyperbolic Navier-Stokes system (eta = 1)")
    if drop_damping:
        log.note("MUTATION: damping term d_t u removed from the momentum equations")
    log.note(f"ansatz: f ~ sum_{{j<={max_order}}} eps^j (f^{{I,j}}(t,x,y) + f^{{B,j}}(t,x,ỹ)), ỹ = y/eps; "
             f"orders <= {valid} are complete")

    # 1. substitution
    res = {k: e.truncate(valid) for k, e in navier_stokes(build_ansatz(max_order), drop_damping).items()}
    raw = collect_orders(res)
    log.note("step 1: substitute the ansatz and collect powers of eps")
    for n in raw.orders:
        for eq in raw.at(n):
            log.equation("raw", n, eq.origin, eq.text())

    # 2. comparison with the displayed collected expansions
    log.note("step 2: compare with the displayed collected momentum expansions")
    shown = {k: e.truncate(valid) for k, e in transcribed_collected(max_order).items()}
    vB0 = layer("v", 0)
    expected_gap = {
        "x-momentum": (Expr.atom(vB0) * Expr.atom(d(layer("u", 0), Y=1))).eps(-1),
        "y-momentum": (Expr.atom(vB0) * Expr.atom(d(vB0, Y=1))).eps(-1),
    }
    for k in ("x-momentum", "y-momentum"):
        gap = res[k] - shown[k]
        if gap != expected_gap[k]:
            _compare(f"collected {k}", res[k], shown[k] + expected_gap[k], log)
        log.note(f"  note: raw {k} exceeds the display by {render(gap)}; the display keeps only the "
                 f"inner part of the eps^-1 transport coefficient")

    # 3. divergence at eps^-1
    log.note("step 3: divergence constraint")
    div_m1 = raw.find("divergence@-1").expr
    log.equation("divergence", -1, "divergence", f"{render(div_m1)} = 0")
    facts["v^{B,0}"] = decay_rule(div_m1, log, "divergence at eps^-1")
    kill = vanish(vB0)
    res = {k: e.subs(kill) for k, e in res.items()}
    for k in ("x-momentum", "y-momentum"):
        _compare(f"collected {k} with v^{{B,0}} ≡ 0", res[k], shown[k].subs(kill), log)
    div0 = res["divergence"].order(0)
    div_layer, div_inner = layer_part(div0), inner_part(div0)
    log.equation("divergence", 0, "divergence", f"{render(div_inner)} = 0")
    log.equation("divergence", 0, "divergence", f"{render(div_layer)} = 0")

    # 4. boundary conditions
    log.note("step 4: no-slip conditions order by order, with v^{I,0}|_{y=0} = 0 imposed on the outer flow")
    ans = build_ansatz(max_order)
    bcs = {}
    for name in ("u", "v"):
        w = at_wall(ans[name]).subs(kill)
        for n in range(0, 2):
            bcs[(name, n)] = w.order(n)
            log.equation("boundary", n, "boundary", f"{render(w.order(n))} = 0")
    traces_zero = [("v", 0)]

    # 5. Taylor matching of the layer parts
    log.note("step 5: Taylor-match inner symbols at the wall to first order in the layer equations")
    log.note("  inner parts hold identically in y (outer equations) and are set aside")
    mom = {k: taylor_match(layer_part(res[k]), 1, traces_zero).truncate(0) for k in ("x-momentum", "y-momentum")}
    ym1 = mom["y-momentum"].order(-1)
    log.equation("taylor", -1, "y-momentum", f"{render(ym1)} = 0")
    facts["p^{B,0}"] = decay_rule(ym1, log, "y-momentum at eps^-1")
    killp0 = vanish(layer("p", 0))
    mom = {k: e.subs(killp0) for k, e in mom.items()}
    y0 = mom["y-momentum"].order(0)
    log.equation("taylor", 0, "y-momentum", f"{render(y0)} = 0")
    facts["p^{B,1}"] = decay_rule(y0, log, "y-momentum at eps^0")
    mom = {k: e.subs(vanish(layer("p", 1))) for k, e in mom.items()}
    xm1 = mom["x-momentum"].order(-1)
    if xm1:
        raise StructuralError(f"unexpected eps^-1 tangential layer terms: {render(xm1)}")
    x0 = mom["x-momentum"].order(0)
    log.equation("taylor", 0, "Taylor-matching", f"{render(x0)} = 0")
    _compare("order-zero layer equation", x0, transcribed_layer_equation(), log)
    log.note("  note: the displayed transport speed reads u^{B,1} where v^{B,1} is meant")

    # 6. outer equation on the wall
    log.note("step 6: outer tangential momentum at order eps^0 traced on y = 0")
    outer0 = taylor_match(inner_part(res["x-momentum"].order(0)), 0, traces_zero)
    outer_div = taylor_match(inner_part(div0), 0, traces_zero)
    log.equation("outer", 0, "outer", f"{render(outer0)} = 0")

    # 7. closed system
    log.note("step 7: u = bar(u^{I,0}) + u^{B,0}, v = bar(v^{I,1}) + v^{B,1} + ỹ bar(d_y v^{I,0}), "
             "U = bar(u^{I,0}), P = bar(p^{I,0}); rename ỹ -> y")
    far_u = at_far(Expr.atom(layer("u", 0)))
    log.note(f"  decay: {render(far_u)} = 0 (layer symbols vanish as ỹ -> ∞)")
    log.decay_uses.append(layer("u", 0))
    derived = {
        "momentum": rename(x0 + outer0),
        "divergence": rename(div_layer + outer_div),
        "wall u": rename(bcs[("u", 0)]),
        "wall v": rename(bcs[("v", 1)]),
        "far field": rename(far_u),
        "outer law": rename(outer0),
    }
    expected = transcribed_closed()
    system = OrderedSystem()
    origin = {"momentum": "x-momentum", "divergence": "divergence", "wall u": "boundary",
              "wall v": "boundary", "far field": "boundary", "outer law": "outer"}
    for key in expected:
        _compare(f"closed system: {key}", derived[key], expected[key], log, rename_Y="y")
        eq = Equation(derived[key], origin[key], 0, key, rename_Y="y")
        system.add(eq)
        log.equation("closed", 0, origin[key], eq.text())
    log.note("facts: " + ", ".join(f"{k} ≡ 0" for k in facts))
    log.note("equivalence note: the same system follows from the scale change ỹ = y/eps, "
             "v^eps = eps v^b(t, x, ỹ); this route is not mechanised")
    return Derivation(system, log, facts, raw)


def reduce_outer(system: OrderedSystem) -> dict:
    """Set ``U = P = 0`` in the closed system; trivial equations are dropped."""
    zero = vanish(U_O, P_O)
    out = {}
    for eqs in system.equations.values():
        for eq in eqs:
            r = eq.expr.subs(zero)
            if r:
                out[eq.label] = r
    return out
