"""
Exact polynomial expressions in epsilon and field symbols.

An :class:`Expr` is kept in canonical form at all times: a mapping from
``(eps_power, monomial)`` to a nonzero :class:`fractions.Fraction`, where a
monomial is a sorted tuple of :class:`Atom` factors (repeated for powers).
Sums are therefore flat, like terms are merged and products are ordered by
:func:`atom_key`.

Atoms are derivatives of field symbols.  Variables are ``t``, ``x``, the
outer normal variable ``y`` and the stretched variable ``Y`` (rendered as
``ỹ``).  Families fix which variables a symbol depends on:

    ``I``  inner field ``f^{I,j}(t, x, y)``
    ``B``  boundary-layer field ``f^{B,j}(t, x, ỹ)``
    ``T``  trace ``bar(d_y^n f^{I,j})(t, x)`` on ``y = 0``
    ``F``  closed-system field ``u, v`` of ``(t, x, ỹ)``
    ``O``  outer datum ``U, P`` of ``(t, x)``
    ``Y``  the coordinate ``ỹ`` itself
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable

VARS = ("t", "x", "y", "Y")
FAMILIES = ("F", "O", "B", "I", "T", "Y")
NAMES = ("u", "v", "p", "U", "P", "ỹ")

# variables each family depends on
DEPENDS = {
    "I": {"t", "x", "y"},
    "B": {"t", "x", "Y"},
    "T": {"t", "x"},
    "F": {"t", "x", "Y"},
    "O": {"t", "x"},
    "Y": {"Y"},
}


class StructuralError(ValueError):
    """Malformed expression, such as a non-integer power of epsilon."""


@dataclass(frozen=True)
class Atom:
    name: str
    family: str
    index: int | None = None
    derivs: tuple = (0, 0, 0, 0)   # orders in (t, x, y, Y); for traces y is inside the bar
    at: str | None = None          # None, "wall" (ỹ = 0) or "far" (ỹ -> infinity)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise StructuralError(f"unknown family {self.family!r}")
        if len(self.derivs) != 4 or any(d < 0 for d in self.derivs):
            raise StructuralError(f"bad derivative orders {self.derivs!r}")

    @property
    def base(self) -> "Atom":
        return replace(self, derivs=(0, 0, 0, 0), at=None)

    @property
    def is_layer(self) -> bool:
        return self.family == "B"

    @property
    def is_inner(self) -> bool:
        return self.family == "I"


def atom_key(a: Atom):
    return (FAMILIES.index(a.family), NAMES.index(a.name), -1 if a.index is None else a.index,
            tuple(-d for d in a.derivs), a.at or "")


def _mono_key(mono):
    return (len(mono), tuple(atom_key(a) for a in mono))


def _term_key(term):
    (e, mono), _ = term
    return (e, _mono_key(mono))


class Expr:
    """Canonical exact polynomial; immutable by convention."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        clean = {}
        for (e, mono), c in (terms or {}).items():
            if not isinstance(e, int):
                if isinstance(e, Fraction) and e.denominator == 1:
                    e = int(e)
                else:
                    raise StructuralError(f"non-integer power of epsilon: {e!r}")
            c = Fraction(c)
            if c:
                key = (e, tuple(sorted(mono, key=atom_key)))
                clean[key] = clean.get(key, 0) + c
        self.terms = {k: v for k, v in sorted(clean.items(), key=lambda kv: _term_key(kv)) if v}

    # construction ------------------------------------------------------------

    @classmethod
    def atom(cls, a: Atom) -> "Expr":
        return cls({(0, (a,)): 1})

    @classmethod
    def const(cls, c=1, eps: int = 0) -> "Expr":
        return cls({(eps, ()): c})

    @classmethod
    def zero(cls) -> "Expr":
        return cls()

    # algebra -----------------------------------------------------------------

    def __add__(self, other):
        other = _lift(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return Expr(out)

    __radd__ = __add__

    def __neg__(self):
        return Expr({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        out = {}
        for (e1, m1), c1 in self.terms.items():
            for (e2, m2), c2 in other.terms.items():
                key = (e1 + e2, tuple(sorted(m1 + m2, key=atom_key)))
                out[key] = out.get(key, 0) + c1 * c2
        return Expr(out)

    __rmul__ = __mul__

    def eps(self, n: int) -> "Expr":
        """Multiply by ``eps^n``."""
        return Expr({(e + n, m): c for (e, m), c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, Expr):
            try:
                other = _lift(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Expr({render(self)!r})"

    # structure -----------------------------------------------------------------

    @property
    def orders(self) -> list[int]:
        return sorted({e for e, _ in self.terms})

    def order(self, n: int) -> "Expr":
        """Coefficient of ``eps^n`` (as an eps-free expression)."""
        return Expr({(0, m): c for (e, m), c in self.terms.items() if e == n})

    def truncate(self, max_order: int) -> "Expr":
        return Expr({(e, m): c for (e, m), c in self.terms.items() if e <= max_order})

    def atoms(self) -> set:
        return {a for (_, m) in self.terms for a in m}

    def filter(self, pred: Callable) -> "Expr":
        """Keep the monomials ``(eps, mono)`` for which ``pred`` holds."""
        return Expr({k: c for k, c in self.terms.items() if pred(k[1])})

    def canon(self) -> "Expr":
        return Expr(self.terms)

    # calculus ----------------------------------------------------------------

    def diff(self, var: str, n: int = 1) -> "Expr":
        out = self
        for _ in range(n):
            out = _diff_once(out, var)
        return out

    def subs(self, rule: Callable[[Atom], "Expr | None"]) -> "Expr":
        """Replace atoms by expressions; ``rule`` returns ``None`` to keep an atom."""
        out = Expr()
        cache = {}
        for (e, mono), c in self.terms.items():
            piece = Expr.const(c, e)
            for a in mono:
                if a not in cache:
                    r = rule(a)
                    cache[a] = Expr.atom(a) if r is None else _lift(r)
                piece = piece * cache[a]
            out = out + piece
        return out


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Expr.const(x)
    if isinstance(x, Atom):
        return Expr.atom(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def _bump(a: Atom, var: str) -> Atom:
    d = list(a.derivs)
    d[VARS.index(var)] += 1
    return replace(a, derivs=tuple(d))


def diff_atom(a: Atom, var: str) -> Expr:
    """Partial derivative of a single atom."""
    if var not in VARS:
        raise StructuralError(f"unknown variable {var!r}")
    if a.family == "Y":
        return Expr.const(1) if var == "Y" else Expr()
    if var not in DEPENDS[a.family]:
        return Expr()
    if a.at is not None and var == "Y":
        return Expr()
    return Expr.atom(_bump(a, var))


def _diff_once(expr: Expr, var: str) -> Expr:
    out = {}
    for (e, mono), c in expr.terms.items():
        for i, a in enumerate(mono):
            da = diff_atom(a, var)
            rest = mono[:i] + mono[i + 1:]
            for (e2, m2), c2 in da.terms.items():
                key = (e + e2, rest + m2)
                out[key] = out.get(key, 0) + c * c2
    return Expr(out)


def physical_dy(expr: Expr) -> Expr:
    """``d/dy`` of an expression in the outer variable, with ``ỹ = y / eps``.

    Inner symbols are differentiated in ``y``; layer symbols pick up
    ``eps^-1 d_ỹ`` by the chain rule.
    """
    return expr.diff("y") + expr.diff("Y").eps(-1)


# named constructors --------------------------------------------------------------

def inner(name: str, j: int) -> Atom:
    return Atom(name, "I", j)


def layer(name: str, j: int) -> Atom:
    return Atom(name, "B", j)


def trace(name: str, j: int, dy: int = 0) -> Atom:
    return Atom(name, "T", j, (0, 0, dy, 0))


YT = Atom("ỹ", "Y")


def d(a: Atom, **orders) -> Atom:
    """Atom with derivative orders given as keywords ``t=, x=, y=, Y=``."""
    out = list(a.derivs)
    for var, n in orders.items():
        out[VARS.index(var)] += n
    return replace(a, derivs=tuple(out))


# rendering ---------------------------------------------------------------------

_SYMBOL = {"t": "t", "x": "x", "y": "y", "Y": "ỹ"}


def _dpart(derivs, rename_Y=None):
    out = []
    for var, n in zip(VARS, derivs):
        if n:
            sym = rename_Y if (var == "Y" and rename_Y) else _SYMBOL[var]
            out.append(f"∂_{sym}" + (f"^{n}" if n > 1 else ""))
    return " ".join(out)


def render_atom(a: Atom, rename_Y: str | None = None) -> str:
    if a.family == "Y":
        return rename_Y or "ỹ"
    if a.family in ("F", "O"):
        core = a.name
    else:
        fam = "I" if a.family == "T" else a.family
        core = f"{a.name}^{{{fam},{a.index}}}"
    if a.family == "T":
        inside = _dpart((0, 0, a.derivs[2], 0))
        outer = _dpart((a.derivs[0], a.derivs[1], 0, 0))
        body = f"bar({inside + ' ' if inside else ''}{core})"
        return f"{outer + ' ' if outer else ''}{body}"
    dp = _dpart(a.derivs, rename_Y)
    s = f"{dp} {core}" if dp else core
    if a.at:
        var = rename_Y or "ỹ"
        where = f"{var}=0" if a.at == "wall" else f"{var}→∞"
        s = f"({s})|_{{{where}}}" if dp else f"{s}|_{{{where}}}"
    return s


def _display_key(a: Atom):
    return (a.family != "Y", sum(a.derivs), atom_key(a))


def _render_mono(mono, rename_Y):
    mono = sorted(mono, key=_display_key)
    parts = []
    i = 0
    while i < len(mono):
        j = i
        while j < len(mono) and mono[j] == mono[i]:
            j += 1
        s = render_atom(mono[i], rename_Y)
        if j - i > 1:
            s = f"({s})^{j - i}" if " " in s else f"{s}^{j - i}"
        parts.append(s)
        i = j
    return " ".join(parts)


def render(expr: Expr, rename_Y: str | None = None) -> str:
    if not expr.terms:
        return "0"
    out = []
    for (e, mono), c in expr.terms.items():
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = _render_mono(mono, rename_Y)
        if e:
            body = ("ε" if e == 1 else f"ε^{e}") + (f" {body}" if body else "")
        if not body:
            body = str(mag)
        elif mag != 1:
            body = f"{mag} {body}"
        out.append((sign, body))
    first_sign, first = out[0]
    s = ("-" if first_sign == "-" else "") + first
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s


def diff_exprs(derived: Expr, expected: Expr, rename_Y: str | None = None) -> list[str]:
    """Human-readable difference ``derived - expected`` term by term."""
    delta = derived - expected
    lines = []
    for (e, mono), c in delta.terms.items():
        term = render(Expr({(e, mono): abs(c)}), rename_Y)
        if c < 0:
            lines.append(f"missing: {render(Expr({(e, mono): -c}), rename_Y)}")
        else:
            lines.append(f"extra:   {term}")
    return lines


def sum_exprs(items: Iterable[Expr]) -> Expr:
    out = Expr()
    for e in items:
        out = out + e
    return out
