"""Formal eps-expansions and the boundary-layer derivation."""

from .derive import (DerivationMismatch, OrderedSystem, UnsupportedOrder, build_ansatz,
                     collect_orders, derive_layer_system, reduce_outer, taylor_match,
                     transcribed_closed)
from .expr import Atom, Expr, StructuralError, render

__all__ = [
    "Atom", "Expr", "StructuralError", "render", "DerivationMismatch", "OrderedSystem",
    "UnsupportedOrder", "build_ansatz", "collect_orders", "derive_layer_system",
    "reduce_outer", "taylor_match", "transcribed_closed",
]
