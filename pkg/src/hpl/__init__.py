"""Numerical laboratory for the hyperbolic Prandtl boundary-layer equations."""

__version__ = "0.1.0"

from .domain import Grid  # noqa: E402
from .gevrey import GevreyParams, derivative_ladder, estimate_radius, gevrey_norm  # noqa: E402
from .model import ModelKind, OuterFlow  # noqa: E402
from .stepper import State, StepperConfig, run, step  # noqa: E402

__all__ = [
    "Grid", "GevreyParams", "ModelKind", "OuterFlow", "State", "StepperConfig",
    "derivative_ladder", "estimate_radius", "gevrey_norm", "run", "step", "__version__",
]
