"""Numerical verification of weighted biparametric Poincare inequalities on product grids."""

from .errors import EvaluationError, InvalidArgument, SamplingError
from .grid import (
    AxisGrid,
    Cube,
    GridFn,
    ProductGrid,
    Rect,
    build_product_grid,
    integrate,
    lp_norm,
    sample,
    unit_cube,
    unit_rect,
    weak_lp_norm,
)
from .oscillation import TestFn, oscillation, pi_R
from .weights import WeightSpec, ap_constant_rect, a1_constant_rect, power_weight, unit_weight

__version__ = "0.1.0"

__all__ = [
    "AxisGrid",
    "Cube",
    "EvaluationError",
    "GridFn",
    "InvalidArgument",
    "ProductGrid",
    "Rect",
    "SamplingError",
    "TestFn",
    "WeightSpec",
    "a1_constant_rect",
    "ap_constant_rect",
    "build_product_grid",
    "integrate",
    "lp_norm",
    "oscillation",
    "pi_R",
    "power_weight",
    "sample",
    "unit_cube",
    "unit_rect",
    "unit_weight",
    "weak_lp_norm",
    "__version__",
]
