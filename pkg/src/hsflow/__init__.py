"""Numerical laboratory for weighted Hele-Shaw flow on the unit disk.

Closed-form kernels, conformal weights and their geometry, the obstacle-
problem flow solver, growth constants, geodesics, and the exponential-map
chart, with a CLI that emits reports and figures.
"""

__version__ = "0.1.0"

from .errors import (
    ChartBuildError,
    DomainError,
    EmptyDomainError,
    InvalidWeightError,
    SingularInputError,
    SolverFailureError,
)
from .kernels import bergman, compensator, gamma1, green, lap_gamma1
from .surface import curvature, hyperbolicity_margin, make_weight, mobius_pullback

__all__ = [
    "ChartBuildError",
    "DomainError",
    "EmptyDomainError",
    "InvalidWeightError",
    "SingularInputError",
    "SolverFailureError",
    "bergman",
    "compensator",
    "gamma1",
    "green",
    "lap_gamma1",
    "curvature",
    "hyperbolicity_margin",
    "make_weight",
    "mobius_pullback",
    "__version__",
]
