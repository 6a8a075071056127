"""Numerical study of singular fully nonlinear elliptic problems on annuli.

Radial reduction of Pucci-type equations with quadratic gradient growth and
a singular absorption term ``M (r - rho)^mu u^(-alpha)``: monotone solver,
principal eigenpairs, explicit barriers and boundary-rate diagnostics.
"""
from .errors import (BracketViolation, ConvergenceError, NumericalError,
                     PreconditionError, SearchExhausted, SingularityBreach,
                     ValidationError)
from .grid import GridFunction, RadialGrid
from .params import (AnnulusGeometry, DerivedConstants, Ellipticity, GrowthParams,
                     ProblemSpec, SingularForcing, eval_model, from_flat, pucci,
                     to_flat, validate)
from .solver import SolveConfig, SolveReport, compare_audit, solve_regularized, solve_singular

__version__ = "0.1.0"

__all__ = [
    "AnnulusGeometry", "BracketViolation", "ConvergenceError", "DerivedConstants",
    "Ellipticity", "GridFunction", "GrowthParams", "NumericalError",
    "PreconditionError", "ProblemSpec", "RadialGrid", "SearchExhausted",
    "SingularForcing", "SingularityBreach", "SolveConfig", "SolveReport",
    "ValidationError", "compare_audit", "eval_model", "from_flat", "pucci",
    "solve_regularized", "solve_singular", "to_flat", "validate",
]
