"""Lie-symmetry admissibility, reduction and solution of two-phase Stefan problems."""

__version__ = "0.1.0"

from .expr import (DiffusivityClass, DiffusivityTag, Expr, classify_diffusivity, diff,  # noqa: E402
                   evaluate, parse, simplify)
from .problem import (CanonicalProblem, PhysicalProblem, goodman_transform, load_problem,  # noqa: E402
                      phi, phi_inverse, transform_problem)
from .symmetry import (AdmissionResult, LieOperator, OperatorFamily, admitted_symmetries,  # noqa: E402
                       check_invariance, classify_mai, normalize_operator, prolong1,
                       velocity_coefficient)
from .reduction import ReducedBVP, reconstruct, reduce  # noqa: E402
from .solver import (ShootingConfig, SolutionResult, integrate_ode, solve_self_similar,  # noqa: E402
                     solve_traveling_wave)
from .validate import (ValidationReport, analytic_constant_case, front_track,  # noqa: E402
                       pde_residual)

__all__ = [
    "Expr", "DiffusivityClass", "DiffusivityTag", "parse", "evaluate", "diff", "simplify",
    "classify_diffusivity", "PhysicalProblem", "CanonicalProblem", "phi", "phi_inverse",
    "goodman_transform", "transform_problem", "load_problem", "LieOperator", "OperatorFamily",
    "AdmissionResult", "classify_mai", "normalize_operator", "prolong1", "velocity_coefficient",
    "check_invariance", "admitted_symmetries", "ReducedBVP", "reduce", "reconstruct",
    "ShootingConfig", "SolutionResult", "integrate_ode", "solve_traveling_wave",
    "solve_self_similar", "ValidationReport", "analytic_constant_case", "pde_residual",
    "front_track",
]
