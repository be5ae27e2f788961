"""Weyl-type matrices and their inverse reduction for higher-order differential
operators with regular singularities on star graphs."""
from .edge_basis import EdgeBasisOptions, eval_S, jets_at
from .errors import ConfigError, NearEigenvalue, NumericalError, SingstarError
from .fit import FitOptions, FitProblem, fit
from .frobenius import build_basis, eval_C, exponents, sector_data
from .graph import EdgeSpec, MatchingForms, StarGraph, load_graph, star, validate
from .reduction import ReductionInput, closed_loop, reduce, reduce_point
from .weyl import (
    asymptotic_reference,
    characteristic_fn,
    locate_eigenvalues,
    solve_psi,
    weyl_matrix_Ms,
    weyl_matrix_mj,
)

__version__ = "0.1.0"

__all__ = [
    "EdgeBasisOptions",
    "eval_S",
    "jets_at",
    "ConfigError",
    "NearEigenvalue",
    "NumericalError",
    "SingstarError",
    "FitOptions",
    "FitProblem",
    "fit",
    "build_basis",
    "eval_C",
    "exponents",
    "sector_data",
    "EdgeSpec",
    "MatchingForms",
    "StarGraph",
    "load_graph",
    "star",
    "validate",
    "ReductionInput",
    "closed_loop",
    "reduce",
    "reduce_point",
    "asymptotic_reference",
    "characteristic_fn",
    "locate_eigenvalues",
    "solve_psi",
    "weyl_matrix_Ms",
    "weyl_matrix_mj",
]
