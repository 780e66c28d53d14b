"""Galerkin discretisation and property checks for degenerate operators a u^(2n) on (0, 1)."""

from .density import CutoffFunction, truncation_error, xi
from .errors import (DegenopError, DivergenceError, InconclusiveError, IntegrationError,
                     NumericalError)
from .galerkin import AssembledOperator, BasisSet, assemble, build_basis, green_residual
from .profiles import (Degeneracy, DegeneracyClass, DegeneracyProfile, GrowthReport,
                       check_growth_hypothesis, classify, make_constant_profile, make_custom_profile,
                       make_power_profile, profile_from_json)
from .quadrature import QuadratureScheme, build_graded_mesh, integrate, integrate_weighted
from .solver import EllipticSolution, EvolutionTrace, evolve, project_datum, solve_elliptic
from .spaces import (FunctionSample, boundary_trace_sequence, hardy_ratio, higher_hardy_ratio,
                     sobolev_norm, weighted_l2_norm)
from .spectral import (SpectralDecomposition, eigendecompose, resolvent_apply, semigroup_apply,
                       smoothing_norm)

__version__ = "0.1.0"
