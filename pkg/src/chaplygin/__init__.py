"""Self-similar cylindrical Euler-Poisson flows with a Chaplygin gas."""

from ._backend import kernels as _kernels
from .errors import (
                     ConfigError,
                     ConvergenceError,
                     CriticalPointError,
                     DomainError,
                     SetupError,
)
from .integrator import (
                     Adaptive45,
                     Classification,
                     FixedEuler,
                     IntegrationConfig,
                     SolutionTable,
                     Termination,
                     TerminationKind,
                     classify,
                     integrate,
                     sweep,
)
from .model import (
                     ChaplyginEos,
                     ShapeState,
                     SimilarityExponents,
                     VariantId,
                     exponents_for,
                     pressure,
                     reconstruct_fields,
)
from .reduction import MomentumForm, derivatives, linear_system
from .svg import render_svg
from .verifier import (
                     GridSpec,
                     ResidualReport,
                     check_balance,
                     convergence_order,
                     convergence_study,
                     ode_residuals,
                     pde_residuals,
                     residual_report,
)

BACKEND = _kernels.NAME

__version__ = "0.1.0"

__all__ = [
                     "BACKEND",
                     "Adaptive45",
                     "ChaplyginEos",
                     "Classification",
                     "ConfigError",
                     "ConvergenceError",
                     "CriticalPointError",
                     "DomainError",
                     "FixedEuler",
                     "GridSpec",
                     "IntegrationConfig",
                     "MomentumForm",
                     "ResidualReport",
                     "SetupError",
                     "ShapeState",
                     "SimilarityExponents",
                     "SolutionTable",
                     "Termination",
                     "TerminationKind",
                     "VariantId",
                     "check_balance",
                     "classify",
                     "convergence_order",
                     "convergence_study",
                     "derivatives",
                     "exponents_for",
                     "integrate",
                     "linear_system",
                     "ode_residuals",
                     "pde_residuals",
                     "pressure",
                     "reconstruct_fields",
                     "render_svg",
                     "residual_report",
                     "sweep",
]
