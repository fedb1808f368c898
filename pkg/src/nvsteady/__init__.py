"""Polytropic steady states of the spherically symmetric Nordstrom-Vlasov system.

The public surface is grouped by task:

* kernels of the energy integrals in :mod:`nvsteady.special_functions`
* the radial field solver in :mod:`nvsteady.solver`
* densities, pressures and integrated quantities in :mod:`nvsteady.observables`
* boundary behaviour near the support radius in :mod:`nvsteady.finite_radius`
* particle orbits in the static field in :mod:`nvsteady.characteristics`
"""

from ._accel import USING_NUMBA
from .characteristics import (FieldInterpolant, OrbitState, eval_density,
                              integrate_orbit, reduced_energy)
from .errors import ContractionError, DomainError, QuadratureError, SolverError
from .finite_radius import (alpha_limit, beta_limit, build_diagnostics, check_window,
                            xy_residuals)
from .observables import (compute_pressures, compute_rho, compute_source, observe,
                          summarize, total_energy, total_mass, tov_residual)
from .solver import (RadialProfile, SolverNumerics, asymptotic_flatten, detect_radius,
                     extend_vacuum, integrate_steady_state)
from .special_functions import (PolytropicAnsatz, Variant, beta_coeff, closed_form_h,
                                eval_g, eval_g_derivative, eval_h, eval_h_derivative)

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA", "FieldInterpolant", "OrbitState", "eval_density", "integrate_orbit",
    "reduced_energy", "ContractionError", "DomainError", "QuadratureError", "SolverError",
    "alpha_limit", "beta_limit", "build_diagnostics", "check_window", "xy_residuals",
    "compute_pressures", "compute_rho", "compute_source", "observe", "summarize",
    "total_energy", "total_mass", "tov_residual", "RadialProfile", "SolverNumerics",
    "asymptotic_flatten", "detect_radius", "extend_vacuum", "integrate_steady_state",
    "PolytropicAnsatz", "Variant", "beta_coeff", "closed_form_h", "eval_g",
    "eval_g_derivative", "eval_h", "eval_h_derivative",
]
