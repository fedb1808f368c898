"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature exhausted its subdivision budget."""


class ContractionError(RuntimeError):
    """The central Picard iteration failed to contract after all retries."""


class SolverError(RuntimeError):
    """The radial integrator could not continue (step underflow, step budget)."""
