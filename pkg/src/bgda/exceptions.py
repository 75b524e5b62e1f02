"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input is outside the declared domain (not on the simplex, wrong shape, ...)."""


class DegenerateReferenceError(DomainError):
    """A reference point has coordinates below the floor where grad(psi) is finite."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values.

    When raised by an optimizer run, the partial trace collected so far is
    attached as ``err.trace`` for diagnosis.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SolverFailureError(RuntimeError):
    """An iterative solver did not converge; ``err.residual`` holds the final residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UsageError(RuntimeError):
    """API misuse, e.g. backpropagating through a tape that was not recorded."""


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""
