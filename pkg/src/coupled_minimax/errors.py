"""Exception types raised across the package."""


class MinimaxError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MinimaxError, ValueError):
    """Invalid parameters, unknown names or inconsistent options."""


class DimensionError(MinimaxError, ValueError):
    """Array shapes do not match the declared problem dimensions."""

    def __init__(self, what, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected shape {expected}, got {got}")


class DomainError(MinimaxError, ValueError):
    """An argument lies outside the domain of the operation (e.g. a negative multiplier)."""


class InfeasibilityError(MinimaxError):
    """A feasible set or a constrained subproblem turned out to be empty."""

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class DivergenceError(MinimaxError):
    """An iterative solver produced non-finite iterates."""


class NotApplicableError(MinimaxError):
    """The requested quantity is undefined for this instance (e.g. zero strong-concavity modulus)."""
