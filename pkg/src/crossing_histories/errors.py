"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(ArithmeticError):
    """Non-finite input or a quadrature that cannot be trusted."""


class CoverageError(DomainError):
    """The grid does not contain the support of the state."""


class ResolutionError(DomainError):
    """Too few quadrature points or time steps for the requested accuracy."""


class StepSizeError(DomainError):
    """Time step exceeds the documented stability bound."""


class RegimeWarning(UserWarning):
    """Parameters lie outside the regime where an approximation holds."""


class RegimeError(RuntimeError):
    """A RegimeWarning escalated under strict mode."""
