"""Arrival-time probabilities for quantum and classical particles from decoherent histories."""

from .errors import (
    CoverageError,
    DomainError,
    NumericError,
    RegimeError,
    RegimeWarning,
    ResolutionError,
    StepSizeError,
)

__version__ = "0.1.0"

__all__ = [
    "CoverageError",
    "DomainError",
    "NumericError",
    "RegimeError",
    "RegimeWarning",
    "ResolutionError",
    "StepSizeError",
    "__version__",
]
