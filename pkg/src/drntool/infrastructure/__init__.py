"""Infrastructure layer - exception hierarchy and file export."""

from drntool.infrastructure.exceptions import (
    ConfigValidationError,
    DrnError,
    GridError,
    InsufficientDataError,
    NumericalError,
    ValidityWarning,
)

__all__ = [
    "DrnError",
    "ConfigValidationError",
    "GridError",
    "InsufficientDataError",
    "NumericalError",
    "ValidityWarning",
]
