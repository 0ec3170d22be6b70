"""Exceptions used below the CLI layer (core numerics, config, export).

Exception Hierarchy:
    Exception (Python built-in)
    └── DrnError
        ├── ConfigValidationError - Configuration validation failures
        ├── GridError - Detuning grid is asymmetric or does not match the data
        ├── InsufficientDataError - Empty distributions, missing samples, too few points
        └── NumericalError - Non-finite or failed numerics, tagged with the pipeline stage

    UserWarning
    └── ValidityWarning - Parameters outside the regime where the transmission formula holds

These exceptions are UI-agnostic. The CLI layer translates them to
user-facing errors:
    - ConfigValidationError, GridError → click.UsageError (CLI)
    - InsufficientDataError, NumericalError → SimulationError (CLI)
"""

from typing import Optional


class DrnError(Exception):
    """Base class for all drntool errors."""

    pass


class ConfigValidationError(DrnError):
    """Configuration validation failures.

    Raised when a config key is unknown, a value cannot be parsed, a value is
    out of range, or a required key (such as the seed) is missing.
    """

    pass


class GridError(DrnError, ValueError):
    """Detuning grid is not symmetric about zero or does not match a lineshape."""

    pass


class InsufficientDataError(DrnError):
    """Not enough data to carry out a computation (no samples, empty distribution).

    Attributes:
        stage: Name of the pipeline stage that ran out of data, None until known
    """

    def __init__(self, message: str, stage: Optional[str] = None) -> None:
        super().__init__(message)
        self.stage = stage


class NumericalError(DrnError):
    """A numerical stage produced non-finite values or failed outright.

    Attributes:
        stage: Name of the pipeline stage that failed (e.g. "lineshape", "walks", "fit")
    """

    def __init__(self, message: str, stage: Optional[str] = None) -> None:
        super().__init__(message)
        self.stage = stage


class ValidityWarning(UserWarning):
    """Parameters violate the validity conditions of the transmission formula."""

    pass
