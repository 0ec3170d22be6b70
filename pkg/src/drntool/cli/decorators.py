"""CLI decorators for exception translation and warning display.

This module provides decorators that translate core and config exceptions
to CLI exceptions for user-friendly error messages.
"""

import functools
import logging
import warnings
from typing import Callable

import click

from drntool.cli.errors import SimulationError, handle_cli_exception
from drntool.infrastructure.exceptions import (
    ConfigValidationError,
    GridError,
    InsufficientDataError,
    NumericalError,
    ValidityWarning,
)
from drntool.utils.units import parse_rate

logger = logging.getLogger(__name__)


def translate_exceptions(func: Callable) -> Callable:
    """Decorator that translates lower-layer exceptions to CLI exceptions.

    Translation rules:
    - ConfigValidationError, GridError, ValueError → click.UsageError (exit 2)
    - NumericalError, InsufficientDataError → SimulationError, then abort (exit 1)

    Usage:
        @click.command()
        @translate_exceptions
        def my_command():
            ...
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigValidationError, GridError) as e:
            logger.debug(f"{type(e).__name__} caught: {e}")
            raise click.UsageError(str(e)) from e
        except (NumericalError, InsufficientDataError) as e:
            logger.debug(f"{type(e).__name__} caught in stage {e.stage}: {e}")
            handle_cli_exception(SimulationError(str(e), stage=e.stage))
        except ValueError as e:
            logger.debug(f"ValueError caught: {e}")
            raise click.UsageError(str(e)) from e

    return wrapper


def show_validity_warnings(func: Callable) -> Callable:
    """Decorator that echoes ValidityWarnings raised during a command in yellow."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ValidityWarning)
            try:
                return func(*args, **kwargs)
            finally:
                seen = set()
                for warning in caught:
                    message = str(warning.message)
                    if issubclass(warning.category, ValidityWarning) and message not in seen:
                        seen.add(message)
                        click.echo(click.style(f"Warning: {message}", fg="yellow"), err=True)

    return wrapper


def validate_non_negative_rates(rates: tuple[float, ...]) -> tuple[float, ...]:
    """Check --gamma-dark values.

    Raises:
        click.UsageError: If any rate is negative
    """
    for rate in rates:
        if rate < 0:
            raise click.UsageError(f"gamma-dark must be non-negative (got: {rate})")
    return rates


class RateParamType(click.ParamType):
    """Click parameter for rates: rad/s, or Hz with an ``hz``/``khz`` suffix."""

    name = "rate"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        try:
            return parse_rate(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)


RATE = RateParamType()
