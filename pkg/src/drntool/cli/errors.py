"""
Centralized error handling utilities for drntool CLI.
"""

from typing import Optional

import click


class CLIError(Exception):
    """Custom exception for CLI-related errors."""

    pass


class SimulationError(CLIError):
    """A pipeline stage failed during a run.

    Wraps NumericalError and InsufficientDataError from the core layer so commands
    report which stage failed without knowing the numerics.

    Attributes:
        message: What went wrong
        stage: Pipeline stage that failed, None when unknown
    """

    def __init__(self, message: str, stage: Optional[str] = None) -> None:
        super().__init__(message)
        self.message = message
        self.stage = stage


def handle_cli_exception(e: CLIError) -> None:
    """Print a red error line (naming the failed stage when known) and abort.

    Raises:
        click.Abort: Always raised after displaying error message
    """
    if isinstance(e, SimulationError):
        stage = e.stage or "unknown"
        click.echo(click.style(f"Simulation failed in stage '{stage}': {e.message}", fg="red"), err=True)
        click.echo(click.style("No output files were written.", fg="yellow"), err=True)
    else:
        click.echo(click.style(f"Error: {e}", fg="red"), err=True)
    raise click.Abort()
