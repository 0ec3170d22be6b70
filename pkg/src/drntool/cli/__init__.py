"""CLI layer - command-line interface and presentation logic."""

from drntool.cli.main import cli

__all__ = [
    "cli",
]
