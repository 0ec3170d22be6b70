"""
Formatting and color helper functions for drntool CLI output.
"""

from typing import Any, Iterable

import click
from colorama import Fore, Style
from tabulate import tabulate

from drntool.core.models import SuppressionEntry
from drntool.utils.units import rad_to_hz

DESCRIPTION_MAX_LENGTH = 60


def _header(names: Iterable[str]) -> list[str]:
    return [Fore.CYAN + name + Style.RESET_ALL for name in names]


def _value(value: Any) -> str:
    if isinstance(value, bool):
        return (Fore.GREEN if value else Fore.RED) + str(value) + Style.RESET_ALL
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def truncate(text: str, max_length: int = DESCRIPTION_MAX_LENGTH) -> str:
    """Truncate text to fit terminal width, adding "..." when cut."""
    if len(text) <= max_length:
        return text
    return text[: max_length - 3] + "..."


def format_summary_table(entries: Iterable[tuple[str, Any]]) -> str:
    """Two-column table of report quantities."""
    table_data = [[Fore.GREEN + key + Style.RESET_ALL, _value(value)] for key, value in entries]
    return tabulate(table_data, headers=_header(["Quantity", "Value"]), tablefmt="grid")


def format_presets_table(rows: list[dict[str, str]]) -> str:
    """Table of bundled presets."""
    table_data = [
        [
            Fore.GREEN + row["name"] + Style.RESET_ALL,
            truncate(row["description"]),
            Fore.YELLOW + row["beam_radius"] + Style.RESET_ALL,
            Fore.YELLOW + row["diffusion"] + Style.RESET_ALL,
            row["gamma_dark_values"] or "-",
        ]
        for row in rows
    ]
    return tabulate(
        table_data,
        headers=_header(["Preset", "Description", "a [cm]", "D [cm²/s]", "Γ_dark values"]),
        tablefmt="grid",
    )


def format_suppression_table(entries: list[SuppressionEntry]) -> str:
    """Table of peak excess and central width against the dark dephasing rate."""
    table_data = [
        [
            f"{rad_to_hz(entry.dark_rate):.6g}",
            f"{entry.peak_excess:.6g}",
            f"{rad_to_hz(entry.central_fwhm):.6g}",
            Fore.YELLOW + f"{entry.suppression_ratio:.4g}" + Style.RESET_ALL,
            f"{100 * entry.wing_change:.3g}%",
        ]
        for entry in entries
    ]
    return tabulate(
        table_data,
        headers=_header(["Γ_dark/2π [Hz]", "Peak excess", "Central FWHM [Hz]", "Suppression", "Wing change"]),
        tablefmt="grid",
    )


def print_written_files(paths: list[str]) -> None:
    click.echo(click.style(f"Wrote {len(paths)} file(s):", fg="cyan"))
    for path in paths:
        click.echo(f"  {path}")
