"""
Text output for drntool: CSV tables and key-value reports.

Every file starts with ``# key = value`` header lines carrying the software version,
the config hash, the seed and all run parameters. Floats are written with 17
significant digits. Files are rendered to strings first and only written by
``write_outputs`` once everything has been computed.
"""

import csv
import io
import logging
import os
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from drntool import __version__
from drntool.core.models import Lineshape, TimeDistribution
from drntool.utils.units import format_float, hz_to_rad

logger = logging.getLogger(__name__)

LINESHAPE_COLUMNS = ("detuning_hz", "transmission", "contrast")
DISTRIBUTION_COLUMNS = ("t_lower", "t_upper", "mass", "t_lower_tau", "t_upper_tau")


def header_lines(
    config_hash: str,
    seed: Optional[int],
    values: Iterable[tuple[str, str]] = (),
    extra: Optional[dict[str, Any]] = None,
) -> list[str]:
    """Header lines common to every output file."""
    lines = [
        f"# drntool_version = {__version__}",
        f"# config_hash = {config_hash}",
        f"# seed = {'none' if seed is None else seed}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key} = {_format_cell(value)}")
    for key, value in values:
        lines.append(f"# param.{key} = {value}")
    return lines


def _format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    return str(value)


def render_csv(header: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    for line in header:
        buffer.write(line + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(value) for value in row])
    return buffer.getvalue()


def render_lineshape(shape: Lineshape, header: Sequence[str]) -> str:
    """Lineshape table: detuning in Hz, transmission T(Δ) and contrast T(Δ) - T0."""
    lines = list(header) + [f"# background = {format_float(shape.background)}"]
    contrast = shape.values - shape.background
    rows = zip(shape.in_hz(), shape.values, contrast)
    return render_csv(lines, LINESHAPE_COLUMNS, rows)


def render_distribution(dist: TimeDistribution, tau: float, header: Sequence[str]) -> str:
    """Time distribution table in seconds and in units of tau."""
    lines = list(header) + [
        f"# escape_mass = {format_float(dist.escape_mass)}",
        f"# horizon = {format_float(dist.horizon)}",
        f"# tau_d = {format_float(tau)}",
    ]
    lower = dist.bin_edges[:-1]
    upper = dist.bin_edges[1:]
    rows = zip(lower, upper, dist.mass, lower / tau, upper / tau)
    return render_csv(lines, DISTRIBUTION_COLUMNS, rows)


def render_report(header: Sequence[str], entries: Iterable[tuple[str, Any]]) -> str:
    """Key-value report, one ``key = value`` line per entry."""
    body = [f"{key} = {_format_cell(value)}" for key, value in entries]
    return "\n".join(list(header) + body) + "\n"


def write_outputs(directory: str, files: dict[str, str]) -> list[str]:
    """Write pre-rendered files into directory and return their paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, text in files.items():
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.debug(f"Wrote {path}")
        paths.append(path)
    return paths


def read_header(path: str) -> dict[str, str]:
    """The ``# key = value`` header of a drntool file."""
    metadata = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, sep, value = line[1:].partition("=")
            if sep:
                metadata[key.strip()] = value.strip()
    return metadata


def read_lineshape_csv(path: str) -> tuple[Lineshape, dict[str, str]]:
    """
    Load a lineshape written by ``render_lineshape``.

    Detunings are converted back to rad/s. The background comes from the header and
    defaults to 0 for tables without one.

    Raises:
        ValueError: if the table is malformed or lacks the required columns
        GridError: if the detunings are not symmetric about zero
    """
    metadata = read_header(path)
    with open(path, encoding="utf-8") as f:
        table = [row for row in csv.reader(line for line in f if not line.startswith("#")) if row]
    if len(table) < 2:
        raise ValueError(f"{path}: no data rows.")
    columns = [name.strip() for name in table[0]]
    for required in ("detuning_hz", "transmission"):
        if required not in columns:
            raise ValueError(f"{path}: missing column '{required}'.")
    try:
        data = np.array([[float(cell) for cell in row] for row in table[1:]])
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from e
    if data.shape[1] != len(columns):
        raise ValueError(f"{path}: rows do not match the header columns.")
    background = float(metadata.get("background", 0.0))
    detunings = hz_to_rad(data[:, columns.index("detuning_hz")])
    shape = Lineshape(detunings=detunings, values=data[:, columns.index("transmission")], background=background)
    logger.debug(f"Read lineshape from {path}: {len(detunings)} points, background={background}")
    return shape, metadata
