"""
Configuration schema for drntool.

Config files are flat ``key = value`` text, one key per line, ``#`` starts a comment.
Rates are in rad/s unless written with an ``hz`` or ``khz`` suffix, lengths in cm,
times in s. Keys ending in ``_hz`` are plain frequencies in Hz.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

from drntool.infrastructure.exceptions import ConfigValidationError
from drntool.utils.units import parse_float_list, parse_rate


@dataclass(frozen=True)
class SchemaEntry:
    """One configuration key.

    Attributes:
        kind: Value type ("float", "rate", "int", "str", "rate_list")
        unit: Unit shown in the bundled schema listing
        default: Default value (already parsed), None when optional or required
        description: One-line description
        minimum: Smallest allowed value (inclusive) for numeric kinds
        positive: Value must be strictly positive
        optional: The key may be empty or "none"
        choices: Allowed values for string kinds
    """

    kind: str
    unit: str
    default: Any
    description: str
    minimum: Optional[float] = None
    positive: bool = False
    optional: bool = False
    choices: tuple[str, ...] = ()


TWO_PI = 2.0 * math.pi

SCHEMA: dict[str, SchemaEntry] = {
    # physical parameters
    "density": SchemaEntry("float", "cm^-3", 6e10, "Atomic number density n", positive=True),
    "wavelength": SchemaEntry("float", "cm", 795e-7, "Optical wavelength λ", positive=True),
    "cell_length": SchemaEntry("float", "cm", 5.0, "Cell length L", positive=True),
    "gamma": SchemaEntry("rate", "rad/s", TWO_PI * 30e6, "Excited-state relaxation rate γ", positive=True),
    "eta": SchemaEntry("rate", "rad/s", TWO_PI * 5.75e6, "Excited-state radiative decay rate η", positive=True),
    "gamma0": SchemaEntry("rate", "rad/s", 50.0, "Intrinsic ground-state decoherence rate Γ0", positive=True),
    "omega_d_sq": SchemaEntry(
        "float", "rad^2/s^2", 4.1469023e12, "Squared strong-field Rabi frequency |Ω_d|²", minimum=0
    ),
    "background": SchemaEntry("float", "", 0.9, "Background transmission T0 in (0, 1]", positive=True),
    # geometry
    "beam_radius": SchemaEntry("float", "cm", 0.075, "Beam radius a (half the beam diameter)", positive=True),
    "cell_radius": SchemaEntry("float", "cm", 1.25, "Cell radius R", positive=True),
    "diffusion": SchemaEntry("float", "cm^2/s", 50.0, "Diffusion coefficient D", positive=True),
    # ensemble
    "max_returns": SchemaEntry("int", "", 2, "Largest number of dark periods per sequence (0-4)", minimum=0),
    "t_in_nodes": SchemaEntry("int", "", 64, "Quadrature nodes for the in-beam time", minimum=2),
    "t_out_nodes": SchemaEntry("int", "", 64, "Quadrature nodes for the dark time", minimum=2),
    "gamma_dark": SchemaEntry("rate", "rad/s", 0.0, "Extra decay rate applied only in the dark Γ_dark", minimum=0),
    "gamma_dark_values": SchemaEntry(
        "rate_list", "rad/s", (0.0,), "Comma-separated Γ_dark values compared by the gradient command"
    ),
    "coherence_horizon": SchemaEntry(
        "float", "s", None, "Cap on the total duration of a sequence", positive=True, optional=True
    ),
    "sequence_source": SchemaEntry(
        "str",
        "",
        "joint",
        "Sequences from joint walker samples or an independent product",
        choices=("joint", "product"),
    ),
    # walkers
    "seed": SchemaEntry("int", "", None, "RNG seed, required for Monte Carlo", minimum=0, optional=True),
    "walkers": SchemaEntry("int", "", 20000, "Number of Monte Carlo walkers", minimum=1),
    "time_step": SchemaEntry("float", "s", None, "Base walker step; default τ_D/400", positive=True, optional=True),
    "horizon": SchemaEntry(
        "float", "s", None, "Walker time horizon; default max(200·τ_D, 8/Γ0)", positive=True, optional=True
    ),
    "max_depth": SchemaEntry(
        "int", "", None, "Returns recorded per walker; default max_returns", minimum=0, optional=True
    ),
    "min_dark_time": SchemaEntry(
        "float", "s", None, "Shortest excursion counted as a dark period; default 20·τ_D", minimum=0, optional=True
    ),
    "block_size": SchemaEntry("int", "", 4096, "Walkers per random stream", minimum=1),
    # grid and outputs
    "grid_points": SchemaEntry("int", "", 2001, "Detuning grid points (odd)", minimum=3),
    "max_detuning_hz": SchemaEntry(
        "float", "Hz", None, "Grid half-span; default 20·(Γ + 1/τ_D)/2π", positive=True, optional=True
    ),
    "distribution_bins": SchemaEntry("int", "", 400, "Bins of the time distributions", minimum=1),
    "output_dir": SchemaEntry("str", "", "drntool-out", "Directory for output files"),
}

_NONE_VALUES = ("", "none", "null")


def _to_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"Invalid integer: {text}")
    return int(value)


_PARSERS: dict[str, Callable[[str], Any]] = {
    "float": float,
    "rate": parse_rate,
    "int": _to_int,
    "str": str,
    "rate_list": lambda text: tuple(parse_float_list(text)),
}


def parse_value(key: str, raw: Any) -> Any:
    """
    Parse and range-check one value according to its schema entry.

    Non-string values (already parsed, e.g. from CLI flags) are only range-checked.

    Raises:
        KeyError: for unknown keys
        ValueError: for malformed or out-of-range values
    """
    entry = SCHEMA[key]
    if isinstance(raw, str):
        text = raw.strip()
        if text.lower() in _NONE_VALUES and entry.kind != "str":
            if not entry.optional:
                raise ValueError(f"{key} requires a value.")
            return None
        value = _PARSERS[entry.kind](text)
    else:
        value = raw
    if value is None:
        if not entry.optional:
            raise ValueError(f"{key} requires a value.")
        return None

    numbers = value if entry.kind == "rate_list" else (value,)
    if entry.kind in ("float", "rate", "int", "rate_list"):
        for number in numbers:
            if not math.isfinite(number):
                raise ValueError(f"{key} must be finite (got {number}).")
            if entry.positive and not number > 0:
                raise ValueError(f"{key} must be positive (got {number}).")
            if entry.minimum is not None and number < entry.minimum:
                raise ValueError(f"{key} must be at least {entry.minimum:g} (got {number}).")
    if entry.choices and value not in entry.choices:
        raise ValueError(f"{key} must be one of {', '.join(entry.choices)} (got {value!r}).")
    return value


def render_value(value: Any) -> str:
    """Canonical text for a parsed value (repr for floats, comma lists, 'none')."""
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ",".join(render_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str, source: str = "config") -> dict[str, str]:
    """
    Split flat ``key = value`` text into raw string values.

    Blank lines and ``#`` comments are skipped; keys are lower-cased. Keys are not
    checked against the schema here.

    Raises:
        ConfigValidationError: for lines without ``=`` or with an empty key
    """
    values: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip().lower()
        if not sep or not key:
            raise ConfigValidationError(f"{source}, line {number}: expected 'key = value', got {line.strip()!r}.")
        values[key] = value.strip()
    return values
