"""
Unit conversion and value parsing helpers for drntool.

Internal computation works in rad/s and seconds. Widths are usually quoted
in Hz, so user-facing values accept an ``hz`` suffix.
"""

import math
from typing import Optional

TWO_PI = 2.0 * math.pi


def hz_to_rad(value_hz: float) -> float:
    """Convert a frequency in Hz to an angular rate in rad/s."""
    return TWO_PI * value_hz


def rad_to_hz(value_rad: float) -> float:
    """Convert an angular rate in rad/s to Hz."""
    return value_rad / TWO_PI


def parse_rate(value: str, default: Optional[float] = None) -> float:
    """
    Parse a rate given either in rad/s ("2513.27") or in Hz with a suffix ("400hz", "1.5khz").

    Returns the rate in rad/s. Empty values return ``default`` if provided.

    Example:
        >>> parse_rate("400hz") == 2 * math.pi * 400
        True
        >>> parse_rate("1e3")
        1000.0
    """
    if value is None or not str(value).strip():
        if default is None:
            raise ValueError("Empty rate value")
        return default
    text = str(value).strip().lower().replace(" ", "")
    scale = 1.0
    for suffix, factor in (("khz", 1e3), ("hz", 1.0)):
        if text.endswith(suffix):
            text = text[: -len(suffix)]
            scale = TWO_PI * factor
            break
    try:
        return float(text) * scale
    except ValueError:
        raise ValueError(f"Invalid rate: {value}")


def parse_float_list(value: str) -> list[float]:
    """Parse a comma-separated list of rates (each accepting the ``hz`` suffix)."""
    if not value or not str(value).strip():
        return []
    return [parse_rate(item) for item in str(value).split(",") if item.strip()]


def format_float(value: float) -> str:
    """Render a float with 17 significant digits so files round-trip exactly."""
    return f"{value:.17g}"
