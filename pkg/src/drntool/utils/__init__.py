"""Utilities layer - unit conversion and value parsing."""

from drntool.utils.units import TWO_PI, format_float, hz_to_rad, parse_float_list, parse_rate, rad_to_hz

__all__ = [
    "TWO_PI",
    "hz_to_rad",
    "rad_to_hz",
    "parse_rate",
    "parse_float_list",
    "format_float",
]
