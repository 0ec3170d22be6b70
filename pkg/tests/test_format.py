"""
Unit tests for formatters.py (summary, preset and suppression tables).
"""

import math
import re

from drntool.cli.formatters import (
    format_presets_table,
    format_summary_table,
    format_suppression_table,
    truncate,
)
from drntool.core.models import SuppressionEntry


def strip_ansi(text):
    return re.sub(r"\x1b\[[0-9;]*m", "", text)


def test_truncate():
    assert truncate("short") == "short"
    cut = truncate("x" * 100, max_length=10)
    assert cut == "xxxxxxx..."
    assert len(cut) == 10


def test_summary_table_formats_floats_and_flags():
    output = strip_ansi(format_summary_table([("fwhm_hz", 740.123456789), ("validity_ok", True), ("sequences", 12)]))
    assert "fwhm_hz" in output
    assert "740.123" in output
    assert "True" in output
    assert "12" in output


def test_presets_table():
    rows = [
        {"name": "fig4", "description": "gradient", "beam_radius": "0.04", "diffusion": "30", "gamma_dark_values": ""}
    ]
    output = strip_ansi(format_presets_table(rows))
    assert "fig4" in output
    assert "0.04" in output


def test_suppression_table_shows_hz():
    entry = SuppressionEntry(
        dark_rate=2 * math.pi * 400,
        peak_excess=0.01,
        central_fwhm=2 * math.pi * 800,
        suppression_ratio=2.5,
        wing_change=0.004,
    )
    output = strip_ansi(format_suppression_table([entry]))
    assert "400" in output
    assert "800" in output
    assert "2.5" in output
    assert "0.4%" in output
