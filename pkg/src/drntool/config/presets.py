"""Bundled parameter presets, stored as ``.cfg`` files next to this module."""

import logging
from importlib import resources

from drntool.config.schema import parse_config_text
from drntool.infrastructure.exceptions import ConfigValidationError

logger = logging.getLogger(__name__)

PRESET_NAMES = ("fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4")


def _preset_file(name: str):
    if name not in PRESET_NAMES:
        raise ConfigValidationError(f"Unknown preset '{name}'. Available presets: {', '.join(PRESET_NAMES)}.")
    return resources.files("drntool.config").joinpath("presets", f"{name}.cfg")


def preset_text(name: str) -> str:
    """Raw text of a bundled preset, comments included."""
    return _preset_file(name).read_text(encoding="utf-8")


def load_preset(name: str) -> dict[str, str]:
    """Key-value pairs of a preset, values still unparsed."""
    logger.debug(f"Loading preset {name}")
    return parse_config_text(preset_text(name), source=f"preset {name}")


def preset_description(name: str) -> str:
    """First comment line of the preset file."""
    for line in preset_text(name).splitlines():
        if line.startswith("#"):
            return line.lstrip("#").strip()
    return ""


def list_presets() -> list[dict[str, str]]:
    """Name, description and key parameters of every bundled preset."""
    rows = []
    for name in PRESET_NAMES:
        values = load_preset(name)
        rows.append(
            {
                "name": name,
                "description": preset_description(name),
                "beam_radius": values.get("beam_radius", ""),
                "diffusion": values.get("diffusion", ""),
                "gamma_dark_values": values.get("gamma_dark_values", ""),
            }
        )
    return rows
