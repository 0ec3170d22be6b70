"""Configuration layer - schema, presets, settings and environment management."""

from drntool.config.presets import PRESET_NAMES, list_presets, load_preset
from drntool.config.schema import SCHEMA
from drntool.config.settings import CONFIG_PATH, DEFAULTS, Config, GridSpec, RunConfig, build_run_config, config_hash

__all__ = [
    "Config",
    "DEFAULTS",
    "CONFIG_PATH",
    "SCHEMA",
    "PRESET_NAMES",
    "GridSpec",
    "RunConfig",
    "build_run_config",
    "config_hash",
    "list_presets",
    "load_preset",
]
