import hashlib
import logging
import os
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from platformdirs import user_config_dir

from drntool.config.presets import load_preset
from drntool.config.schema import SCHEMA, parse_config_text, parse_value, render_value
from drntool.core.diffusion import lowest_mode_rate
from drntool.core.lineshape import DEFAULT_GRID_SPAN, detuning_grid
from drntool.core.models import EnsembleConfig, Geometry, PhysicalParams, WalkConfig
from drntool.infrastructure.exceptions import ConfigValidationError
from drntool.utils.units import hz_to_rad

logger = logging.getLogger(__name__)

APP_NAME = "drntool"
CONFIG_FILENAME = "config.cfg"
CONFIG_PATH = os.path.join(user_config_dir(APP_NAME), CONFIG_FILENAME)
ENV_PREFIX = "DRNTOOL_"

DEFAULTS = {key: entry.default for key, entry in SCHEMA.items()}

# Keys that do not change the physics and stay out of the config hash.
_UNHASHED_KEYS = ("output_dir",)


class Config:
    """
    Flat key-value configuration.

    Values are layered defaults < preset < file < environment; anything passed to
    ``resolved`` sits on top. File and preset values stay as raw strings until
    ``validate`` or ``resolved`` parses them against the schema.
    """

    def __init__(self, path: Optional[str] = CONFIG_PATH, preset: Optional[str] = None):
        self.path = path
        self.preset = preset
        logger.debug(f"Config init: path={self.path}, preset={self.preset}")
        self.data = self.load()

    def load(self) -> dict[str, Any]:
        data: dict[str, Any] = DEFAULTS.copy()
        if self.preset:
            data.update(load_preset(self.preset))
        if self.path and os.path.exists(self.path):
            logger.debug(f"Loading config from {self.path}")
            with open(self.path, encoding="utf-8") as f:
                file_values = parse_config_text(f.read(), source=self.path)
            logger.debug(f"Loaded config data: {file_values}")
            data.update(file_values)
        else:
            logger.debug("Config file not found, using defaults.")
        return data

    def save(self):
        logger.debug(f"Saving config to {self.path}")
        directory = os.path.dirname(self.path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.path, "w", encoding="utf-8") as f:
            for key in sorted(self.data):
                f.write(f"{key} = {render_value(self.data[key])}\n")

    def get(self, key: str, default: Any = None) -> Any:
        env_key = f"{ENV_PREFIX}{key.upper()}"
        if env_key in os.environ:
            val = os.environ[env_key]
            logger.debug(f"Overriding config key '{key}' with env value: {val}")
            return val
        return self.data.get(key, default)

    def validate(self) -> dict[str, Any]:
        """
        Parse every value against the schema.

        Returns:
            The parsed values, keyed like the schema.

        Raises:
            ConfigValidationError: for unknown keys, malformed or out-of-range values
        """
        unknown = sorted(key for key in self.data if key not in SCHEMA)
        if unknown:
            logger.error(f"Unknown config keys: {unknown}")
            raise ConfigValidationError(f"Unknown config keys: {', '.join(unknown)}.")
        parsed = {}
        for key in SCHEMA:
            try:
                parsed[key] = parse_value(key, self.get(key))
            except ValueError as e:
                raise ConfigValidationError(f"Invalid value for '{key}': {e}") from e
        return parsed

    def resolved(self, overrides: Optional[dict[str, Any]] = None) -> dict[str, Any]:
        """Parsed values with non-None overrides applied on top."""
        parsed = self.validate()
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key not in SCHEMA:
                raise ConfigValidationError(f"Unknown override '{key}'.")
            try:
                parsed[key] = parse_value(key, value)
            except ValueError as e:
                raise ConfigValidationError(f"Invalid value for '{key}': {e}") from e
        return parsed


@dataclass(frozen=True)
class GridSpec:
    """Detuning grid request; max_detuning in rad/s, None for the default span."""

    n_points: int
    max_detuning: Optional[float] = None

    def half_span(self, params: PhysicalParams, geom: Geometry) -> float:
        if self.max_detuning is not None:
            return self.max_detuning
        return DEFAULT_GRID_SPAN * lowest_mode_rate(geom, params)

    def build(self, params: PhysicalParams, geom: Geometry) -> np.ndarray:
        return detuning_grid(self.half_span(params, geom), self.n_points)


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI run needs, already parsed and checked."""

    params: PhysicalParams
    geometry: Geometry
    ensemble: EnsembleConfig
    walk: WalkConfig
    grid: GridSpec
    seed: Optional[int]
    output_dir: str
    preset: Optional[str]
    sequence_source: str
    gamma_dark_values: tuple[float, ...]
    distribution_bins: int
    values: tuple[tuple[str, str], ...]


def build_run_config(
    config: Config, overrides: Optional[dict[str, Any]] = None, require_seed: bool = True
) -> RunConfig:
    """
    Turn a layered Config plus CLI overrides into domain objects.

    Raises:
        ConfigValidationError: for invalid values, an even grid size, or a missing seed
            when require_seed is set
    """
    v = config.resolved(overrides)
    if require_seed and v["seed"] is None:
        raise ConfigValidationError("A seed is required for Monte Carlo runs; pass --seed or set 'seed'.")
    if v["grid_points"] % 2 == 0:
        raise ConfigValidationError(f"grid_points must be odd (got {v['grid_points']}).")

    max_depth = v["max_depth"] if v["max_depth"] is not None else max(v["max_returns"], 1)
    max_detuning = hz_to_rad(v["max_detuning_hz"]) if v["max_detuning_hz"] is not None else None
    try:
        params = PhysicalParams(
            n=v["density"],
            wavelength=v["wavelength"],
            length=v["cell_length"],
            gamma=v["gamma"],
            eta=v["eta"],
            gamma0=v["gamma0"],
            omega_d_sq=v["omega_d_sq"],
            t0=v["background"],
        )
        geometry = Geometry(
            beam_radius=v["beam_radius"], cell_radius=v["cell_radius"], diffusion_coefficient=v["diffusion"]
        )
        ensemble = EnsembleConfig(
            max_returns=v["max_returns"],
            t_in_quadrature_nodes=v["t_in_nodes"],
            t_out_quadrature_nodes=v["t_out_nodes"],
            dark_dephasing_rate=v["gamma_dark"],
            coherence_horizon=v["coherence_horizon"],
        )
        walk = WalkConfig(
            n_walkers=v["walkers"],
            seed=v["seed"],
            time_step=v["time_step"],
            horizon=v["horizon"],
            max_depth=max(max_depth, v["max_returns"]),
            min_dark_time=v["min_dark_time"],
            block_size=v["block_size"],
        )
    except ValueError as e:
        raise ConfigValidationError(str(e)) from e

    values = tuple((key, render_value(v[key])) for key in sorted(v))
    run = RunConfig(
        params=params,
        geometry=geometry,
        ensemble=ensemble,
        walk=walk,
        grid=GridSpec(n_points=v["grid_points"], max_detuning=max_detuning),
        seed=v["seed"],
        output_dir=v["output_dir"],
        preset=config.preset,
        sequence_source=v["sequence_source"],
        gamma_dark_values=tuple(v["gamma_dark_values"]),
        distribution_bins=v["distribution_bins"],
        values=values,
    )
    logger.debug(f"Run config built: preset={run.preset}, seed={run.seed}, hash={config_hash(run)}")
    return run


def config_hash(run: RunConfig) -> str:
    """First 16 hex digits of the SHA-256 of the sorted ``key=value`` rendering."""
    lines = [f"{key}={value}" for key, value in run.values if key not in _UNHASHED_KEYS]
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()[:16]
