"""Shared test fixtures for the drntool test suite."""

import math

import numpy as np
import pytest

from drntool.config.settings import Config
from drntool.core.diffusion import lowest_mode_rate
from drntool.core.lineshape import detuning_grid
from drntool.core.models import Geometry, PhysicalParams

TWO_PI = 2.0 * math.pi
GAMMA = TWO_PI * 30e6


def make_params(gamma0: float = 50.0, power_width: float = 1000.0, **overrides) -> PhysicalParams:
    """Physical parameters with Γ = gamma0 + power_width (both rad/s)."""
    values = {
        "n": 6e10,
        "wavelength": 795e-7,
        "length": 5.0,
        "gamma": GAMMA,
        "eta": TWO_PI * 5.75e6,
        "gamma0": gamma0,
        "omega_d_sq": 2.0 * GAMMA * power_width,
        "t0": 0.9,
    }
    values.update(overrides)
    return PhysicalParams(**values)


@pytest.fixture
def params():
    return make_params()


@pytest.fixture
def geom():
    """1.5 mm beam in a 2.5 cm cell, D = 50 cm²/s."""
    return Geometry(beam_radius=0.075, cell_radius=1.25, diffusion_coefficient=50.0)


@pytest.fixture
def wide_geom():
    """10 mm beam in a 2.5 cm cell, D = 50 cm²/s."""
    return Geometry(beam_radius=0.5, cell_radius=1.25, diffusion_coefficient=50.0)


@pytest.fixture
def grid(params, geom):
    """801-point grid over ±20 lowest-mode half widths."""
    return detuning_grid(20.0 * lowest_mode_rate(geom, params), 801)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def mock_config(tmp_path):
    """Config with a small, fast Monte Carlo setup writing into tmp_path."""
    config = Config(path=str(tmp_path / "missing.cfg"))
    config.data.update(
        {
            "seed": "11",
            "walkers": "300",
            "grid_points": "401",
            "max_detuning_hz": "60000",
            "distribution_bins": "50",
            "t_in_nodes": "8",
            "t_out_nodes": "8",
            "output_dir": str(tmp_path / "out"),
        }
    )
    return config
