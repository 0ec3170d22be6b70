"""
Beam-escape statistics from the radial diffusion eigenmodes of a disk.

An atom that starts uniformly inside a beam of radius a, with an absorbing beam edge,
survives in the beam with probability

    S(t) = Σ_k (4/μ_k²)·exp(-μ_k² D t / a²)

where μ_k are the zeros of J0. S(0) = 1 (completeness), the lowest mode decays with
τ_D = a²/(μ_1² D) and the mean exit time is a²/(8D).
"""

import json
import logging
import math
import warnings
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import jn_zeros, polygamma

from drntool.core.lineshape import power_broadened_width
from drntool.core.models import Geometry, PhysicalParams, TimeDistribution
from drntool.infrastructure.exceptions import ValidityWarning

logger = logging.getLogger(__name__)

SERIES_TOLERANCE = 1e-10
MAX_MODES = 2048
DEFAULT_BINS = 400
DEFAULT_HORIZON_TAU = 50.0

# Roots above this index come from the McMahon expansion.
_EXACT_ROOTS = 256
_BLOCK_ELEMENTS = 2_000_000


@lru_cache(maxsize=8)
def _root_table(n: int) -> np.ndarray:
    exact = jn_zeros(0, min(n, _EXACT_ROOTS))
    if n <= _EXACT_ROOTS:
        return exact
    beta = (np.arange(_EXACT_ROOTS + 1, n + 1) - 0.25) * math.pi
    asymptotic = beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta**3) + 3779.0 / (15360.0 * beta**5)
    return np.concatenate((exact, asymptotic))


def bessel_roots(n: int) -> np.ndarray:
    """
    First n positive zeros of the zeroth-order Bessel function J0.

    Example:
        >>> round(float(bessel_roots(1)[0]), 6)
        2.404826
    """
    if n < 1:
        raise ValueError(f"n must be at least 1 (got {n}).")
    return _root_table(n).copy()


BESSEL_FIRST_ZERO = float(bessel_roots(1)[0])


def tau_d(geom: Geometry) -> float:
    """Lowest-mode beam escape time τ_D = a²/(μ_1² D) [s]."""
    return geom.beam_radius**2 / (BESSEL_FIRST_ZERO**2 * geom.diffusion_coefficient)


def mean_exit_time(geom: Geometry, from_modes: bool = False) -> float:
    """
    Mean first-exit time from the disk for a uniform start, a²/(8D).

    With ``from_modes`` the value is summed from the eigenmode series instead,
    (4a²/D)·Σ 1/μ_k⁴, which serves as an independent check.
    """
    a2_over_d = geom.beam_radius**2 / geom.diffusion_coefficient
    if not from_modes:
        return a2_over_d / 8.0
    roots = bessel_roots(MAX_MODES)
    tail = polygamma(3, MAX_MODES + 0.75) / (6.0 * math.pi**4)
    return 4.0 * a2_over_d * (math.fsum(roots[::-1] ** -4) + float(tail))


def _modes_needed(s_min: float) -> int:
    """Smallest mode count whose next term at reduced time s_min drops below the tolerance."""
    roots = _root_table(MAX_MODES)
    terms = 4.0 / roots**2 * np.exp(-(roots**2) * s_min)
    below = np.nonzero(terms < SERIES_TOLERANCE)[0]
    return int(below[0]) if len(below) else MAX_MODES


def _reduced_survival(s: np.ndarray) -> np.ndarray:
    """S as a function of reduced time s = D t / a²."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    positive = s[s > 0]
    n_modes = _modes_needed(float(np.min(positive))) if len(positive) == len(s) else MAX_MODES
    roots = _root_table(MAX_MODES)[: max(n_modes, 1)]
    weights = 4.0 / roots**2
    rows = max(1, _BLOCK_ELEMENTS // len(roots))
    survival = np.concatenate(
        [np.sum(weights * np.exp(-np.outer(s[i : i + rows], roots**2)), axis=1) for i in range(0, len(s), rows)]
    )
    if n_modes >= MAX_MODES:
        # remainder Σ_{j>K} 4/μ_j² ≈ (4/π²)·ψ1(K + 3/4), decaying like the next mode
        beta_next = (MAX_MODES + 0.75) * math.pi
        survival += 4.0 / math.pi**2 * float(polygamma(1, MAX_MODES + 0.75)) * np.exp(-(beta_next**2) * s)
    return survival


def survival_probability(geom: Geometry, t) -> np.ndarray:
    """
    Probability that an atom started uniformly in the beam has not yet left it at time t.

    Args:
        geom: Beam geometry
        t: Time or array of times [s], t >= 0

    Returns:
        Array of S(t) values with the shape of np.atleast_1d(t).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("Times must be non-negative.")
    return _reduced_survival(t * geom.diffusion_coefficient / geom.beam_radius**2)


def mode_weight_sum() -> float:
    """Σ 4/μ_k², which must equal one."""
    return float(_reduced_survival(np.zeros(1))[0])


def exit_time_cdf(geom: Geometry, t) -> np.ndarray:
    """P(first exit <= t) = 1 - S(t)."""
    return 1.0 - survival_probability(geom, t)


def exit_time_density(geom: Geometry, t) -> np.ndarray:
    """-dS/dt = (4D/a²)·Σ exp(-μ_k² D t/a²) for t > 0 [1/s]."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("The exit-time density diverges at t = 0; times must be positive.")
    s = t * geom.diffusion_coefficient / geom.beam_radius**2
    roots = _root_table(MAX_MODES)[: max(_modes_needed(float(np.min(s))), 1)]
    rows = max(1, _BLOCK_ELEMENTS // len(roots))
    total = np.concatenate(
        [np.sum(np.exp(-np.outer(s[i : i + rows], roots**2)), axis=1) for i in range(0, len(s), rows)]
    )
    return 4.0 * geom.diffusion_coefficient / geom.beam_radius**2 * total


def exit_time_distribution(geom: Geometry, n_bins: int = DEFAULT_BINS, horizon: Optional[float] = None):
    """
    Distribution of the first-exit time from the beam for a uniform start.

    Bin masses are S(lower) - S(upper); whatever survives past the horizon is the
    escape mass.

    Args:
        geom: Beam geometry
        n_bins: Number of equal-width bins
        horizon: Last bin edge [s]; defaults to 50·τ_D

    Returns:
        TimeDistribution over [0, horizon].

    Raises:
        ValueError: if horizon or n_bins is not positive
    """
    horizon = DEFAULT_HORIZON_TAU * tau_d(geom) if horizon is None else horizon
    if not horizon > 0:
        raise ValueError(f"horizon must be positive (got {horizon}).")
    if n_bins < 1:
        raise ValueError(f"n_bins must be at least 1 (got {n_bins}).")
    edges = np.linspace(0.0, horizon, n_bins + 1)
    survival = survival_probability(geom, edges)
    mass = np.clip(survival[:-1] - survival[1:], 0.0, None)
    escape = float(survival[-1])
    if escape > 0.5:
        message = f"Horizon {horizon:.3g} s is too short: {escape:.1%} of atoms are still in the beam."
        logger.info(message)
        warnings.warn(message, ValidityWarning, stacklevel=2)
    logger.debug(
        json.dumps({"component": "diffusion", "event": "exit_distribution", "bins": n_bins, "escape_mass": escape})
    )
    return TimeDistribution(bin_edges=edges, mass=mass, escape_mass=escape, horizon=horizon)


def lowest_mode_rate(geom: Geometry, params: PhysicalParams) -> float:
    """Half width Γ + 1/τ_D [rad/s] when beam escape is a pure decay at rate 1/τ_D."""
    return power_broadened_width(params) + 1.0 / tau_d(geom)


def lowest_mode_fwhm(geom: Geometry, params: PhysicalParams) -> float:
    """
    Lorentzian FWHM in Hz of the lowest-mode baseline, (Γ0 + 1/τ_D + |Ω_d|²/2γ)/π.

    Example:
        >>> geom = Geometry(beam_radius=0.5, cell_radius=1.25, diffusion_coefficient=50.0)
        >>> round(lowest_mode_fwhm(geom, params))  # Γ0 = 2π·10, no power broadening
        388
    """
    return lowest_mode_rate(geom, params) / math.pi
