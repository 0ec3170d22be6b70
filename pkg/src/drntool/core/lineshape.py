"""Transmission lineshape of the weak EIT field for one or many Ramsey sequences.

For a sequence with in-beam time t and dark intervals t_1..t_m the transmission is

    T(Δ) = T0 + A(Δ)·r(Δ)·Σ_{k=0..m} [ -e^{-kΓt - Γ0'S_k} cos(Δ·E_k + φ)
                                         + e^{-(k+1)Γt - Γ0'S_k} cos(Δ·(E_k + t) + φ) ]

with A = κ|Ω_d|²η/(Δ² + Γ²), r = √(Δ² + Γ²), φ = atan2(Δ, Γ), S_k the sum of the first
k dark intervals, E_k = k·t + S_k and Γ0' = Γ0 + Γ_dark. The k = 0 pair equals the
single-pass expression -Γ + r·e^{-Γt}cos(Δt + φ) since r·cos φ = Γ; each later pair is one
diffusive return.
"""

import json
import logging
import math
import warnings
from typing import Iterable, Optional

import numpy as np

from drntool.core.models import Lineshape, PhysicalParams, RamseySequence, ValidityReport, check_symmetric_grid
from drntool.infrastructure.exceptions import GridError, NumericalError, ValidityWarning

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 2001
DEFAULT_GRID_SPAN = 20.0
DEFAULT_VALIDITY_THRESHOLDS = (100.0, 100.0, 10.0)

# Upper bound on terms x detunings evaluated per block.
_BLOCK_ELEMENTS = 2_000_000


def power_broadened_width(params: PhysicalParams) -> float:
    """Γ = Γ0 + |Ω_d|²/(2γ) in rad/s."""
    return params.gamma0 + params.omega_d_sq / (2.0 * params.gamma)


def kappa(params: PhysicalParams) -> float:
    """κ = (3π/16)·n·λ²·L/γ² in s²."""
    return 3.0 * math.pi / 16.0 * params.n * params.wavelength**2 * params.length / params.gamma**2


def signal_scale(params: PhysicalParams) -> float:
    """The product κ|Ω_d|²η that sets the absolute size of the transmission change."""
    return kappa(params) * params.omega_d_sq * params.eta


def detuning_grid(max_detuning: float, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """
    Build a grid over [-max_detuning, max_detuning] that is exactly mirror-symmetric.

    The positive half is generated once and negated, so ``grid == -grid[::-1]`` holds
    bit for bit and the middle point is exactly 0.

    Raises:
        GridError: if n_points is even or below 3
        ValueError: if max_detuning is not positive
    """
    if not max_detuning > 0 or not math.isfinite(max_detuning):
        raise ValueError(f"max_detuning must be positive and finite (got {max_detuning}).")
    if n_points < 3 or n_points % 2 == 0:
        raise GridError(f"Detuning grid needs an odd number (>= 3) of points (got {n_points}).")
    half = np.linspace(0.0, max_detuning, (n_points + 1) // 2)
    return np.concatenate((-half[:0:-1], half))


def default_grid(params: PhysicalParams, n_points: int = DEFAULT_GRID_POINTS, span: float = DEFAULT_GRID_SPAN):
    """Grid spanning ±span·Γ (default ±20Γ, 2001 points)."""
    return detuning_grid(span * power_broadened_width(params), n_points)


def validity_report(
    params: PhysicalParams,
    max_detuning: float,
    thresholds: tuple[float, float, float] = DEFAULT_VALIDITY_THRESHOLDS,
) -> ValidityReport:
    """
    Ratios γ/Δmax, γ/Γ and γΓ/Δmax² against their thresholds (default 100, 100, 10).

    Example:
        >>> report = validity_report(params, max_detuning=1e3)
        >>> report.valid
        True
    """
    width = power_broadened_width(params)
    max_detuning = abs(max_detuning)
    over_detuning = params.gamma / max_detuning if max_detuning > 0 else math.inf
    over_width = params.gamma / width
    product = params.gamma * width / max_detuning**2 if max_detuning > 0 else math.inf
    return ValidityReport(
        gamma_over_detuning=over_detuning,
        gamma_over_width=over_width,
        gamma_width_over_detuning_sq=product,
        detuning_ok=over_detuning > thresholds[0],
        width_ok=over_width > thresholds[1],
        product_ok=product > thresholds[2],
    )


def check_validity(params: PhysicalParams, grid: np.ndarray, thresholds=DEFAULT_VALIDITY_THRESHOLDS) -> ValidityReport:
    """Issue a ValidityWarning when the grid leaves the regime of the transmission formula."""
    report = validity_report(params, float(np.max(np.abs(grid))), thresholds)
    if not report.valid:
        message = (
            "Transmission formula outside its validity regime: "
            f"γ/Δmax={report.gamma_over_detuning:.3g}, γ/Γ={report.gamma_over_width:.3g}, "
            f"γΓ/Δmax²={report.gamma_width_over_detuning_sq:.3g}"
        )
        logger.info(message)
        warnings.warn(message, ValidityWarning, stacklevel=3)
    return report


def collect_terms(sequences: Iterable[RamseySequence], use_weights: bool = True) -> np.ndarray:
    """
    Flatten sequences into rows (weight, t_in, k, S_k), one row per exponential pair.

    Rows with the same (t_in, k, S_k) share a pair term and are merged by adding their
    weights, in first-seen order.
    """
    merged: dict[tuple[float, int, float], float] = {}
    for seq in sequences:
        weight = seq.weight if use_weights else 1.0
        if weight == 0.0:
            continue
        dark_sum = 0.0
        for k in range(seq.returns + 1):
            if k > 0:
                dark_sum += seq.t_outs[k - 1]
            key = (seq.t_in, k, dark_sum)
            merged[key] = merged.get(key, 0.0) + weight
    if not merged:
        return np.zeros((0, 4))
    return np.array([(w, t_in, k, s) for (t_in, k, s), w in merged.items()], dtype=float)


def _return_sum(terms: np.ndarray, detunings: np.ndarray, width: float, dark_decay: float) -> np.ndarray:
    """Weighted Σ of the pair terms over all rows, evaluated in fixed-size blocks."""
    phase = np.arctan2(detunings, width)
    total = np.zeros_like(detunings)
    block = max(1, _BLOCK_ELEMENTS // max(len(detunings), 1))
    for start in range(0, len(terms), block):
        weights, t_in, k, dark_sum = terms[start : start + block].T
        elapsed = k * t_in + dark_sum
        decay_start = np.exp(-k * width * t_in - dark_decay * dark_sum)
        decay_end = decay_start * np.exp(-width * t_in)
        pairs = -decay_start[:, None] * np.cos(np.outer(elapsed, detunings) + phase) + decay_end[:, None] * np.cos(
            np.outer(elapsed + t_in, detunings) + phase
        )
        total += np.sum(weights[:, None] * pairs, axis=0)
    return total


def weighted_lineshape(
    params: PhysicalParams,
    sequences: Iterable[RamseySequence],
    grid: np.ndarray,
    dark_rate: float = 0.0,
    use_weights: bool = True,
    validity_thresholds: Optional[tuple[float, float, float]] = DEFAULT_VALIDITY_THRESHOLDS,
) -> Lineshape:
    """
    Σ_s w_s·T_s(Δ) over the given sequences, evaluated on Δ ≥ 0 and mirrored.

    Args:
        params: Physical parameters
        sequences: Sequences to combine; weights are used as given
        grid: Symmetric detuning grid [rad/s]
        dark_rate: Γ_dark added to Γ0 in the dark-interval exponents only [rad/s]
        use_weights: False evaluates a single sequence with unit weight
        validity_thresholds: Thresholds for the validity warning, None to skip the check

    Returns:
        Lineshape with background T0.

    Raises:
        GridError: if the grid is not symmetric
        NumericalError: if the result is not finite
    """
    grid = np.asarray(grid, dtype=float)
    check_symmetric_grid(grid)
    if validity_thresholds is not None:
        check_validity(params, grid, validity_thresholds)
    sequences = list(sequences)
    terms = collect_terms(sequences, use_weights)
    total_weight = _total_weight(sequences, use_weights)

    center = len(grid) // 2
    half = grid[center:]
    width = power_broadened_width(params)
    dark_decay = params.gamma0 + dark_rate
    with np.errstate(over="ignore", invalid="ignore"):
        pair_sum = _return_sum(terms, half, width, dark_decay)
        radius = np.hypot(half, width)
        amplitude = signal_scale(params) / (half**2 + width**2)
        half_values = params.t0 * total_weight + amplitude * radius * pair_sum
    if not np.all(np.isfinite(half_values)):
        raise NumericalError("Lineshape evaluation produced non-finite values.", stage="lineshape")

    values = np.concatenate((half_values[:0:-1], half_values))
    logger.debug(
        json.dumps(
            {
                "component": "lineshape",
                "event": "evaluated",
                "sequences": len(sequences),
                "terms": int(len(terms)),
                "grid_points": int(len(grid)),
                "dark_rate": dark_rate,
            }
        )
    )
    return Lineshape(detunings=grid, values=values, background=params.t0 * total_weight)


def _total_weight(sequences: list[RamseySequence], use_weights: bool) -> float:
    if not use_weights:
        return 1.0
    return math.fsum(seq.weight for seq in sequences)


def sequence_lineshape(
    params: PhysicalParams, seq: RamseySequence, grid: np.ndarray, dark_rate: float = 0.0
) -> Lineshape:
    """
    Transmission T(Δ) for a single Ramsey sequence (its weight is ignored).

    Example:
        >>> grid = detuning_grid(2e4, 2001)
        >>> shape = sequence_lineshape(params, RamseySequence(t_in=2e-5, t_outs=(4e-4,)), grid)
        >>> bool(np.all(shape.values == shape.values[::-1]))
        True
    """
    return weighted_lineshape(params, [seq], grid, dark_rate=dark_rate, use_weights=False)


def single_pass_lineshape(params: PhysicalParams, t_in: float, grid: np.ndarray) -> Lineshape:
    """Transmission of an atom that crosses the beam once for t_in seconds."""
    return sequence_lineshape(params, RamseySequence(t_in=t_in), grid)


def literal_single_return(params: PhysicalParams, t_in: float, t_out: float, detunings: np.ndarray) -> np.ndarray:
    """Direct evaluation of the one-return transmission, term by term as written."""
    d = np.asarray(detunings, dtype=float)
    g = power_broadened_width(params)
    g0 = params.gamma0
    phi = np.arctan(d / g)
    prefactor = kappa(params) * params.omega_d_sq * params.eta / (d**2 + g**2)
    braces = (
        -g
        + np.sqrt(d**2 + g**2) * np.exp(-g * t_in) * np.cos(d * t_in + phi)
        - np.sqrt(d**2 + g**2) * np.exp(-g * t_in - g0 * t_out) * np.cos(d * (t_in + t_out) + phi)
        + np.sqrt(d**2 + g**2) * np.exp(-2 * g * t_in - g0 * t_out) * np.cos(d * (2 * t_in + t_out) + phi)
    )
    return params.t0 + prefactor * braces


def signal_contrast(shape: Lineshape) -> Lineshape:
    """EIT contrast |T - T0| as a lineshape with zero background."""
    return Lineshape(detunings=shape.detunings, values=shape.signal, background=0.0)
