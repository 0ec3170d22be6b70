"""
Lineshape analysis: Lorentzian fits, half-maximum widths, and central-peak metrics.

Everything here works on the signal |T - T0| so the sign convention of the
transmission change does not matter.
"""

import json
import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from drntool.core.diffusion import lowest_mode_rate
from drntool.core.lineshape import power_broadened_width
from drntool.core.models import Geometry, Lineshape, LorentzianFit, PeakMetrics, PhysicalParams, SuppressionEntry
from drntool.infrastructure.exceptions import GridError, InsufficientDataError, NumericalError

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 8
MAX_ITERATIONS = 200
PARAMETER_TOLERANCE = 1e-8
WING_FACTOR = 2.0
EXCESS_FLOOR = 0.01
WING_REGION_CAP = 0.5
WING_REGION_WIDTHS = 5.0


def lorentzian(detunings, amplitude: float, center: float, fwhm: float, offset: float = 0.0) -> np.ndarray:
    """offset + amplitude·(w/2)²/((Δ - center)² + (w/2)²)"""
    half = 0.5 * fwhm
    return offset + amplitude * half**2 / ((np.asarray(detunings) - center) ** 2 + half**2)


def _region_mask(detunings: np.ndarray, region: Optional[tuple[float, float]]) -> np.ndarray:
    if region is None:
        return np.ones(len(detunings), dtype=bool)
    inner, outer = region
    magnitude = np.abs(detunings)
    return (magnitude >= inner) & (magnitude <= outer)


def _half_max_crossings(detunings: np.ndarray, signal: np.ndarray, center: int) -> Optional[tuple[float, float]]:
    """Interpolated half-maximum points walking outward from ``center``, or None if either side never drops."""
    half = 0.5 * signal[center]
    below = signal <= half
    right = np.nonzero(below[center:])[0]
    left = np.nonzero(below[: center + 1][::-1])[0]
    if len(right) == 0 or len(left) == 0:
        return None
    j = center + int(right[0])
    i = center - int(left[0])

    def interpolate(inner: int, outer: int) -> float:
        span = signal[inner] - signal[outer]
        fraction = (signal[inner] - half) / span if span != 0 else 0.0
        return float(detunings[inner] + fraction * (detunings[outer] - detunings[inner]))

    return interpolate(i + 1, i), interpolate(j - 1, j)


def fwhm_numeric(shape: Lineshape) -> float:
    """
    Full width at half maximum of the signal, measured outward from Δ = 0.

    Crossings of half the Δ = 0 value are located by linear interpolation between
    grid points.

    Raises:
        InsufficientDataError: if the signal at Δ = 0 is not positive
        GridError: if the signal never falls to half maximum within the grid
    """
    signal = shape.signal
    center = shape.center_index
    if not signal[center] > 0:
        raise InsufficientDataError("Signal at zero detuning is not positive; no FWHM.")
    crossings = _half_max_crossings(shape.detunings, signal, center)
    if crossings is None:
        raise GridError("Signal does not fall to half maximum within the grid; widen the detuning grid.")
    return crossings[1] - crossings[0]


def _initial_guess(detunings: np.ndarray, signal: np.ndarray) -> tuple[float, float, float, float]:
    peak = int(np.argmax(signal))
    offset = float(np.min(signal))
    amplitude = float(signal[peak]) - offset
    crossings = _half_max_crossings(detunings, signal - offset, peak)
    if crossings is None:
        fwhm = 0.25 * float(detunings[-1] - detunings[0])
    else:
        fwhm = crossings[1] - crossings[0]
    return amplitude, float(detunings[peak]), fwhm, offset


def fit_lorentzian(
    shape: Lineshape,
    region: Optional[tuple[float, float]] = None,
    init: Optional[Sequence[float]] = None,
    vary_offset: bool = True,
    vary_center: bool = True,
    max_iterations: int = MAX_ITERATIONS,
) -> LorentzianFit:
    """
    Least-squares Lorentzian fit to the signal by Levenberg-Marquardt.

    Args:
        shape: Lineshape to fit
        region: (inner, outer) bounds on |Δ| selecting the fitted points; None fits all
        init: (amplitude, center, fwhm, offset) starting guess; default from peak height
            and half-maximum crossings
        vary_offset: Fit the offset; when False it stays at its initial value
        vary_center: Fit the center; when False it stays at its initial value
        max_iterations: Evaluation budget before giving up

    Returns:
        LorentzianFit. A fit that runs out of iterations comes back with converged=False.

    Raises:
        InsufficientDataError: if the region holds fewer than 8 points
        NumericalError: if the optimizer produces non-finite parameters

    Example:
        >>> fit = fit_lorentzian(shape)
        >>> fit.fwhm / (2 * math.pi)  # Hz
    """
    mask = _region_mask(shape.detunings, region)
    x = shape.detunings[mask]
    y = shape.signal[mask]
    if len(x) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"Fit region holds {len(x)} points; at least {MIN_FIT_POINTS} are needed.")

    if np.ptp(y) == 0:
        logger.debug(f"Flat data in fit region; returning zero amplitude at offset {y[0]}")
        return LorentzianFit(
            amplitude=0.0,
            center=0.0,
            fwhm=float(x[-1] - x[0]),
            offset=float(y[0]),
            rms_residual=0.0,
            converged=False,
            iterations=0,
        )

    guess = tuple(float(v) for v in init) if init is not None else _initial_guess(x, y)
    amplitude0, center0, fwhm0, offset0 = guess
    if not vary_offset and init is None:
        offset0 = 0.0
    if not vary_center and init is None:
        center0 = 0.0

    names = ["amplitude", "half_width"] + (["center"] if vary_center else []) + (["offset"] if vary_offset else [])
    start = [amplitude0, 0.5 * abs(fwhm0)] + ([center0] if vary_center else []) + ([offset0] if vary_offset else [])

    def unpack(p):
        values = dict(zip(names, p))
        return (
            values["amplitude"],
            values.get("center", center0),
            values["half_width"],
            values.get("offset", offset0),
        )

    def residuals(p):
        amplitude, center, half, offset = unpack(p)
        return offset + amplitude * half**2 / ((x - center) ** 2 + half**2) - y

    def jacobian(p):
        amplitude, center, half, _ = unpack(p)
        u = x - center
        denom = u**2 + half**2
        columns = {
            "amplitude": half**2 / denom,
            "half_width": 2.0 * amplitude * half * u**2 / denom**2,
            "center": 2.0 * amplitude * half**2 * u / denom**2,
            "offset": np.ones_like(x),
        }
        return np.column_stack([columns[name] for name in names])

    result = least_squares(
        residuals,
        start,
        jac=jacobian,
        method="lm",
        x_scale="jac",
        xtol=PARAMETER_TOLERANCE,
        ftol=1e-12,
        max_nfev=max_iterations,
    )
    amplitude, center, half, offset = unpack(result.x)
    if not all(math.isfinite(v) for v in (amplitude, center, half, offset)):
        raise NumericalError("Lorentzian fit produced non-finite parameters.", stage="fit")
    rms = float(np.sqrt(np.mean(result.fun**2)))
    fit = LorentzianFit(
        amplitude=float(amplitude),
        center=float(center),
        fwhm=float(2.0 * abs(half)),
        offset=float(offset),
        rms_residual=rms,
        converged=bool(result.success),
        iterations=int(result.nfev),
    )
    logger.debug(
        json.dumps(
            {
                "component": "analysis",
                "event": "lorentzian_fit",
                "points": int(len(x)),
                "fwhm": fit.fwhm,
                "rms": rms,
                "converged": fit.converged,
                "iterations": fit.iterations,
            }
        )
    )
    return fit


def _remainder(shape: Lineshape, wing: LorentzianFit) -> Lineshape:
    model = lorentzian(shape.detunings, wing.amplitude, wing.center, wing.fwhm, wing.offset)
    return Lineshape(detunings=shape.detunings, values=shape.signal - model, background=0.0)


def _wing_fit(shape: Lineshape, inner: float, width_guess: float) -> LorentzianFit:
    outer = float(np.max(np.abs(shape.detunings)))
    init = (float(shape.signal[shape.center_index]), 0.0, width_guess, 0.0)
    return fit_lorentzian(shape, region=(inner, outer), init=init, vary_offset=False, vary_center=False)


def _cap_partition(shape: Lineshape, inner: float) -> float:
    # keep the outer half of the grid available to the wing fit
    return min(inner, WING_REGION_CAP * float(np.max(np.abs(shape.detunings))))


def _preliminary_fit(shape: Lineshape) -> LorentzianFit:
    span = float(shape.detunings[-1] - shape.detunings[0])
    fits = [_wing_fit(shape, 0.0, guess) for guess in (fwhm_numeric(shape), 0.25 * span)]
    return min(fits, key=lambda fit: fit.rms_residual)


def wing_partition(shape: Lineshape, preliminary: Optional[LorentzianFit] = None) -> float:
    """
    Inner bound on |Δ| of the wing region.

    A preliminary Lorentzian is fitted to the whole signal; it follows the pedestal, so
    what it leaves at the center is the narrow component. The partition is twice that
    component's FWHM. Without a clear central excess it falls back to twice the FWHM
    of the whole signal.
    """
    amplitude = float(shape.signal[shape.center_index])
    total_fwhm = fwhm_numeric(shape)
    if preliminary is None:
        preliminary = _preliminary_fit(shape)
    remainder = _remainder(shape, preliminary)
    if remainder.values[shape.center_index] > EXCESS_FLOOR * amplitude:
        try:
            return _cap_partition(shape, WING_FACTOR * fwhm_numeric(remainder))
        except GridError as e:
            logger.debug(f"Preliminary remainder has no half maximum: {e}")
    return _cap_partition(shape, WING_FACTOR * total_fwhm)


def peak_metrics(
    shape: Lineshape, geom: Geometry, params: PhysicalParams, partition: Optional[float] = None
) -> PeakMetrics:
    """
    Split the signal into a Lorentzian pedestal and a narrow central component.

    A Lorentzian with zero offset and center is fitted to the wings, |Δ| beyond the
    partition from ``wing_partition`` unless one is given. The central FWHM is measured
    on what is left after subtracting that fit; when the remainder at Δ = 0 is below 1%
    of the signal, the central FWHM is the wing fit's FWHM.

    Raises:
        InsufficientDataError, GridError, NumericalError: propagated from the fits
    """
    signal = shape.signal
    amplitude = float(signal[shape.center_index])
    preliminary = _preliminary_fit(shape)
    inner = wing_partition(shape, preliminary) if partition is None else _cap_partition(shape, partition)
    wing = _wing_fit(shape, inner, preliminary.fwhm)

    remainder = _remainder(shape, wing)
    peak_excess = float(remainder.values[shape.center_index])
    central_fwhm = wing.fwhm
    if peak_excess > EXCESS_FLOOR * amplitude:
        try:
            central_fwhm = fwhm_numeric(remainder)
        except (InsufficientDataError, GridError) as e:
            logger.debug(f"Central component has no clean half maximum, using wing width: {e}")
    if not central_fwhm > 0:
        raise NumericalError("Central FWHM is not positive.", stage="analysis")

    lowest = 2.0 * lowest_mode_rate(geom, params)
    return PeakMetrics(
        central_fwhm=central_fwhm,
        peak_excess=peak_excess,
        narrowing_factor=lowest / central_fwhm,
        lowest_mode_fwhm=lowest,
        amplitude=amplitude,
        partition=inner,
        wing_fit=wing,
    )


def fringe_spacing(shape: Lineshape, window: Optional[tuple[float, float]] = None) -> float:
    """
    Fringe period in Δ from the zero crossings of an oscillating contribution.

    Intended for the return contribution of a sequence (its lineshape minus the
    single-pass lineshape). Only Δ > 0 inside ``window`` is searched; consecutive zero
    crossings are half a period apart.

    Raises:
        InsufficientDataError: if fewer than three crossings are found
    """
    d = shape.detunings
    values = shape.values - shape.background
    lower, upper = window if window is not None else (0.0, float(d[-1]))
    mask = (d > 0) & (d >= lower) & (d <= upper)
    d, values = d[mask], values[mask]
    flips = np.nonzero(np.signbit(values[:-1]) != np.signbit(values[1:]))[0]
    if len(flips) < 3:
        raise InsufficientDataError(f"Found {len(flips)} zero crossings; at least 3 are needed for a fringe spacing.")
    crossings = d[flips] - values[flips] * (d[flips + 1] - d[flips]) / (values[flips + 1] - values[flips])
    return float(2.0 * (crossings[-1] - crossings[0]) / (len(crossings) - 1))


def suppression_report(
    shapes: Sequence[Lineshape],
    dark_rates: Sequence[float],
    geom: Geometry,
    params: PhysicalParams,
) -> list[SuppressionEntry]:
    """
    Compare central-peak metrics across dark dephasing rates, relative to the first entry.

    Every entry uses the first entry's wing partition, so the pedestal fit stays put while
    the central component shrinks.

    The wing change is the largest signal change where |Δ| > 5Γ, divided by the first
    entry's largest signal in that region.
    """
    if len(shapes) != len(dark_rates) or not shapes:
        raise ValueError("Need one lineshape per dark dephasing rate.")
    wing_region = np.abs(shapes[0].detunings) > WING_REGION_WIDTHS * power_broadened_width(params)
    reference = shapes[0].signal
    wing_scale = float(np.max(reference[wing_region])) if np.any(wing_region) else 0.0

    reference_metrics = peak_metrics(shapes[0], geom, params)
    base_excess = reference_metrics.peak_excess
    entries = []
    for index, (shape, rate) in enumerate(zip(shapes, dark_rates)):
        if index == 0:
            metrics = reference_metrics
        else:
            metrics = peak_metrics(shape, geom, params, partition=reference_metrics.partition)
        ratio = base_excess / metrics.peak_excess if metrics.peak_excess > 0 else math.inf
        if wing_scale > 0:
            change = float(np.max(np.abs(shape.signal[wing_region] - reference[wing_region]))) / wing_scale
        else:
            change = 0.0
        entries.append(
            SuppressionEntry(
                dark_rate=float(rate),
                peak_excess=metrics.peak_excess,
                central_fwhm=metrics.central_fwhm,
                suppression_ratio=ratio,
                wing_change=change,
            )
        )
    return entries
