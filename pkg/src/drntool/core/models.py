"""Domain models for drntool - core data structures.

Units: rates in rad/s, times in s, lengths in cm, densities in cm^-3.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from drntool.infrastructure.exceptions import GridError

NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PhysicalParams:
    """Atomic and optical parameters entering the transmission formula.

    Attributes:
        n: Atomic number density [cm^-3]
        wavelength: Optical wavelength λ [cm]
        length: Cell length L [cm]
        gamma: Excited-state relaxation rate γ [rad/s]
        eta: Excited-state radiative decay rate η [rad/s]
        gamma0: Intrinsic ground-state decoherence rate Γ0 [rad/s]
        omega_d_sq: Squared Rabi frequency of the strong field |Ω_d|^2 [rad^2/s^2]
        t0: Background transmission T0, 0 < t0 <= 1
    """

    n: float
    wavelength: float
    length: float
    gamma: float
    eta: float
    gamma0: float
    omega_d_sq: float
    t0: float

    def __post_init__(self):
        for name in ("n", "wavelength", "length", "gamma", "eta", "gamma0"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number (got {value}).")
        if not math.isfinite(self.omega_d_sq) or self.omega_d_sq < 0:
            raise ValueError(f"omega_d_sq must be non-negative (got {self.omega_d_sq}).")
        if not 0 < self.t0 <= 1:
            raise ValueError(f"t0 must lie in (0, 1] (got {self.t0}).")


@dataclass(frozen=True)
class Geometry:
    """Step-profile beam of radius a centred in a cylindrical cell of radius R.

    Attributes:
        beam_radius: a [cm]
        cell_radius: R [cm]
        diffusion_coefficient: D [cm^2/s]
    """

    beam_radius: float
    cell_radius: float
    diffusion_coefficient: float

    def __post_init__(self):
        if not self.beam_radius > 0:
            raise ValueError(f"beam_radius must be positive (got {self.beam_radius}).")
        if not self.cell_radius > self.beam_radius:
            raise ValueError(
                f"cell_radius ({self.cell_radius}) must exceed beam_radius ({self.beam_radius})."
            )
        if not self.diffusion_coefficient > 0:
            raise ValueError(f"diffusion_coefficient must be positive (got {self.diffusion_coefficient}).")


@dataclass(frozen=True)
class RamseySequence:
    """One atom history: equal in-beam passes separated by dark intervals.

    Attributes:
        t_in: Duration of every in-beam pass [s]
        t_outs: Ordered dark-interval durations [s]; empty means a single pass
        weight: Probability mass of this history
    """

    t_in: float
    t_outs: tuple[float, ...] = ()
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "t_outs", tuple(float(t) for t in self.t_outs))
        if not self.t_in >= 0:
            raise ValueError(f"t_in must be non-negative (got {self.t_in}).")
        if any(not t > 0 for t in self.t_outs):
            raise ValueError(f"every dark interval must be positive (got {self.t_outs}).")
        if not self.weight >= 0:
            raise ValueError(f"weight must be non-negative (got {self.weight}).")

    @property
    def returns(self) -> int:
        return len(self.t_outs)

    @property
    def duration(self) -> float:
        """Total elapsed time from the first entry to the end of the last pass."""
        return (self.returns + 1) * self.t_in + sum(self.t_outs)


@dataclass(frozen=True, eq=False)
class Lineshape:
    """Transmission sampled on a detuning grid symmetric about zero.

    Attributes:
        detunings: Increasing two-photon detunings Δ [rad/s], symmetric about 0
        values: Transmission T(Δ)
        background: Background transmission T0 used to form the signal
    """

    detunings: np.ndarray
    values: np.ndarray
    background: float = 0.0

    def __post_init__(self):
        detunings = np.asarray(self.detunings, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "detunings", detunings)
        object.__setattr__(self, "values", values)
        if detunings.ndim != 1 or values.shape != detunings.shape:
            raise GridError(f"values shape {values.shape} does not match detunings shape {detunings.shape}.")
        check_symmetric_grid(detunings)
        if not np.all(np.isfinite(values)):
            raise ValueError("Lineshape values must be finite.")

    @property
    def signal(self) -> np.ndarray:
        """EIT contrast |T(Δ) - T0|, the sign-free quantity used for widths and fits."""
        return np.abs(self.values - self.background)

    @property
    def center_index(self) -> int:
        return len(self.detunings) // 2

    @property
    def spacing(self) -> float:
        return float(np.min(np.diff(self.detunings)))

    def in_hz(self) -> np.ndarray:
        return self.detunings / (2.0 * math.pi)

    def with_values(self, values: np.ndarray, background: Optional[float] = None) -> "Lineshape":
        return Lineshape(
            detunings=self.detunings,
            values=values,
            background=self.background if background is None else background,
        )


def check_symmetric_grid(detunings: np.ndarray) -> None:
    """Raise GridError unless the grid is strictly increasing and mirror-symmetric about 0."""
    if len(detunings) < 3 or len(detunings) % 2 == 0:
        raise GridError(f"Detuning grid needs an odd number (>= 3) of points (got {len(detunings)}).")
    if not np.all(np.diff(detunings) > 0):
        raise GridError("Detuning grid must be strictly increasing.")
    scale = float(np.max(np.abs(detunings)))
    if not np.allclose(detunings, -detunings[::-1], rtol=0.0, atol=1e-9 * scale):
        raise GridError("Detuning grid must be symmetric about zero.")


@dataclass(frozen=True, eq=False)
class TimeDistribution:
    """Probability mass over time bins plus the mass that never registers an event.

    Attributes:
        bin_edges: Strictly increasing bin edges [s]
        mass: Probability per bin
        escape_mass: Probability of no qualifying event within the horizon
        horizon: Maximum tracked time [s]
    """

    bin_edges: np.ndarray
    mass: np.ndarray
    escape_mass: float
    horizon: float

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        mass = np.asarray(self.mass, dtype=float)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "mass", mass)
        if edges.ndim != 1 or len(edges) != len(mass) + 1:
            raise ValueError("bin_edges must have exactly one more entry than mass.")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("bin_edges must be strictly increasing.")
        if np.any(mass < 0) or self.escape_mass < 0:
            raise ValueError("Probability masses must be non-negative.")
        total = float(np.sum(mass)) + self.escape_mass
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"Distribution is not normalized (total mass {total!r}).")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def tracked_mass(self) -> float:
        return float(np.sum(self.mass))

    def mean(self) -> float:
        """Mean over the tracked mass (bin midpoints), conditional on an event within the horizon."""
        return float(np.sum(self.centers * self.mass) / self.tracked_mass)

    def median(self) -> float:
        """Median over the tracked mass, linearly interpolated inside the bin that crosses one half."""
        cumulative = np.cumsum(self.mass) / self.tracked_mass
        index = int(np.searchsorted(cumulative, 0.5))
        before = cumulative[index - 1] if index > 0 else 0.0
        fraction = (0.5 - before) / (cumulative[index] - before)
        return float(self.bin_edges[index] + fraction * (self.bin_edges[index + 1] - self.bin_edges[index]))

    def probability_beyond(self, t: float) -> float:
        """P(time > t), counting the escape mass as beyond every tracked time."""
        upper = self.bin_edges[1:]
        lower = self.bin_edges[:-1]
        full = float(np.sum(self.mass[lower >= t]))
        partial_bins = (lower < t) & (upper > t)
        partial = float(np.sum(self.mass[partial_bins] * (upper[partial_bins] - t) / (upper - lower)[partial_bins]))
        return full + partial + self.escape_mass


@dataclass(frozen=True)
class WalkConfig:
    """Monte Carlo walker settings. ``None`` values resolve from the geometry's τ_D.

    Attributes:
        n_walkers: Number of independent walkers
        seed: RNG seed (required)
        time_step: Base step dt [s]; default τ_D/400
        horizon: Maximum tracked time per walker [s]; default 200·τ_D
        max_depth: Number of returns recorded per walker
        min_dark_time: Shortest dark excursion recorded as a dark period [s]; default 20·τ_D
        start_radius: Start every walker at this radius instead of uniformly inside the beam [cm]
        block_size: Walkers per independent random stream
    """

    n_walkers: int = 20000
    seed: Optional[int] = None
    time_step: Optional[float] = None
    horizon: Optional[float] = None
    max_depth: int = 2
    min_dark_time: Optional[float] = None
    start_radius: Optional[float] = None
    block_size: int = 4096

    def __post_init__(self):
        if self.n_walkers < 1:
            raise ValueError(f"n_walkers must be at least 1 (got {self.n_walkers}).")
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be non-negative (got {self.max_depth}).")
        if self.block_size < 1:
            raise ValueError(f"block_size must be positive (got {self.block_size}).")


@dataclass(frozen=True, eq=False)
class WalkEnsembleStats:
    """Monte Carlo results for one geometry.

    Attributes:
        n_walkers: Number of walkers
        seed: RNG seed
        time_step: Base step used [s]
        horizon: Per-walker time horizon [s]
        first_exit_times: First crossing of the beam edge per walker, NaN if none [s]
        t_outs: Recorded dark intervals, shape (n_walkers, max_depth), NaN padded [s]
        n_excursions: Dark periods that ended: recorded returns, wall absorption, or the horizon
        n_returned: Dark periods that ended with a return into the beam
    """

    n_walkers: int
    seed: int
    time_step: float
    horizon: float
    first_exit_times: np.ndarray
    t_outs: np.ndarray
    n_excursions: int
    n_returned: int

    @property
    def max_depth(self) -> int:
        return int(self.t_outs.shape[1])

    @property
    def n_returns(self) -> np.ndarray:
        return np.sum(np.isfinite(self.t_outs), axis=1)

    @property
    def mean_exit_time(self) -> float:
        exits = self.first_exit_times[np.isfinite(self.first_exit_times)]
        return float(np.mean(exits)) if len(exits) else math.nan

    @property
    def return_probability(self) -> float:
        return self.n_returned / self.n_excursions if self.n_excursions else 0.0

    @property
    def return_samples(self) -> np.ndarray:
        """All recorded dark intervals, walker-major order."""
        return self.t_outs[np.isfinite(self.t_outs)]

    def joint_samples(self) -> list[tuple[float, tuple[float, ...]]]:
        """
        (t_in, dark intervals) per walker, the raw material for joint sequence sampling.

        t_in is the first exit; a walker still in the beam at the horizon gets the horizon.
        """
        in_beam = np.where(np.isfinite(self.first_exit_times), self.first_exit_times, self.horizon)
        samples = []
        for t_in, row in zip(in_beam, self.t_outs):
            samples.append((float(t_in), tuple(float(t) for t in row[np.isfinite(row)])))
        return samples


@dataclass(frozen=True)
class EnsembleConfig:
    """Controls how Ramsey sequences are enumerated and averaged.

    Attributes:
        max_returns: Largest number of dark periods per sequence (0-4)
        t_in_quadrature_nodes: Nodes for the in-beam time quadrature
        t_out_quadrature_nodes: Nodes for the dark time quadrature
        dark_dephasing_rate: Extra decay rate applied only in the dark Γ_dark [rad/s]
        coherence_horizon: Cap on total sequence duration [s]; None disables the cap
    """

    max_returns: int = 2
    t_in_quadrature_nodes: int = 64
    t_out_quadrature_nodes: int = 64
    dark_dephasing_rate: float = 0.0
    coherence_horizon: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.max_returns <= 4:
            raise ValueError(f"max_returns must lie in [0, 4] (got {self.max_returns}).")
        if self.t_in_quadrature_nodes < 2 or self.t_out_quadrature_nodes < 2:
            raise ValueError("Quadrature node counts must be at least 2.")
        if not self.dark_dephasing_rate >= 0 or not math.isfinite(self.dark_dephasing_rate):
            raise ValueError(f"dark_dephasing_rate must be finite and non-negative (got {self.dark_dephasing_rate}).")
        if self.coherence_horizon is not None and not self.coherence_horizon > 0:
            raise ValueError(f"coherence_horizon must be positive (got {self.coherence_horizon}).")

    def with_dark_rate(self, rate: float) -> "EnsembleConfig":
        return replace(self, dark_dephasing_rate=rate)


@dataclass(frozen=True)
class SequenceSet:
    """Weighted Ramsey sequences whose weights sum to one.

    Attributes:
        sequences: The weighted histories
        method: "joint" when built from Monte Carlo joint samples, "product" for the
            independent-product quadrature fallback
    """

    sequences: tuple[RamseySequence, ...]
    method: str = "product"

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        if not self.sequences:
            raise ValueError("SequenceSet needs at least one sequence.")
        total = math.fsum(s.weight for s in self.sequences)
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"Sequence weights must sum to 1 (got {total!r}).")

    def __len__(self) -> int:
        return len(self.sequences)

    def class_masses(self) -> dict[int, float]:
        """Total weight per number of returns."""
        masses: dict[int, float] = {}
        for seq in self.sequences:
            masses[seq.returns] = masses.get(seq.returns, 0.0) + seq.weight
        return dict(sorted(masses.items()))


@dataclass(frozen=True)
class ValidityReport:
    """Ratios behind the conditions γ ≫ Δ, γ ≫ Γ and γΓ ≫ Δ²."""

    gamma_over_detuning: float
    gamma_over_width: float
    gamma_width_over_detuning_sq: float
    detuning_ok: bool
    width_ok: bool
    product_ok: bool

    @property
    def valid(self) -> bool:
        return self.detuning_ok and self.width_ok and self.product_ok


@dataclass(frozen=True)
class LorentzianFit:
    """Result of a Lorentzian least-squares fit (widths in rad/s).

    Attributes:
        amplitude: Peak height above the offset
        center: Peak position [rad/s]
        fwhm: Full width at half maximum [rad/s]
        offset: Constant background
        rms_residual: Root-mean-square residual over the fitted points
        converged: Whether the optimizer reported convergence
        iterations: Function evaluations used
    """

    amplitude: float
    center: float
    fwhm: float
    offset: float
    rms_residual: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class PeakMetrics:
    """Sharp central component left after subtracting a Lorentzian fitted to the wings.

    Attributes:
        central_fwhm: FWHM of the narrow component [rad/s]
        peak_excess: Signal minus wing Lorentzian at Δ = 0
        narrowing_factor: Lowest-mode FWHM divided by central_fwhm
        lowest_mode_fwhm: Lowest-mode baseline FWHM [rad/s]
        amplitude: Signal at Δ = 0
        partition: Inner bound on |Δ| of the wing region [rad/s]
        wing_fit: The Lorentzian fitted to the wings
    """

    central_fwhm: float
    peak_excess: float
    narrowing_factor: float
    lowest_mode_fwhm: float
    amplitude: float
    partition: float
    wing_fit: LorentzianFit = field(repr=False)

    @property
    def relative_excess(self) -> float:
        return self.peak_excess / self.amplitude if self.amplitude else 0.0


@dataclass(frozen=True)
class SuppressionEntry:
    """Central-peak metrics for one dark dephasing rate, relative to the first rate compared.

    Attributes:
        dark_rate: Γ_dark [rad/s]
        peak_excess: Central peak excess at this rate
        central_fwhm: Central FWHM at this rate [rad/s]
        suppression_ratio: First entry's peak excess divided by this one's (inf when fully suppressed)
        wing_change: Largest change of the signal where |Δ| > 5Γ, relative to the first entry's wing maximum
    """

    dark_rate: float
    peak_excess: float
    central_fwhm: float
    suppression_ratio: float
    wing_change: float
