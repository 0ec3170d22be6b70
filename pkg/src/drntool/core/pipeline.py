import contextlib
import json
import logging
from dataclasses import dataclass, replace
from typing import Iterator, Optional

import numpy as np

from drntool.core.analysis import fit_lorentzian, fwhm_numeric, peak_metrics, suppression_report
from drntool.core.diffusion import exit_time_distribution, lowest_mode_fwhm, mean_exit_time, tau_d
from drntool.core.ensemble import (
    class_lineshapes,
    ensemble_lineshape,
    enumerate_sequences,
    gradient_comparison,
    sequences_from_walks,
)
from drntool.core.lineshape import validity_report
from drntool.core.models import (
    EnsembleConfig,
    Geometry,
    Lineshape,
    LorentzianFit,
    PeakMetrics,
    PhysicalParams,
    SequenceSet,
    SuppressionEntry,
    TimeDistribution,
    ValidityReport,
    WalkConfig,
    WalkEnsembleStats,
)
from drntool.core.walks import (
    DEFAULT_HORIZON_TAU,
    RandomWalkSimulator,
    exit_time_histogram,
    ks_statistic,
    return_time_distribution,
)
from drntool.infrastructure.exceptions import InsufficientDataError, NumericalError

logger = logging.getLogger(__name__)

SEQUENCE_SOURCES = ("joint", "product")
# Walkers are tracked for this many dark coherence lifetimes 1/Γ0.
COHERENCE_LIFETIMES = 8.0


def walk_horizon(params: PhysicalParams, geom: Geometry) -> float:
    """Walker horizon long enough for dark periods to decay: max(200·τ_D, 8/Γ0)."""
    horizon = DEFAULT_HORIZON_TAU * tau_d(geom)
    if params.gamma0 > 0:
        horizon = max(horizon, COHERENCE_LIFETIMES / params.gamma0)
    return horizon


@dataclass(frozen=True)
class LineshapeAnalysis:
    """Everything the reports need about one ensemble lineshape."""

    fit: LorentzianFit
    fwhm: float
    metrics: PeakMetrics
    lowest_mode_fwhm_hz: float
    validity: ValidityReport
    class_masses: dict[int, float]
    return_probability: float


@dataclass(frozen=True)
class DistributionSummary:
    """Eigenmode and Monte Carlo time distributions for one geometry."""

    tau_d: float
    t_in_eigenmode: TimeDistribution
    t_in_montecarlo: TimeDistribution
    t_out_montecarlo: TimeDistribution
    ks_statistic: float
    mean_exit_eigenmode: float
    mean_exit_montecarlo: float
    return_probability: float


class LineshapePipeline:
    """
    Runs walks -> sequences -> lineshape -> analysis for one configuration.

    Intermediate results are computed once and reused, so every output of one
    pipeline shares the same Monte Carlo pass.
    """

    def __init__(
        self,
        params: PhysicalParams,
        geom: Geometry,
        ensemble: EnsembleConfig,
        walk: WalkConfig,
        grid: np.ndarray,
        sequence_source: str = "joint",
        distribution_bins: int = 400,
    ):
        """
        Initialize the pipeline with configuration.
        Raises ValueError for invalid arguments.
        """
        if sequence_source not in SEQUENCE_SOURCES:
            raise ValueError(f"sequence_source must be one of {SEQUENCE_SOURCES} (got {sequence_source!r}).")
        if walk.seed is None:
            raise ValueError("A seed is required for Monte Carlo walks.")
        if walk.max_depth < ensemble.max_returns:
            walk = replace(walk, max_depth=ensemble.max_returns)
        if walk.horizon is None:
            walk = replace(walk, horizon=walk_horizon(params, geom))
        self.params = params
        self.geom = geom
        self.ensemble = ensemble
        self.walk = walk
        self.grid = np.asarray(grid, dtype=float)
        self.sequence_source = sequence_source
        self.distribution_bins = distribution_bins
        self._stats: Optional[WalkEnsembleStats] = None
        self._sequences: Optional[SequenceSet] = None
        self.logger = logging.getLogger(__name__)
        self.logger.debug(
            f"LineshapePipeline initialized: source={sequence_source}, walkers={walk.n_walkers}, "
            f"grid_points={len(self.grid)}, max_returns={ensemble.max_returns}"
        )

    @contextlib.contextmanager
    def _stage(self, name: str) -> Iterator[None]:
        self.logger.debug(json.dumps({"component": "pipeline", "event": "stage_start", "stage": name}))
        try:
            yield
        except (NumericalError, InsufficientDataError) as e:
            if e.stage is None:
                e.stage = name
            raise
        except FloatingPointError as e:
            raise NumericalError(str(e), stage=name) from e
        self.logger.debug(json.dumps({"component": "pipeline", "event": "stage_done", "stage": name}))

    def walks(self) -> WalkEnsembleStats:
        if self._stats is None:
            with self._stage("walks"):
                self._stats = RandomWalkSimulator(self.geom, self.walk).run()
        return self._stats

    def sequences(self) -> SequenceSet:
        if self._sequences is None:
            stats = self.walks()
            with self._stage("sequences"):
                if self.sequence_source == "joint":
                    self._sequences = sequences_from_walks(stats, self.ensemble)
                else:
                    t_in = exit_time_distribution(self.geom, self.distribution_bins, stats.horizon)
                    t_out = return_time_distribution(stats, self.distribution_bins)
                    self._sequences = enumerate_sequences(t_in, t_out, self.ensemble)
        return self._sequences

    def lineshape(self) -> Lineshape:
        sequences = self.sequences()
        with self._stage("lineshape"):
            return ensemble_lineshape(self.params, sequences, self.ensemble, self.grid)

    def class_lineshapes(self) -> dict[int, Lineshape]:
        sequences = self.sequences()
        with self._stage("lineshape"):
            return class_lineshapes(self.params, sequences, self.ensemble, self.grid)

    def analyze(self, shape: Lineshape) -> LineshapeAnalysis:
        with self._stage("analysis"):
            fit = fit_lorentzian(shape)
            metrics = peak_metrics(shape, self.geom, self.params)
            width = fwhm_numeric(shape)
        return LineshapeAnalysis(
            fit=fit,
            fwhm=width,
            metrics=metrics,
            lowest_mode_fwhm_hz=lowest_mode_fwhm(self.geom, self.params),
            validity=validity_report(self.params, float(np.max(np.abs(self.grid)))),
            class_masses=self.sequences().class_masses(),
            return_probability=self.walks().return_probability,
        )

    def gradient(self, dark_rates: list[float]) -> tuple[list[Lineshape], list[SuppressionEntry]]:
        """Lineshapes for each Γ_dark from the shared sequences, plus the suppression comparison."""
        sequences = self.sequences()
        with self._stage("gradient"):
            shapes = gradient_comparison(
                self.params, self.geom, self.ensemble, self.grid, dark_rates, sequence_set=sequences
            )
        with self._stage("analysis"):
            entries = suppression_report(shapes, dark_rates, self.geom, self.params)
        return shapes, entries

    def distributions(self) -> DistributionSummary:
        stats = self.walks()
        with self._stage("distributions"):
            eigen = exit_time_distribution(self.geom, self.distribution_bins, stats.horizon)
            mc_in = exit_time_histogram(stats, self.distribution_bins)
            mc_out = return_time_distribution(stats, self.distribution_bins)
            ks = ks_statistic(stats, self.geom)
        return DistributionSummary(
            tau_d=tau_d(self.geom),
            t_in_eigenmode=eigen,
            t_in_montecarlo=mc_in,
            t_out_montecarlo=mc_out,
            ks_statistic=ks,
            mean_exit_eigenmode=mean_exit_time(self.geom),
            mean_exit_montecarlo=stats.mean_exit_time,
            return_probability=stats.return_probability,
        )
