"""
Monte Carlo random walks in the transverse plane of the cell.

Walkers diffuse as 2D Brownian motion. The beam is the disk r < a, the cell wall at
r = R absorbs (the atom decoheres). Each walker records its first exit from the beam,
then the dark time of every excursion that ends with a return into the beam, up to a
fixed number of returns.
"""

import json
import logging
import math
from typing import Optional

import numpy as np
from scipy.special import erfc, erfcinv

from drntool.core.diffusion import exit_time_cdf, tau_d
from drntool.core.models import Geometry, TimeDistribution, WalkConfig, WalkEnsembleStats
from drntool.infrastructure.exceptions import InsufficientDataError

logger = logging.getLogger(__name__)

DEFAULT_STEPS_PER_TAU = 400.0
DEFAULT_HORIZON_TAU = 200.0
DEFAULT_MIN_DARK_TAU = 20.0
# Step length is at least this fraction of the distance to the nearest boundary.
STEP_FRACTION = 0.2
# √(2·D·dt) must stay below a/MIN_STEPS_PER_RADIUS.
MIN_STEPS_PER_RADIUS = 20.0


def crossing_times(distance: np.ndarray, sigma: np.ndarray, dt: np.ndarray, uniform: np.ndarray) -> np.ndarray:
    """
    Sample when a walker first reaches a flat boundary, given that it does so within one step.

    A walker at ``distance`` from the boundary reaches it by time t with probability
    erfc(distance/√(4·D·t)). The law is truncated to the step and inverted, so a
    walker starting on the boundary crosses at t = 0.

    Args:
        distance: Distance to the boundary at the start of the step [cm], >= 0
        sigma: Step length √(2·D·dt) [cm]
        dt: Step duration [s]
        uniform: Uniform variates in [0, 1)

    Returns:
        Offsets into the step [s], each in [0, dt].
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.maximum(distance, 0.0) / (math.sqrt(2.0) * sigma)
        reach = np.maximum(erfc(scaled), np.finfo(float).tiny)
        root = erfcinv(uniform * reach)
        offset = np.where(scaled > 0, dt * (scaled / root) ** 2, 0.0)
    return np.clip(offset, 0.0, dt)


class RandomWalkSimulator:
    """
    Simulates independent walkers block by block.

    Each block of walkers draws from its own stream seeded by (seed, block index), so
    the results depend only on the seed and the block size.

    Far from the boundaries the step grows with the distance to the nearest boundary.
    Near a boundary the step falls back to the base time step. Whether the path touched a
    boundary between two sampled positions is decided by a Brownian-bridge test, and the
    moment of contact is drawn from the first-passage law of a flat boundary.

    Dark excursions shorter than ``min_dark_time`` are not dark periods: the return that
    ends them is not recorded and the walker carries on as if it had stayed in the beam.
    """

    def __init__(self, geom: Geometry, config: WalkConfig):
        """
        Resolve defaults from τ_D and validate the walker settings.
        Raises ValueError for invalid arguments.
        """
        if config.seed is None:
            raise ValueError("A seed is required for Monte Carlo walks.")
        if config.seed < 0:
            raise ValueError(f"seed must be non-negative (got {config.seed}).")
        tau = tau_d(geom)
        self.geom = geom
        self.n_walkers = config.n_walkers
        self.seed = int(config.seed)
        self.max_depth = config.max_depth
        self.block_size = config.block_size
        self.time_step = tau / DEFAULT_STEPS_PER_TAU if config.time_step is None else config.time_step
        self.horizon = DEFAULT_HORIZON_TAU * tau if config.horizon is None else config.horizon
        self.start_radius = config.start_radius

        if not self.time_step > 0:
            raise ValueError(f"time_step must be positive (got {self.time_step}).")
        self.min_sigma = math.sqrt(2.0 * geom.diffusion_coefficient * self.time_step)
        if self.min_sigma >= geom.beam_radius / MIN_STEPS_PER_RADIUS:
            raise ValueError(
                f"time_step {self.time_step:.3g} s is too large: step length {self.min_sigma:.3g} cm "
                f"must stay below a/{MIN_STEPS_PER_RADIUS:g} = {geom.beam_radius / MIN_STEPS_PER_RADIUS:.3g} cm."
            )
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive (got {self.horizon}).")

        if self.start_radius is not None:
            if not geom.beam_radius < self.start_radius < geom.cell_radius:
                raise ValueError("start_radius must lie strictly between beam_radius and cell_radius.")
            if self.max_depth < 1:
                raise ValueError("Walkers started outside the beam need max_depth >= 1.")
            self.min_dark_time = 0.0
        else:
            self.min_dark_time = DEFAULT_MIN_DARK_TAU * tau if config.min_dark_time is None else config.min_dark_time
        if self.min_dark_time < 0:
            raise ValueError(f"min_dark_time must be non-negative (got {self.min_dark_time}).")
        logger.debug(f"RandomWalkSimulator initialized with config: {self.__dict__}")

    def run(self) -> WalkEnsembleStats:
        first_exit, t_outs = [], []
        excursions = returned = 0
        for block, start in enumerate(range(0, self.n_walkers, self.block_size)):
            size = min(self.block_size, self.n_walkers - start)
            result = self._run_block(block, size)
            first_exit.append(result["first_exit"])
            t_outs.append(result["t_outs"])
            excursions += result["excursions"]
            returned += result["returned"]
        stats = WalkEnsembleStats(
            n_walkers=self.n_walkers,
            seed=self.seed,
            time_step=self.time_step,
            horizon=self.horizon,
            first_exit_times=np.concatenate(first_exit),
            t_outs=np.concatenate(t_outs),
            n_excursions=excursions,
            n_returned=returned,
        )
        logger.info(
            f"Simulated {self.n_walkers} walkers: mean exit {stats.mean_exit_time:.4g} s, "
            f"return probability {stats.return_probability:.4f}"
        )
        return stats

    def _run_block(self, block: int, n: int) -> dict:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=self.seed, spawn_key=(block,)))
        a = self.geom.beam_radius
        cell = self.geom.cell_radius
        two_d = 2.0 * self.geom.diffusion_coefficient
        horizon = self.horizon

        first_exit = np.full(n, np.nan)
        t_outs = np.full((n, self.max_depth), np.nan)
        n_returns = np.zeros(n, dtype=int)
        clock = np.zeros(n)
        excursion_start = np.full(n, np.nan)
        excursions = returned = 0

        if self.start_radius is None:
            radius = a * np.sqrt(rng.random(n))
            angle = 2.0 * math.pi * rng.random(n)
            inside = np.ones(n, dtype=bool)
        else:
            radius = np.full(n, self.start_radius)
            angle = np.zeros(n)
            inside = np.zeros(n, dtype=bool)
            excursion_start[:] = 0.0
        x = radius * np.cos(angle)
        y = radius * np.sin(angle)
        active = np.ones(n, dtype=bool)

        steps = 0
        while np.any(active):
            steps += 1
            idx = np.nonzero(active)[0]
            r = np.hypot(x[idx], y[idx])
            ins = inside[idx]
            dist = np.where(ins, a - r, np.minimum(r - a, cell - r))
            sigma = np.maximum(self.min_sigma, STEP_FRACTION * dist)
            dt = sigma**2 / two_d
            remaining = horizon - clock[idx]
            last = dt >= remaining
            dt = np.where(last, remaining, dt)
            sigma = np.sqrt(two_d * dt)
            var = np.maximum(sigma**2, np.finfo(float).tiny)

            noise = rng.standard_normal((len(idx), 2))
            uniform = rng.random((len(idx), 4))
            nx = x[idx] + sigma * noise[:, 0]
            ny = y[idx] + sigma * noise[:, 1]
            nr = np.hypot(nx, ny)
            start = clock[idx]

            # signed distances to the beam edge and the wall, positive on the walker's side
            edge_from = np.abs(a - r)
            edge_to = np.where(ins, a - nr, nr - a)
            wall_from = cell - r
            wall_to = cell - nr
            with np.errstate(over="ignore"):
                edge = (edge_to <= 0) | (uniform[:, 0] < np.exp(-2.0 * edge_from * edge_to / var))
                wall = ~ins & ((wall_to <= 0) | (uniform[:, 1] < np.exp(-2.0 * wall_from * wall_to / var)))
            edge_time = start + crossing_times(edge_from, sigma, dt, uniform[:, 2])
            wall_time = start + crossing_times(wall_from, sigma, dt, uniform[:, 3])
            ends_inside = nr < a

            done = np.zeros(len(idx), dtype=bool)

            # leaving the beam
            leaving = ins & edge
            fresh = leaving & np.isnan(first_exit[idx])
            first_exit[idx[fresh]] = edge_time[fresh]
            if self.max_depth == 0:
                done |= leaving
            else:
                # a sub-step visit to the dark that ends inside is not an excursion
                dark = leaving & ~ends_inside
                excursion_start[idx[dark]] = edge_time[dark]
                inside[idx[dark]] = False

                # reaching the beam before the wall ends the dark period
                entering = ~ins & edge & (~wall | (edge_time <= wall_time))
                duration = edge_time - excursion_start[idx]
                recorded = entering & (duration >= self.min_dark_time)
                walkers = idx[recorded]
                if len(walkers):
                    excursions += len(walkers)
                    returned += len(walkers)
                    t_outs[walkers, n_returns[walkers]] = duration[recorded]
                    n_returns[walkers] += 1
                    done |= recorded & (n_returns[idx] >= self.max_depth)
                settled = entering & ends_inside & ~done
                inside[idx[settled]] = True
                # touched the beam and left again within the step: a new dark period
                again = entering & ~ends_inside & ~done
                excursion_start[idx[again]] = edge_time[again]

                absorbed = wall & ~(entering & ends_inside) & ~done
                excursions += int(np.sum(absorbed))
                done |= absorbed

            x[idx] = nx
            y[idx] = ny
            clock[idx] = np.where(last, horizon, start + dt)

            expired = last & ~done
            excursions += int(np.sum(expired & ~inside[idx]))
            done |= expired
            active[idx[done]] = False

        logger.debug(
            json.dumps(
                {
                    "component": "walks",
                    "event": "block_done",
                    "block": block,
                    "walkers": n,
                    "steps": steps,
                    "excursions": excursions,
                    "returned": returned,
                }
            )
        )
        return {"first_exit": first_exit, "t_outs": t_outs, "excursions": excursions, "returned": returned}


def simulate_walks(
    geom: Geometry,
    n_walkers: int,
    time_step: Optional[float] = None,
    horizon: Optional[float] = None,
    seed: Optional[int] = None,
    **options,
) -> WalkEnsembleStats:
    """
    Run Monte Carlo walkers for a geometry.

    Args:
        geom: Beam and cell geometry
        n_walkers: Number of walkers (>= 1)
        time_step: Base step [s]; default τ_D/400
        horizon: Time horizon per walker [s]; default 200·τ_D
        seed: RNG seed (required)
        **options: Remaining WalkConfig fields (max_depth, min_dark_time, start_radius, block_size)

    Returns:
        WalkEnsembleStats, identical for identical arguments.
    """
    config = WalkConfig(n_walkers=n_walkers, seed=seed, time_step=time_step, horizon=horizon, **options)
    return RandomWalkSimulator(geom, config).run()


def _histogram(samples: np.ndarray, total: int, n_bins: int, horizon: float) -> TimeDistribution:
    if total <= 0:
        raise InsufficientDataError("No samples to build a time distribution from.")
    if n_bins < 1 or not horizon > 0:
        raise ValueError("n_bins must be positive and horizon must be positive.")
    edges = np.linspace(0.0, horizon, n_bins + 1)
    kept = samples[np.isfinite(samples) & (samples < horizon)]
    counts, _ = np.histogram(kept, bins=edges)
    mass = counts / total
    escape = (total - int(np.sum(counts))) / total
    return TimeDistribution(bin_edges=edges, mass=mass, escape_mass=escape, horizon=horizon)


def return_time_distribution(
    stats: WalkEnsembleStats, n_bins: int = 400, horizon: Optional[float] = None
) -> TimeDistribution:
    """
    Distribution of dark time over dark excursions.

    Each excursion contributes one unit of probability: returns within the horizon fill
    the bins, wall absorption and anything longer than the horizon go to the escape mass.

    Raises:
        InsufficientDataError: if the walks produced no dark excursions
    """
    if stats.n_excursions == 0:
        raise InsufficientDataError("The walks produced no dark excursions; no return-time distribution.")
    horizon = stats.horizon if horizon is None else horizon
    return _histogram(stats.return_samples, stats.n_excursions, n_bins, horizon)


def exit_time_histogram(
    stats: WalkEnsembleStats, n_bins: int = 400, horizon: Optional[float] = None
) -> TimeDistribution:
    """Histogram of first exits, one unit of probability per walker; walkers still in the beam are the escape mass."""
    horizon = stats.horizon if horizon is None else horizon
    return _histogram(stats.first_exit_times, stats.n_walkers, n_bins, horizon)


def ks_statistic(stats: WalkEnsembleStats, geom: Geometry) -> float:
    """
    Kolmogorov-Smirnov distance between the walkers' first exits and the eigenmode CDF.

    Walkers that never left count toward n, so the empirical CDF stays below one; the
    comparison runs up to the horizon.
    """
    n = stats.n_walkers
    samples = np.sort(stats.first_exit_times[np.isfinite(stats.first_exit_times)])
    if len(samples) == 0:
        raise InsufficientDataError("No walker left the beam; KS statistic undefined.")
    model = exit_time_cdf(geom, samples)
    ranks = np.arange(1, len(samples) + 1)
    above = np.max(ranks / n - model)
    below = np.max(model - (ranks - 1) / n)
    censored = float(exit_time_cdf(geom, stats.horizon)[0]) - len(samples) / n
    return float(max(above, below, censored))
