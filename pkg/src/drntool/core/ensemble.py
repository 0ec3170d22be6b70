"""
Ensemble lineshapes: weighted averages over Ramsey sequences.

Sequences come either from the walkers' joint (t_in, t_out...) samples, which keep the
correlation between in-beam and dark times, or from an independent-product quadrature
over the two time distributions.
"""

import itertools
import json
import logging
import math
from typing import Iterable, Optional

import numpy as np

from drntool.core.lineshape import weighted_lineshape
from drntool.core.models import (
    EnsembleConfig,
    Geometry,
    Lineshape,
    PhysicalParams,
    RamseySequence,
    SequenceSet,
    TimeDistribution,
    WalkConfig,
    WalkEnsembleStats,
)
from drntool.core.walks import simulate_walks
from drntool.infrastructure.exceptions import InsufficientDataError

logger = logging.getLogger(__name__)

MAX_SEQUENCES = 2_000_000


def quadrature_nodes(dist: TimeDistribution, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Collapse the tracked bins of a distribution into at most n_nodes nodes of similar mass.

    Consecutive bins are grouped so that each group holds about 1/n_nodes of the tracked
    mass. A node sits at the mass-weighted mean time of its group and carries the
    group's mass.

    Returns:
        (times, masses); masses sum to the tracked mass.
    """
    tracked = dist.tracked_mass
    if tracked <= 0:
        return np.zeros(0), np.zeros(0)
    cumulative = np.cumsum(dist.mass) / tracked
    midpoints = cumulative - 0.5 * dist.mass / tracked
    groups = np.minimum((midpoints * n_nodes).astype(int), n_nodes - 1)
    masses = np.bincount(groups, weights=dist.mass, minlength=n_nodes)
    moments = np.bincount(groups, weights=dist.mass * dist.centers, minlength=n_nodes)
    keep = masses > 0
    return moments[keep] / masses[keep], masses[keep]


def truncate_to_horizon(seq: RamseySequence, horizon: Optional[float]) -> RamseySequence:
    """Drop trailing returns until the sequence fits in the coherence horizon."""
    if horizon is None or seq.duration <= horizon:
        return seq
    t_in = min(seq.t_in, horizon)
    kept = 0
    elapsed = t_in
    for t_out in seq.t_outs:
        elapsed += t_out + seq.t_in
        if elapsed > horizon:
            break
        kept += 1
    return RamseySequence(t_in=t_in, t_outs=seq.t_outs[:kept], weight=seq.weight)


def _normalized(sequences: list[RamseySequence], method: str) -> SequenceSet:
    total = math.fsum(seq.weight for seq in sequences)
    if not total > 0:
        raise InsufficientDataError("All sequence weights are zero.")
    scaled = [RamseySequence(t_in=s.t_in, t_outs=s.t_outs, weight=s.weight / total) for s in sequences]
    return SequenceSet(sequences=tuple(scaled), method=method)


def enumerate_sequences(
    t_in_dist: TimeDistribution, t_out_dist: TimeDistribution, cfg: EnsembleConfig
) -> SequenceSet:
    """
    Build sequences on an independent-product quadrature.

    With in-beam nodes (t_i, w_i), dark nodes (s_j, q_j) normalized over returning
    excursions, and return probability p = 1 - escape mass of the dark distribution, a
    sequence with k returns has weight

        w_i · p^k · Π q_j · (1 - p if k < max_returns else 1)

    so the last class absorbs every history with max_returns or more returns. In-beam
    mass beyond the horizon sits on a node at the horizon.

    Raises:
        InsufficientDataError: if the in-beam distribution has no tracked mass
        ValueError: if the product grid would exceed MAX_SEQUENCES
    """
    if t_in_dist.tracked_mass <= 0:
        raise InsufficientDataError("The in-beam time distribution is empty.")
    in_times, in_masses = quadrature_nodes(t_in_dist, cfg.t_in_quadrature_nodes)
    if t_in_dist.escape_mass > 0:
        in_times = np.append(in_times, t_in_dist.horizon)
        in_masses = np.append(in_masses, t_in_dist.escape_mass)

    p = t_out_dist.tracked_mass
    out_times, out_masses = quadrature_nodes(t_out_dist, cfg.t_out_quadrature_nodes)
    out_weights = out_masses / p if p > 0 else out_masses

    n_out = len(out_times) if p > 0 else 0
    count = len(in_times) * sum(n_out**k for k in range(cfg.max_returns + 1))
    if count > MAX_SEQUENCES:
        raise ValueError(
            f"Product quadrature would build {count} sequences (limit {MAX_SEQUENCES}); "
            "reduce the node counts or max_returns."
        )

    sequences = []
    for t_in, w_in in zip(in_times, in_masses):
        for k in range(cfg.max_returns + 1):
            if k > 0 and n_out == 0:
                break
            tail = (1.0 - p) if k < cfg.max_returns else 1.0
            for combo in itertools.product(range(n_out), repeat=k):
                weight = w_in * p**k * tail * math.prod(out_weights[j] for j in combo)
                if weight <= 0:
                    continue
                seq = RamseySequence(t_in=float(t_in), t_outs=tuple(out_times[j] for j in combo), weight=weight)
                sequences.append(truncate_to_horizon(seq, cfg.coherence_horizon))

    result = _normalized(sequences, method="product")
    logger.debug(
        json.dumps(
            {
                "component": "ensemble",
                "event": "enumerated",
                "method": "product",
                "sequences": len(result),
                "return_probability": p,
            }
        )
    )
    return result


def sequences_from_walks(stats: WalkEnsembleStats, cfg: EnsembleConfig) -> SequenceSet:
    """
    One sequence per walker with weight 1/n_walkers, keeping the walker's own (t_in, t_out...) pairing.

    Walkers with more recorded returns than max_returns keep their first max_returns.

    Raises:
        InsufficientDataError: if max_returns exceeds the number of returns the walks recorded
    """
    if cfg.max_returns > stats.max_depth:
        raise InsufficientDataError(
            f"max_returns={cfg.max_returns} exceeds the Monte Carlo return depth {stats.max_depth}."
        )
    weight = 1.0 / stats.n_walkers
    sequences = []
    for t_in, t_outs in stats.joint_samples():
        seq = RamseySequence(t_in=t_in, t_outs=t_outs[: cfg.max_returns], weight=weight)
        sequences.append(truncate_to_horizon(seq, cfg.coherence_horizon))
    result = _normalized(sequences, method="joint")
    logger.debug(
        json.dumps(
            {
                "component": "ensemble",
                "event": "enumerated",
                "method": "joint",
                "sequences": len(result),
                "class_masses": {str(k): v for k, v in result.class_masses().items()},
            }
        )
    )
    return result


def ensemble_lineshape(
    params: PhysicalParams, sequence_set: SequenceSet, cfg: EnsembleConfig, grid: np.ndarray
) -> Lineshape:
    """Σ weight·T_s(Δ) with Γ_dark from cfg added to the dark decay only."""
    return weighted_lineshape(params, sequence_set.sequences, grid, dark_rate=cfg.dark_dephasing_rate)


def class_lineshapes(
    params: PhysicalParams, sequence_set: SequenceSet, cfg: EnsembleConfig, grid: np.ndarray
) -> dict[int, Lineshape]:
    """
    Contribution of each return class, keyed by number of returns.

    Each entry is the weighted sum over that class only, so the entries add up to the
    ensemble lineshape.
    """
    classes: dict[int, list[RamseySequence]] = {}
    for seq in sequence_set.sequences:
        classes.setdefault(seq.returns, []).append(seq)
    return {
        k: weighted_lineshape(params, members, grid, dark_rate=cfg.dark_dephasing_rate, validity_thresholds=None)
        for k, members in sorted(classes.items())
    }


def gradient_comparison(
    params: PhysicalParams,
    geom: Geometry,
    cfg: EnsembleConfig,
    grid: np.ndarray,
    gamma_dark_values: Iterable[float],
    walk_config: Optional[WalkConfig] = None,
    sequence_set: Optional[SequenceSet] = None,
) -> list[Lineshape]:
    """
    Ensemble lineshapes for several dark dephasing rates from one set of sequences.

    The sequences come from ``sequence_set`` when given, otherwise from a single Monte
    Carlo run with ``walk_config``. Only the dark decay changes between entries.

    Raises:
        ValueError: if any rate is negative or neither sequences nor a walk config is given
    """
    rates = [float(rate) for rate in gamma_dark_values]
    if any(not rate >= 0 or not math.isfinite(rate) for rate in rates):
        raise ValueError(f"Dark dephasing rates must be finite and non-negative (got {rates}).")
    if sequence_set is None:
        if walk_config is None:
            raise ValueError("gradient_comparison needs either a sequence set or a walk config.")
        stats = simulate_walks(
            geom,
            walk_config.n_walkers,
            walk_config.time_step,
            walk_config.horizon,
            walk_config.seed,
            max_depth=max(walk_config.max_depth, cfg.max_returns),
            min_dark_time=walk_config.min_dark_time,
            block_size=walk_config.block_size,
        )
        sequence_set = sequences_from_walks(stats, cfg)
    return [ensemble_lineshape(params, sequence_set, cfg.with_dark_rate(rate), grid) for rate in rates]
