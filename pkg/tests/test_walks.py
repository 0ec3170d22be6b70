"""Tests for the Monte Carlo walkers."""

import math

import numpy as np
import pytest
from scipy.special import erfc

from drntool.core.diffusion import mean_exit_time, tau_d
from drntool.core.models import Geometry, WalkConfig
from drntool.core.walks import (
    RandomWalkSimulator,
    crossing_times,
    exit_time_histogram,
    ks_statistic,
    return_time_distribution,
    simulate_walks,
)
from drntool.infrastructure.exceptions import InsufficientDataError


class TestSimulatorSetup:
    def test_missing_seed_raises(self, geom):
        with pytest.raises(ValueError, match="seed"):
            simulate_walks(geom, 10)

    def test_step_too_large_raises(self, geom):
        with pytest.raises(ValueError, match="too large"):
            simulate_walks(geom, 10, time_step=tau_d(geom), seed=1)

    @pytest.mark.parametrize("start_radius", [0.01, 1.25, 5.0])
    def test_start_radius_outside_annulus_raises(self, geom, start_radius):
        with pytest.raises(ValueError, match="start_radius"):
            simulate_walks(geom, 10, seed=1, start_radius=start_radius)

    def test_defaults_follow_tau(self, geom):
        simulator = RandomWalkSimulator(geom, WalkConfig(n_walkers=1, seed=3))
        tau = tau_d(geom)
        assert simulator.time_step == pytest.approx(tau / 400)
        assert simulator.horizon == pytest.approx(200 * tau)
        assert simulator.min_dark_time == pytest.approx(20 * tau)


class TestDeterminism:
    def test_same_seed_same_results(self, geom):
        first = simulate_walks(geom, 200, seed=5, max_depth=2)
        second = simulate_walks(geom, 200, seed=5, max_depth=2)
        np.testing.assert_array_equal(first.first_exit_times, second.first_exit_times)
        np.testing.assert_array_equal(first.t_outs, second.t_outs)
        assert first.n_returned == second.n_returned

    def test_different_seeds_differ(self, geom):
        first = simulate_walks(geom, 200, seed=5, max_depth=0)
        second = simulate_walks(geom, 200, seed=6, max_depth=0)
        assert not np.array_equal(first.first_exit_times, second.first_exit_times)

    def test_results_scale_with_geometry(self, geom):
        doubled = Geometry(
            beam_radius=2 * geom.beam_radius,
            cell_radius=2 * geom.cell_radius,
            diffusion_coefficient=4 * geom.diffusion_coefficient,
        )
        base = simulate_walks(geom, 300, seed=9, max_depth=2)
        scaled = simulate_walks(doubled, 300, seed=9, max_depth=2)
        np.testing.assert_allclose(scaled.first_exit_times, base.first_exit_times, rtol=1e-9)
        np.testing.assert_allclose(scaled.t_outs, base.t_outs, rtol=1e-9)


class TestExitStatistics:
    @pytest.mark.slow
    def test_mean_exit_time(self, geom):
        stats = simulate_walks(geom, 50000, seed=2024, max_depth=0)
        assert stats.mean_exit_time == pytest.approx(mean_exit_time(geom), rel=0.02)

    @pytest.mark.slow
    def test_ks_against_eigenmodes(self, geom):
        stats = simulate_walks(geom, 100000, seed=77, max_depth=0)
        assert ks_statistic(stats, geom) < 0.01

    def test_exit_histogram_is_normalized(self, geom):
        stats = simulate_walks(geom, 500, seed=4, max_depth=0)
        dist = exit_time_histogram(stats, n_bins=40)
        assert dist.tracked_mass + dist.escape_mass == pytest.approx(1.0)
        assert dist.escape_mass == pytest.approx(0.0, abs=1e-3)

    def test_without_returns_there_are_no_excursions(self, geom):
        stats = simulate_walks(geom, 100, seed=4, max_depth=0)
        assert stats.n_excursions == 0
        with pytest.raises(InsufficientDataError):
            return_time_distribution(stats)


class TestReturns:
    @pytest.mark.slow
    @pytest.mark.parametrize("ratio", [2.0, 5.0, 10.0])
    def test_annulus_return_probability(self, ratio):
        a = 0.075
        geom = Geometry(beam_radius=a, cell_radius=ratio * a, diffusion_coefficient=50.0)
        tau = tau_d(geom)
        start = 1.05 * a
        stats = simulate_walks(
            geom,
            10000,
            seed=31,
            max_depth=1,
            start_radius=start,
            time_step=tau / 4000,
            horizon=2000 * tau,
        )
        expected = math.log(ratio * a / start) / math.log(ratio)
        assert stats.return_probability == pytest.approx(expected, rel=0.02)

    def test_return_times_are_heavy_tailed(self):
        geom = Geometry(beam_radius=0.125, cell_radius=1.25, diffusion_coefficient=50.0)
        stats = simulate_walks(geom, 2000, seed=12, max_depth=1)
        samples = stats.return_samples
        assert len(samples) > 50
        assert np.mean(samples) > np.median(samples)

    def test_larger_cell_gives_longer_dark_times(self):
        a = 0.125
        small = Geometry(beam_radius=a, cell_radius=2 * a, diffusion_coefficient=50.0)
        large = Geometry(beam_radius=a, cell_radius=10 * a, diffusion_coefficient=50.0)
        short = tau_d(small) / 10
        near = simulate_walks(small, 2000, seed=8, max_depth=1, min_dark_time=short).return_samples
        far = simulate_walks(large, 2000, seed=8, max_depth=1, min_dark_time=short).return_samples
        assert len(near) > 0
        assert np.mean(far) > np.mean(near)

    def test_return_distribution_counts_every_excursion(self, geom):
        stats = simulate_walks(geom, 500, seed=21, max_depth=2)
        dist = return_time_distribution(stats, n_bins=50)
        assert stats.n_excursions > 0
        assert dist.tracked_mass == pytest.approx(len(stats.return_samples) / stats.n_excursions)
        assert dist.tracked_mass + dist.escape_mass == pytest.approx(1.0)

    def test_recorded_returns_respect_depth(self, geom):
        stats = simulate_walks(geom, 300, seed=21, max_depth=2)
        assert stats.t_outs.shape == (300, 2)
        assert np.all(stats.n_returns <= 2)
        assert np.all(stats.return_samples >= 20 * tau_d(geom))

    def test_short_excursions_are_not_dark_periods(self, geom):
        every = simulate_walks(geom, 300, seed=21, max_depth=1, min_dark_time=0.0)
        long_only = simulate_walks(geom, 300, seed=21, max_depth=1)
        assert every.n_returned > long_only.n_returned
        assert every.return_probability > long_only.return_probability


class TestCrossingTimes:
    def test_inverts_the_truncated_first_passage_law(self):
        distance, sigma, dt = 0.5, 0.3, 1e-3
        uniform = np.linspace(0.05, 0.95, 19)
        times = crossing_times(np.full(19, distance), np.full(19, sigma), np.full(19, dt), uniform)
        scaled = distance / (math.sqrt(2.0) * sigma)
        cdf = erfc(scaled * np.sqrt(dt / times)) / erfc(scaled)
        np.testing.assert_allclose(cdf, uniform, rtol=1e-8)
        assert np.all(np.diff(times) > 0)

    def test_walker_on_the_boundary_crosses_immediately(self):
        times = crossing_times(np.zeros(3), np.full(3, 0.1), np.full(3, 1e-3), np.array([0.1, 0.5, 0.9]))
        np.testing.assert_array_equal(times, 0.0)

    @pytest.mark.parametrize("distance", [1e-4, 0.1, 1.0, 10.0])
    def test_offsets_stay_within_the_step(self, rng, distance):
        uniform = rng.random(1000)
        times = crossing_times(np.full(1000, distance), np.full(1000, 0.1), np.full(1000, 1e-3), uniform)
        assert np.all(np.isfinite(times))
        assert np.all((times >= 0.0) & (times <= 1e-3))
