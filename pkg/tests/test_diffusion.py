"""Tests for the eigenmode description of beam escape."""

import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from drntool.core.diffusion import (
    BESSEL_FIRST_ZERO,
    bessel_roots,
    exit_time_cdf,
    exit_time_density,
    exit_time_distribution,
    lowest_mode_fwhm,
    mean_exit_time,
    mode_weight_sum,
    survival_probability,
    tau_d,
)
from drntool.core.models import Geometry
from drntool.infrastructure.exceptions import ValidityWarning
from tests.conftest import make_params


class TestBesselRoots:
    def test_first_root(self):
        assert BESSEL_FIRST_ZERO == pytest.approx(2.404825557695773, rel=1e-14)

    def test_matches_scipy_beyond_exact_table(self):
        np.testing.assert_allclose(bessel_roots(300), jn_zeros(0, 300), rtol=1e-12)

    def test_returns_a_copy(self):
        roots = bessel_roots(3)
        roots[0] = 0.0
        assert bessel_roots(3)[0] == pytest.approx(2.404825557695773)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            bessel_roots(0)

    def test_mode_weights_sum_to_one(self):
        assert mode_weight_sum() == pytest.approx(1.0, abs=1e-8)


class TestEscapeTimes:
    def test_tau_d(self, geom):
        assert tau_d(geom) == pytest.approx(0.075**2 / (2.404825557695773**2 * 50.0))

    def test_mean_exit_time_from_modes(self, geom):
        assert mean_exit_time(geom, from_modes=True) == pytest.approx(0.075**2 / (8 * 50.0), rel=1e-8)

    def test_survival_starts_at_one(self, geom):
        assert survival_probability(geom, 0.0)[0] == pytest.approx(1.0, abs=1e-8)

    def test_survival_is_monotone(self, geom):
        t = np.linspace(0.0, 10 * tau_d(geom), 500)
        survival = survival_probability(geom, t)
        assert np.all(np.diff(survival) <= 0)
        np.testing.assert_allclose(exit_time_cdf(geom, t), 1.0 - survival)

    @pytest.mark.parametrize("multiple", [3.0, 5.0])
    def test_tail_decays_at_lowest_mode_rate(self, geom, multiple):
        tau = tau_d(geom)
        t1, t2 = multiple * tau, (multiple + 0.01) * tau
        s1, s2 = survival_probability(geom, [t1, t2])
        slope = (math.log(s1) - math.log(s2)) / (t2 - t1)
        assert slope == pytest.approx(1.0 / tau, rel=0.01)

    def test_density_is_minus_survival_derivative(self, geom):
        tau = tau_d(geom)
        t = np.array([0.2, 0.5, 1.0, 2.0]) * tau
        h = 1e-4 * tau
        numeric = (survival_probability(geom, t - h) - survival_probability(geom, t + h)) / (2 * h)
        np.testing.assert_allclose(exit_time_density(geom, t), numeric, rtol=1e-5)

    def test_density_at_zero_raises(self, geom):
        with pytest.raises(ValueError):
            exit_time_density(geom, 0.0)

    def test_negative_time_raises(self, geom):
        with pytest.raises(ValueError):
            survival_probability(geom, -1.0)


class TestExitDistribution:
    def test_mean_matches_closed_form(self, geom):
        dist = exit_time_distribution(geom, n_bins=4000)
        assert dist.mean() == pytest.approx(mean_exit_time(geom), rel=0.01)
        assert dist.escape_mass < 1e-15

    def test_masses_are_normalized(self, geom):
        dist = exit_time_distribution(geom, n_bins=100)
        assert dist.tracked_mass + dist.escape_mass == pytest.approx(1.0, abs=1e-9)
        assert dist.horizon == pytest.approx(50 * tau_d(geom))

    def test_short_horizon_warns(self, geom):
        with pytest.warns(ValidityWarning):
            dist = exit_time_distribution(geom, n_bins=10, horizon=0.01 * tau_d(geom))
        assert dist.escape_mass > 0.5

    @pytest.mark.parametrize("kwargs", [{"n_bins": 0}, {"horizon": 0.0}])
    def test_bad_arguments_raise(self, geom, kwargs):
        with pytest.raises(ValueError):
            exit_time_distribution(geom, **kwargs)


class TestLowestModeWidth:
    @pytest.mark.parametrize("power_width", [0.0, 5000.0, 10000.0])
    def test_small_beam_width_in_khz_range(self, geom, power_width):
        width = lowest_mode_fwhm(geom, make_params(power_width=power_width))
        assert 14e3 <= width <= 22e3

    @pytest.mark.parametrize("gamma0", [1.0, 2 * math.pi * 50])
    def test_large_beam_width_in_hundreds_of_hz(self, gamma0):
        geom = Geometry(beam_radius=0.5, cell_radius=1.25, diffusion_coefficient=50.0)
        width = lowest_mode_fwhm(geom, make_params(gamma0=gamma0, power_width=0.0))
        assert 330 <= width <= 500
