"""Tests for LineshapePipeline stage wiring and caching."""

import numpy as np
import pytest

from drntool.core.diffusion import tau_d
from drntool.core.models import EnsembleConfig, WalkConfig
from drntool.core.pipeline import LineshapePipeline, walk_horizon
from drntool.infrastructure.exceptions import InsufficientDataError
from tests.conftest import make_params


@pytest.fixture
def pipeline(params, geom, grid):
    return LineshapePipeline(params, geom, EnsembleConfig(max_returns=1), WalkConfig(n_walkers=300, seed=5), grid)


class TestPipelineSetup:
    def test_missing_seed_raises(self, params, geom, grid):
        with pytest.raises(ValueError, match="seed"):
            LineshapePipeline(params, geom, EnsembleConfig(), WalkConfig(n_walkers=10), grid)

    def test_unknown_source_raises(self, params, geom, grid):
        with pytest.raises(ValueError, match="sequence_source"):
            LineshapePipeline(params, geom, EnsembleConfig(), WalkConfig(seed=1), grid, sequence_source="grid")

    def test_walk_depth_follows_max_returns(self, params, geom, grid):
        pipeline = LineshapePipeline(
            params, geom, EnsembleConfig(max_returns=3), WalkConfig(seed=1, max_depth=0), grid
        )
        assert pipeline.walk.max_depth == 3

    def test_default_horizon_covers_dark_coherence(self, params, geom, grid):
        pipeline = LineshapePipeline(params, geom, EnsembleConfig(), WalkConfig(seed=1), grid)
        assert pipeline.walk.horizon == pytest.approx(max(200 * tau_d(geom), 8.0 / params.gamma0))
        assert pipeline.walk.horizon == pytest.approx(walk_horizon(params, geom))

    def test_explicit_horizon_is_kept(self, params, geom, grid):
        pipeline = LineshapePipeline(params, geom, EnsembleConfig(), WalkConfig(seed=1, horizon=1e-3), grid)
        assert pipeline.walk.horizon == 1e-3

    def test_fast_dark_decay_keeps_the_diffusion_horizon(self, geom):
        params = make_params(gamma0=1e6)
        assert walk_horizon(params, geom) == pytest.approx(200 * tau_d(geom))


class TestPipelineStages:
    def test_walks_and_sequences_are_cached(self, pipeline):
        assert pipeline.walks() is pipeline.walks()
        assert pipeline.sequences() is pipeline.sequences()
        assert pipeline.sequences().method == "joint"

    def test_class_lineshapes_add_up(self, pipeline):
        total = pipeline.lineshape()
        classes = pipeline.class_lineshapes()
        np.testing.assert_allclose(sum(shape.values for shape in classes.values()), total.values, rtol=1e-12)

    def test_gradient_zero_rate_matches_lineshape(self, pipeline):
        shapes, entries = pipeline.gradient([0.0, 2000.0])
        np.testing.assert_array_equal(shapes[0].values, pipeline.lineshape().values)
        assert len(entries) == 2
        assert [entry.dark_rate for entry in entries] == [0.0, 2000.0]

    def test_analysis_reports_class_masses(self, pipeline):
        analysis = pipeline.analyze(pipeline.lineshape())
        assert sum(analysis.class_masses.values()) == pytest.approx(1.0)
        assert analysis.fwhm > 0
        assert analysis.lowest_mode_fwhm_hz > 0

    def test_distribution_summary_is_normalized(self, pipeline, geom):
        summary = pipeline.distributions()
        for dist in (summary.t_in_eigenmode, summary.t_in_montecarlo, summary.t_out_montecarlo):
            assert dist.tracked_mass + dist.escape_mass == pytest.approx(1.0)
        assert 0.0 <= summary.ks_statistic <= 1.0
        assert summary.mean_exit_eigenmode == pytest.approx(geom.beam_radius**2 / (8 * geom.diffusion_coefficient))

    def test_product_source(self, params, geom, grid):
        pipeline = LineshapePipeline(
            params,
            geom,
            EnsembleConfig(max_returns=1, t_in_quadrature_nodes=8, t_out_quadrature_nodes=8),
            WalkConfig(n_walkers=300, seed=5),
            grid,
            sequence_source="product",
            distribution_bins=50,
        )
        sequences = pipeline.sequences()
        assert sequences.method == "product"
        assert sum(sequences.class_masses().values()) == pytest.approx(1.0)

    def test_failures_carry_the_stage(self, params, geom, grid):
        pipeline = LineshapePipeline(
            params,
            geom,
            EnsembleConfig(max_returns=0),
            WalkConfig(n_walkers=50, seed=1, max_depth=0),
            grid,
            sequence_source="product",
        )
        with pytest.raises(InsufficientDataError) as excinfo:
            pipeline.sequences()
        assert excinfo.value.stage == "sequences"
