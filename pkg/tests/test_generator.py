import math

import numpy as np
import pytest

from dynmkw.bench.generator import (
    DEFAULT_LEVELS,
    SimConfig,
    baseline,
    default_levels,
    generate_signal,
    inject_outliers,
    replicate_signal,
    snr_grid,
)
from dynmkw.core.ranks import ObservationMatrix
from dynmkw.exceptions import ConfigError


class TestSimConfig:
    def test_defaults(self):
        cfg = SimConfig()
        assert (cfg.n, cfg.L) == (500, 5)
        assert cfg.boundaries == (100, 200, 300, 400)
        assert cfg.levels == DEFAULT_LEVELS

    def test_every_boundary_is_a_partial_change(self):
        for levels in (DEFAULT_LEVELS, default_levels(7, 4), default_levels(3, 2)):
            moved = np.diff(np.asarray(levels), axis=0) != 0
            assert moved.any(axis=1).all()
            assert (~moved).any(axis=1).all()

    def test_full_change_is_rejected(self):
        with pytest.raises(ConfigError, match="unchanged"):
            SimConfig(n=20, L=2, boundaries=(10,), levels=((0.0, 0.0), (1.0, 1.0)))

    @pytest.mark.parametrize("boundaries", [(0, 10), (10, 10), (30, 20), (500,)])
    def test_bad_boundaries(self, boundaries):
        with pytest.raises(ConfigError):
            SimConfig(boundaries=boundaries)

    def test_levels_follow_new_shape(self):
        cfg = SimConfig(n=60, L=3, boundaries=(20, 40))
        assert np.asarray(cfg.levels).shape == (3, 3)

    def test_noise_sigma(self):
        assert SimConfig(snr_db=16).noise_sigma() == pytest.approx(10 ** -0.8)
        assert SimConfig(snr_db=16, snr_convention="power").noise_sigma() == pytest.approx(
            10 ** -1.6
        )
        assert SimConfig(snr_db=math.inf).noise_sigma() == 0.0

    def test_from_scenario(self):
        cfg = SimConfig.from_scenario(
            {"SIM_N": 80, "SIM_BOUNDARIES": (20, 40, 60), "SIM_SNR_GRID": (1.0,)},
            replications=3,
            seed=None,
        )
        assert (cfg.n, cfg.boundaries, cfg.replications, cfg.seed) == (80, (20, 40, 60), 3, 0)

    def test_snr_grid(self):
        assert snr_grid() == tuple(float(v) for v in range(0, 31, 2))
        assert snr_grid([3, 4]) == (3.0, 4.0)


class TestGenerateSignal:
    def test_infinite_snr_is_the_baseline(self):
        cfg = SimConfig(snr_db=math.inf)
        X, truth = generate_signal(cfg, 0)
        assert truth == cfg.boundaries
        np.testing.assert_array_equal(X.values, baseline(cfg))

    def test_deterministic_per_replicate(self):
        cfg = SimConfig(n=50, boundaries=(10, 20, 30, 40), seed=3)
        a, _ = generate_signal(cfg, 2)
        b, _ = generate_signal(cfg, 2)
        c, _ = generate_signal(cfg, 3)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_noise_draw_does_not_depend_on_snr(self):
        cfg = SimConfig(n=50, boundaries=(10, 20, 30, 40))
        low, high = cfg.at_snr(4.0), cfg.at_snr(20.0)
        a = (generate_signal(low, 1)[0].values - baseline(low)) / low.noise_sigma()
        b = (generate_signal(high, 1)[0].values - baseline(high)) / high.noise_sigma()
        np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)

    def test_noise_covariance(self):
        cfg = SimConfig(n=200_000, boundaries=(100_000,), levels=None, L=5, snr_db=6.0)
        X, _ = generate_signal(cfg, 0)
        empirical = np.cov((X.values - baseline(cfg)).T)
        expected = cfg.noise_sigma() ** 2 * cfg.noise_correlation()
        np.testing.assert_allclose(empirical, expected, rtol=0.03)

    def test_correlation_must_be_psd(self):
        with pytest.raises(ConfigError, match="positive semi-definite"):
            generate_signal(SimConfig(correlation=-0.5), 0)


class TestOutliers:
    @pytest.fixture
    def X(self):
        return ObservationMatrix(np.zeros((500, 5)))

    def test_rate_zero_is_a_no_op(self, X):
        assert inject_outliers(X, 0.0, 10.0, seed=1, sigma=1.0) is X

    def test_exact_row_count(self, X):
        out = inject_outliers(X, 0.05, 10.0, seed=1, sigma=1.0)
        assert np.count_nonzero(np.any(out.values != 0, axis=1)) == 25

    def test_excess_variance(self):
        X = ObservationMatrix(np.zeros((20_000, 5)))
        out = inject_outliers(X, 0.5, 10.0, seed=2, sigma=0.5)
        rows = out.values[np.any(out.values != 0, axis=1)]
        assert rows.var() == pytest.approx(10 * 0.25, rel=0.05)

    def test_rate_must_be_below_one(self, X):
        with pytest.raises(ConfigError):
            inject_outliers(X, 1.0, 10.0, seed=0, sigma=1.0)

    def test_replicate_signal_adds_outliers(self):
        cfg = SimConfig(n=100, boundaries=(20, 40, 60, 80), outlier_rate=0.1, seed=4)
        clean, _ = generate_signal(cfg, 0)
        dirty, _ = replicate_signal(cfg, 0)
        assert np.count_nonzero(np.any(clean.values != dirty.values, axis=1)) == 10
