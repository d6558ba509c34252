import math

import numpy as np
import pytest
from scipy import stats

from dynmkw.core.ranks import ObservationMatrix, compute_ranks, rank_covariance
from dynmkw.core.statistic import (
    Segmentation,
    SegmentStatistic,
    WhitenedRanks,
    fixed_boundary_pvalue,
    kruskal_wallis_univariate,
    max_single_cp_scan,
    mean_rank_vector,
    permutation_count,
    permutation_pvalue,
    segment_cost,
    statistic_T,
)
from dynmkw.exceptions import (
    ConfigError,
    InvalidSegmentation,
    SeriesTooShort,
    UndefinedTest,
)
from tests.conftest import step_matrix


@pytest.fixture
def four():
    R = compute_ranks(ObservationMatrix([1.0, 2.0, 3.0, 4.0]))
    return R, rank_covariance(R)


def _random(gen, n, L):
    X = ObservationMatrix(gen.standard_normal((n, L)))
    R = compute_ranks(X)
    return X, R, rank_covariance(R)


class TestSegmentation:
    def test_segments_start_at_row_one(self):
        seg = Segmentation(10, (3, 7))
        assert seg.K == 3
        assert seg.edges() == (0, 3, 7, 10)
        assert seg.segments() == [(1, 3), (4, 7), (8, 10)]

    @pytest.mark.parametrize("boundaries", [(0,), (10,), (5, 5), (7, 3)])
    def test_rejects_bad_boundaries(self, boundaries):
        with pytest.raises(InvalidSegmentation):
            Segmentation(10, boundaries)

    def test_min_seg_len(self):
        Segmentation(10, (3, 6), min_seg_len=3)
        with pytest.raises(InvalidSegmentation):
            Segmentation(10, (3, 5), min_seg_len=3)


class TestMeanRankVector:
    def test_first_two_rows(self, four):
        R, _ = four
        np.testing.assert_array_equal(mean_rank_vector(R, 1, 2), [-0.5])

    def test_whole_series_is_one_half(self, gen):
        _, R, _ = _random(gen, 25, 3)
        np.testing.assert_allclose(mean_rank_vector(R, 1, 25), [0.5] * 3, atol=1e-12)

    def test_single_row(self, gen):
        _, R, _ = _random(gen, 9, 2)
        np.testing.assert_allclose(mean_rank_vector(R, 4, 4), R.ranks[3] - 4.5)

    def test_reversed_range(self, four):
        R, _ = four
        with pytest.raises(IndexError):
            mean_rank_vector(R, 3, 2)


class TestSegmentCost:
    def test_whole_series(self, four):
        R, S = four
        assert segment_cost(R, S, 1, 4) == pytest.approx(32 / 3, rel=1e-12)

    def test_first_pair(self, four):
        R, S = four
        assert segment_cost(R, S, 1, 2) == pytest.approx(16 / 3, rel=1e-12)

    def test_rank_unit_closed_form(self, four):
        # Delta(1:n) against the rank-unit covariance is 3 n^2 / (n^2 + 2)
        R, S = four
        assert segment_cost(R, S, 1, 4) / R.n == pytest.approx(8 / 3, rel=1e-12)

    def test_non_negative(self, gen):
        _, R, S = _random(gen, 60, 3)
        for _ in range(1000):
            i, j = sorted(gen.integers(1, 61, size=2))
            assert segment_cost(R, S, int(i), int(j)) >= 0.0


class TestStatisticT:
    def test_worked_example(self, four):
        R, S = four
        stat = statistic_T(R, S, Segmentation(4, (2,)))
        assert stat.value == pytest.approx(10 / 3, rel=1e-12)
        assert stat.value / R.n == pytest.approx(5 / 6, rel=1e-12)
        assert stat.df == 1

    def test_single_group(self, gen):
        _, R, S = _random(gen, 30, 2)
        stat = statistic_T(R, S, Segmentation(30))
        assert stat.value == pytest.approx(segment_cost(R, S, 1, 30) / 900, rel=1e-12)
        assert stat.df == 0

    def test_value_is_sum_of_costs(self, gen):
        _, R, S = _random(gen, 50, 3)
        stat = statistic_T(R, S, Segmentation(50, (10, 22, 41)))
        assert stat.value == pytest.approx(sum(stat.per_segment_costs) / 2500, abs=1e-12)
        assert stat.df == 9

    def test_univariate_kruskal_wallis_identity(self, gen):
        _, R, S = _random(gen, 40, 1)
        seg = Segmentation(40, (13, 29))
        stat = statistic_T(R, S, seg)
        classical = kruskal_wallis_univariate(R, seg)
        assert classical[0] == pytest.approx(stat.value * 12 * S.sigma[0, 0], rel=1e-10)

    def test_rejects_foreign_segmentation(self, four):
        R, S = four
        with pytest.raises(InvalidSegmentation):
            statistic_T(R, S, Segmentation(5, (2,)))

    def test_refinement_never_decreases(self, gen):
        _, R, S = _random(gen, 40, 2)
        for _ in range(200):
            coarse = tuple(sorted(gen.choice(np.arange(1, 40), 3, replace=False)))
            extra = tuple(gen.choice(np.arange(1, 40), 2, replace=False))
            fine = tuple(sorted(set(coarse) | set(extra)))
            a = sum(statistic_T(R, S, Segmentation(40, coarse)).per_segment_costs)
            b = sum(statistic_T(R, S, Segmentation(40, fine)).per_segment_costs)
            assert b >= a - 1e-9 * max(1.0, a)

    def test_weighted_mean_ranks_sum_to_half_n(self, gen):
        _, R, _ = _random(gen, 33, 3)
        total = np.zeros(3)
        for first, last in Segmentation(33, (5, 17, 20)).segments():
            total += (last - first + 1) * mean_rank_vector(R, first, last)
        np.testing.assert_allclose(total, [33 / 2] * 3, atol=1e-9)

    def test_univariate_is_shifted_scaled_kruskal_h(self, gen):
        n = 60
        X = ObservationMatrix(gen.standard_normal(n))
        R = compute_ranks(X)
        seg = Segmentation(n, (17, 41))
        groups = [X.values[first - 1 : last, 0] for first, last in seg.segments()]
        h = stats.kruskal(*groups).statistic
        expected = h * n * (n + 1) / (n ** 2 + 2) + 3 * n / (n ** 2 + 2)
        assert statistic_T(R, rank_covariance(R), seg).value == pytest.approx(expected, rel=1e-10)

    @staticmethod
    def _null_draws(n, boundaries, seed, reps=2000):
        gen = np.random.default_rng(seed)
        seg = Segmentation(n, boundaries)
        values = np.empty(reps)
        for rep in range(reps):
            R = compute_ranks(ObservationMatrix(gen.standard_normal((n, 2))))
            values[rep] = statistic_T(R, rank_covariance(R), seg).value
        return values

    def test_null_mean(self):
        values = self._null_draws(200, (67, 134), seed=7)
        assert values.mean() == pytest.approx(4.0, abs=0.3)

    def test_null_distribution_large_n(self):
        values = self._null_draws(2000, (667, 1334), seed=7)
        assert values.mean() == pytest.approx(4.0, abs=0.3)
        assert stats.kstest(values, "chi2", args=(4,)).pvalue > 0.01


class TestFixedBoundaryPvalue:
    def test_zero_statistic(self):
        assert fixed_boundary_pvalue(SegmentStatistic(0.0, 3, ())) == 1.0

    def test_two_degrees_of_freedom(self):
        p = fixed_boundary_pvalue(SegmentStatistic(2 * math.log(2), 2, ()))
        assert p == pytest.approx(0.5, rel=1e-10)

    def test_matches_scipy(self):
        for df in (1, 10, 200):
            p = fixed_boundary_pvalue(SegmentStatistic(1.3 * df, df, ()))
            assert p == pytest.approx(stats.chi2.sf(1.3 * df, df), rel=1e-10)

    def test_single_group_is_undefined(self):
        with pytest.raises(UndefinedTest, match="single group"):
            fixed_boundary_pvalue(SegmentStatistic(1.0, 0, ()))

    def test_degrees_of_freedom(self, gen):
        _, R, S = _random(gen, 30, 5)
        assert statistic_T(R, S, Segmentation(30, (10, 20))).df == 10


class TestScan:
    def test_noiseless_step(self):
        X = step_matrix([[0.0], [1.0]], [50, 50])
        R = compute_ranks(X)
        assert max_single_cp_scan(R, rank_covariance(R))[0] == 50

    def test_matches_brute_force(self, gen):
        X, R, S = _random(gen, 40, 2)
        index, t_max = max_single_cp_scan(R, S)
        brute = [statistic_T(R, S, Segmentation(40, (b,))).value for b in range(1, 40)]
        assert index == int(np.argmax(brute)) + 1
        assert t_max == pytest.approx(max(brute), rel=1e-10)

    def test_two_points(self):
        R = compute_ranks(ObservationMatrix([1.0, 2.0]))
        assert max_single_cp_scan(R, rank_covariance(R))[0] == 1

    def test_min_seg_len_limits_candidates(self, gen):
        _, R, S = _random(gen, 20, 1)
        candidates, _ = WhitenedRanks.from_table(R, S).split_statistics(5)
        assert candidates[0] == 5 and candidates[-1] == 15

    def test_too_short(self, gen):
        _, R, S = _random(gen, 5, 1)
        with pytest.raises(SeriesTooShort):
            max_single_cp_scan(R, S, min_seg_len=3)

    def test_monotone_invariance(self, gen):
        values = gen.standard_normal((60, 2))
        results = []
        for transformed in (values, values ** 3, np.exp(values)):
            R = compute_ranks(ObservationMatrix(transformed))
            results.append(max_single_cp_scan(R, rank_covariance(R)))
        assert results[0] == results[1] == results[2]


class TestPermutationPvalue:
    def test_zero_statistic(self, gen):
        X, _, _ = _random(gen, 20, 2)
        assert permutation_pvalue(X, 0.0, 19, seed=1) == 1.0

    def test_strong_step_hits_the_floor(self):
        X = step_matrix([[0.0, 0.0], [5.0, 5.0]], [50, 50], noise=0.1, seed=3)
        R = compute_ranks(X)
        S = rank_covariance(R)
        _, t_max = max_single_cp_scan(R, S)
        assert permutation_pvalue(X, t_max, 199, seed=11) == 1 / 200

    def test_deterministic_given_seed(self, gen):
        X, R, S = _random(gen, 30, 2)
        _, t_max = max_single_cp_scan(R, S)
        assert permutation_pvalue(X, t_max, 49, seed=5) == permutation_pvalue(X, t_max, 49, 5)

    def test_needs_one_replicate(self, gen):
        X, _, _ = _random(gen, 10, 1)
        with pytest.raises(ConfigError):
            permutation_pvalue(X, 1.0, 0, seed=0)

    def test_early_stop_keeps_decision(self, gen):
        X, R, S = _random(gen, 30, 2)
        geometry = WhitenedRanks.from_table(R, S)
        _, t_max = geometry.scan()
        full = permutation_count(geometry, t_max, 99, seed=2)
        stopped = permutation_count(geometry, t_max, 99, seed=2, alpha=0.05)
        assert stopped <= full
        assert ((1 + full) / 100 <= 0.05) == ((1 + stopped) / 100 <= 0.05)

    @pytest.mark.slow
    def test_null_pvalues_are_uniform(self):
        gen = np.random.default_rng(99)
        pvalues = []
        for rep in range(500):
            X = ObservationMatrix(gen.standard_normal((60, 2)))
            R = compute_ranks(X)
            S = rank_covariance(R)
            _, t_max = max_single_cp_scan(R, S)
            pvalues.append(permutation_pvalue(X, t_max, 199, seed=rep, ranks=R, covariance=S))
        grid = np.arange(1, 201) / 200
        empirical = np.searchsorted(np.sort(pvalues), grid, side="right") / len(pvalues)
        assert np.max(np.abs(empirical - grid)) < 0.08
