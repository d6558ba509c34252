import numpy as np
import pytest

from dynmkw.core.ranks import ObservationMatrix, compute_ranks, rank_covariance
from dynmkw.exceptions import DegenerateCovariance, InvalidObservations


class TestObservationMatrix:
    def test_vector_becomes_single_column(self):
        X = ObservationMatrix([1.0, 2.0, 3.0])
        assert (X.n, X.L) == (3, 1)

    def test_values_are_copied_and_read_only(self):
        raw = np.arange(6.0).reshape(3, 2)
        X = ObservationMatrix(raw)
        raw[0, 0] = 99.0
        assert X.values[0, 0] == 0.0
        with pytest.raises(ValueError):
            X.values[0, 0] = 1.0

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_names_row_and_column(self, bad):
        values = np.ones((4, 3))
        values[1, 2] = bad
        with pytest.raises(InvalidObservations, match="row 2, column 3"):
            ObservationMatrix(values)

    def test_needs_two_rows(self):
        with pytest.raises(InvalidObservations):
            ObservationMatrix(np.ones((1, 3)))

    def test_select(self):
        X = ObservationMatrix(np.arange(12.0).reshape(4, 3), labels=("a", "b", "c"))
        part = X.select([2, 0])
        assert part.labels == ("c", "a")
        np.testing.assert_array_equal(part.values[1:3], [[5.0, 3.0], [8.0, 6.0]])


class TestComputeRanks:
    def test_sorted_column(self):
        R = compute_ranks(ObservationMatrix([10.0, 20.0, 30.0, 40.0]))
        np.testing.assert_array_equal(R.ranks[:, 0], [1, 2, 3, 4])

    def test_ties_get_midranks(self):
        R = compute_ranks(ObservationMatrix([5.0, 5.0, 1.0]))
        np.testing.assert_array_equal(R.ranks[:, 0], [2.5, 2.5, 1.0])

    def test_increasing_map_leaves_ranks_unchanged(self):
        base = np.array([3.0, 1.0, 2.0])
        a = compute_ranks(ObservationMatrix(base)).ranks
        b = compute_ranks(ObservationMatrix(base ** 3)).ranks
        np.testing.assert_array_equal(a, b)

    def test_prefix_sums(self, gen):
        R = compute_ranks(ObservationMatrix(gen.standard_normal((20, 3))))
        assert R.prefix.shape == (21, 3)
        np.testing.assert_array_equal(R.prefix[0], 0.0)
        np.testing.assert_allclose(R.prefix[12] - R.prefix[4], R.ranks[4:12].sum(axis=0))

    def test_column_sums_with_and_without_ties(self, gen):
        values = np.column_stack(
            [gen.standard_normal(31), gen.integers(0, 4, 31).astype(float)]
        )
        R = compute_ranks(ObservationMatrix(values))
        # midranks are multiples of 1/2, so the sums are exact
        np.testing.assert_array_equal(R.ranks.sum(axis=0), [31 * 32 / 2] * 2)

    def test_empirical_cdf(self):
        R = compute_ranks(ObservationMatrix([4.0, 1.0, 3.0, 2.0]))
        np.testing.assert_array_equal(R.empirical_cdf()[:, 0], [1.0, 0.25, 0.75, 0.5])

    def test_monotone_transforms_are_bit_identical(self, gen):
        for _ in range(100):
            values = gen.standard_normal((30, 3))
            plain = compute_ranks(ObservationMatrix(values)).ranks
            for transform in (lambda x: x ** 3, np.exp):
                other = compute_ranks(ObservationMatrix(transform(values))).ranks
                assert np.array_equal(plain, other)


class TestRankCovariance:
    @pytest.mark.parametrize("n", [4, 17, 100])
    def test_tie_free_diagonal_closed_form(self, gen, n):
        S = rank_covariance(compute_ranks(ObservationMatrix(gen.permutation(n).astype(float))))
        assert S.sigma[0, 0] == pytest.approx((n ** 2 + 2) / (12 * n ** 2), abs=1e-12)
        assert S.rank_units[0, 0] == pytest.approx((n ** 2 + 2) / (12 * n), abs=1e-12)

    def test_four_ranks_in_rank_units(self):
        S = rank_covariance(compute_ranks(ObservationMatrix([1.0, 2.0, 3.0, 4.0])))
        assert S.rank_units[0, 0] == pytest.approx(0.375, abs=1e-12)
        assert S.ridge == 0.0
        assert not S.condition_flag

    def test_large_sample_tends_to_one_twelfth(self, gen):
        S = rank_covariance(compute_ranks(ObservationMatrix(gen.standard_normal(5000))))
        assert S.sigma[0, 0] == pytest.approx(1 / 12, abs=1e-6)

    def test_exactly_symmetric(self, gen):
        S = rank_covariance(compute_ranks(ObservationMatrix(gen.standard_normal((50, 4)))))
        assert np.max(np.abs(S.sigma - S.sigma.T)) == 0.0

    def test_diagonal_bounds(self, gen):
        S = rank_covariance(compute_ranks(ObservationMatrix(gen.standard_normal((2, 3)))))
        assert np.all(np.diag(S.sigma) > 0) and np.all(np.diag(S.sigma) <= 0.25)

    def test_identical_columns_trigger_ridge(self, gen):
        column = gen.standard_normal(40)
        S = rank_covariance(compute_ranks(ObservationMatrix(np.column_stack([column, column]))))
        assert S.condition_flag
        assert S.ridge > 0

    def test_constant_column_is_degenerate(self, gen):
        values = np.column_stack([gen.standard_normal(10), np.full(10, 3.0)])
        with pytest.raises(DegenerateCovariance, match="degenerate rank covariance"):
            rank_covariance(compute_ranks(ObservationMatrix(values)))

    def test_ridge_budget_caps_escalation(self, gen):
        column = gen.standard_normal(40)
        R = compute_ranks(ObservationMatrix(np.column_stack([column, column])))
        with pytest.raises(DegenerateCovariance):
            rank_covariance(R, max_ridge=1e-12)

    def test_whiten_matches_quadratic_form(self, gen):
        S = rank_covariance(compute_ranks(ObservationMatrix(gen.standard_normal((30, 3)))))
        v = gen.standard_normal(3)
        z = S.whiten(v)
        assert float(z @ z) == pytest.approx(float(v @ np.linalg.solve(S.sigma, v)), rel=1e-9)
        assert S.quadratic_form(v) == pytest.approx(float(z @ z), rel=1e-12)
