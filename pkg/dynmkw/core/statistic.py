"""Multivariate Kruskal-Wallis statistic, segment costs and significance."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaincc

from dynmkw.core.ranks import (
    ObservationMatrix,
    RankCovariance,
    RankTable,
    compute_ranks,
    rank_covariance,
)
from dynmkw.exceptions import (
    ConfigError,
    InvalidSegmentation,
    SeriesTooShort,
    UndefinedTest,
)
from dynmkw.utils import rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segmentation:
    """Change-points n_1 < ... < n_{K-1}; n_k is the last row of segment k."""

    n: int
    boundaries: Tuple[int, ...] = ()
    min_seg_len: int = 1

    def __post_init__(self):
        boundaries = tuple(int(b) for b in self.boundaries)
        object.__setattr__(self, "boundaries", boundaries)
        if self.min_seg_len < 1:
            raise InvalidSegmentation(f"min_seg_len must be >= 1, got {self.min_seg_len}")
        edges = self.edges()
        lengths = np.diff(edges)
        if np.any(lengths < 1):
            raise InvalidSegmentation(
                f"boundaries {boundaries} are not strictly increasing inside [1, {self.n})"
            )
        if np.any(lengths < self.min_seg_len):
            raise InvalidSegmentation(
                f"boundaries {boundaries} leave a segment shorter than {self.min_seg_len}"
            )

    @property
    def K(self) -> int:
        return len(self.boundaries) + 1

    def edges(self) -> Tuple[int, ...]:
        # n_0 = 0 so that segment 1 covers rows 1..n_1
        return (0,) + self.boundaries + (self.n,)

    def segments(self) -> List[Tuple[int, int]]:
        """1-based inclusive (first, last) row of every segment."""
        edges = self.edges()
        return [(edges[k] + 1, edges[k + 1]) for k in range(self.K)]


@dataclass(frozen=True)
class SegmentStatistic:
    value: float
    df: int
    per_segment_costs: Tuple[float, ...]


class WhitenedRanks:
    """Prefix sums of ranks whitened by the rank covariance factor.

    With W = prefix sums of L^{-1} R_j and c = L^{-1} center, the cost of the
    segment holding prefix positions (s, e] is ||W_e - W_s - m c||^2 / m with
    m = e - s, i.e. m * v' Sigma^{-1} v for the centered mean-rank vector v.
    """

    def __init__(
        self,
        ranks: np.ndarray,
        covariance: RankCovariance,
        center: Optional[np.ndarray] = None,
        norm: Optional[int] = None,
    ):
        ranks = np.asarray(ranks, dtype=float)
        self.n, self.L = ranks.shape
        self.norm = int(norm or self.n)
        if center is None:
            center = np.full(self.L, self.n / 2.0)
        self.covariance = covariance
        self.rows = covariance.whiten(ranks)
        self.center = covariance.whiten(np.asarray(center, dtype=float))
        self.prefix = self._prefix(self.rows)

    @staticmethod
    def _prefix(rows: np.ndarray) -> np.ndarray:
        prefix = np.zeros((rows.shape[0] + 1, rows.shape[1]))
        np.cumsum(rows, axis=0, out=prefix[1:])
        return prefix

    @classmethod
    def from_table(cls, R: RankTable, S: RankCovariance) -> "WhitenedRanks":
        return cls(R.ranks, S)

    def permuted(self, order: np.ndarray) -> "WhitenedRanks":
        clone = object.__new__(WhitenedRanks)
        clone.n, clone.L, clone.norm = self.n, self.L, self.norm
        clone.covariance = self.covariance
        clone.rows = self.rows[order]
        clone.center = self.center
        clone.prefix = self._prefix(clone.rows)
        return clone

    def gains(self, starts, ends, min_len: int = 1) -> np.ndarray:
        """Segment costs for prefix positions (starts, ends], broadcast elementwise.

        Pairs shorter than `min_len` come back as -inf.
        """
        starts = np.asarray(starts)
        ends = np.asarray(ends)
        length = ends - starts
        valid = length >= max(min_len, 1)
        m = np.where(valid, length, 1).astype(float)
        diff = self.prefix[ends] - self.prefix[starts] - m[..., None] * self.center
        acc = diff[..., 0] * diff[..., 0]
        for col in range(1, self.L):
            acc = acc + diff[..., col] * diff[..., col]
        return np.where(valid, acc / m, -np.inf)

    def split_statistics(self, min_seg_len: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """Candidate n_1 values and T(n_1) for every admissible single split."""
        if self.n < 2 * min_seg_len:
            raise SeriesTooShort(
                f"n={self.n} cannot hold two segments of min_seg_len={min_seg_len}"
            )
        candidates = np.arange(min_seg_len, self.n - min_seg_len + 1)
        left = self.gains(np.zeros_like(candidates), candidates)
        right = self.gains(candidates, np.full_like(candidates, self.n))
        return candidates, (left + right) / float(self.norm) ** 2

    def scan(self, min_seg_len: int = 1) -> Tuple[int, float]:
        candidates, values = self.split_statistics(min_seg_len)
        best = int(np.argmax(values))
        return int(candidates[best]), float(values[best])


def _check_range(n: int, i: int, j: int):
    if not 1 <= i <= j <= n:
        raise InvalidSegmentation(f"rows {i}..{j} are not a segment of 1..{n}")


def mean_rank_vector(R: RankTable, i: int, j: int) -> np.ndarray:
    """Mean rank over rows i..j (1-based, inclusive) minus n/2."""
    _check_range(R.n, i, j)
    return (R.prefix[j] - R.prefix[i - 1]) / (j - i + 1) - R.n / 2.0


def segment_cost(R: RankTable, S: RankCovariance, i: int, j: int) -> float:
    v = mean_rank_vector(R, i, j)
    return (j - i + 1) * S.quadratic_form(v)


def statistic_T(R: RankTable, S: RankCovariance, seg: Segmentation) -> SegmentStatistic:
    if seg.n != R.n:
        raise InvalidSegmentation(f"segmentation of length {seg.n} for {R.n} observations")
    costs = tuple(segment_cost(R, S, first, last) for first, last in seg.segments())
    total = 0.0
    for cost in costs:
        total += cost
    return SegmentStatistic(
        value=total / float(R.n) ** 2, df=(seg.K - 1) * R.L, per_segment_costs=costs
    )


def kruskal_wallis_univariate(R: RankTable, seg: Segmentation) -> np.ndarray:
    """Classical per-coordinate Kruskal-Wallis form with Sigma_11 replaced by 1/12."""
    out = np.zeros(R.L)
    for first, last in seg.segments():
        out += (last - first + 1) * mean_rank_vector(R, first, last) ** 2
    return 12.0 * out / float(R.n) ** 2


def fixed_boundary_pvalue(stat: SegmentStatistic) -> float:
    """Upper tail of chi2(df) at T."""
    if stat.df < 1:
        raise UndefinedTest()
    return float(gammaincc(stat.df / 2.0, max(stat.value, 0.0) / 2.0))


def max_single_cp_scan(R: RankTable, S: RankCovariance, min_seg_len: int = 1) -> Tuple[int, float]:
    """Best single change-point (smallest index on ties) and its statistic."""
    return WhitenedRanks.from_table(R, S).scan(min_seg_len)


def permutation_count(
    geometry: WhitenedRanks,
    T_max: float,
    B: int,
    seed: int,
    key: Sequence[int] = (),
    min_seg_len: int = 1,
    alpha: Optional[float] = None,
) -> int:
    """Number of row permutations whose max scan statistic reaches T_max.

    With `alpha`, counting stops as soon as (1 + hits) / (B + 1) exceeds it; the
    significance decision is unchanged but the count is then only a lower bound.
    """
    if B < 1:
        raise ConfigError(f"permutation count must be >= 1, got {B}")
    hits = 0
    for b in range(B):
        order = rng.stream(seed, rng.PERMUTATION, *key, b).permutation(geometry.n)
        _, values = geometry.permuted(order).split_statistics(min_seg_len)
        if values.max() >= T_max:
            hits += 1
            if alpha is not None and (1 + hits) / (B + 1) > alpha:
                break
    return hits


def permutation_pvalue(
    X: ObservationMatrix,
    T_max: float,
    B: int,
    seed: int,
    min_seg_len: int = 1,
    ranks: Optional[RankTable] = None,
    covariance: Optional[RankCovariance] = None,
) -> float:
    """Monte-Carlo permutation p-value of the max single change-point statistic.

    Whole rows are permuted, which keeps the dependence between coordinates.
    The rank covariance does not change under row permutations and is reused.
    """
    R = ranks if ranks is not None else compute_ranks(X)
    S = covariance if covariance is not None else rank_covariance(R)
    hits = permutation_count(WhitenedRanks.from_table(R, S), T_max, B, seed, (), min_seg_len)
    pvalue = (1 + hits) / (B + 1)
    logger.debug("Permutation test: T_max=%.4g, %d/%d exceedances, p=%.4g", T_max, hits, B, pvalue)
    return pvalue
