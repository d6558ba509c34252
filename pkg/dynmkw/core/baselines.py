"""Comparison methods: Gaussian least squares, Gaussian-kernel scatter, binary segmentation."""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

from dynmkw.core.dp import RankCost, SegmentCost, materialize_if_fits
from dynmkw.core.ranks import (
    RIDGE_SCHEDULE,
    ObservationMatrix,
    RankCovariance,
    compute_ranks,
    rank_covariance,
)
from dynmkw.core.statistic import Segmentation, WhitenedRanks, permutation_count
from dynmkw.exceptions import ConfigError, DegenerateCovariance, InvalidSegmentation
from dynmkw.utils import rng
from dynmkw.vars import Var

logger = logging.getLogger(__name__)

VARIANTS = ("rank_mkw", "linear_gaussian", "kernel_gaussian")
# rows used by the median heuristic
BANDWIDTH_SAMPLE = 500


@dataclass(frozen=True)
class CostKind:
    variant: str = "rank_mkw"
    bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown cost variant {self.variant!r}, expected one of {VARIANTS}")
        if self.variant == "kernel_gaussian" and self.bandwidth is not None:
            if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
                raise ConfigError(f"kernel bandwidth must be finite and > 0, got {self.bandwidth}")


class LinearCost(SegmentCost):
    """Least-squares gain m * ||mean(X_seg)||^2 from prefix sums of X and ||X||^2."""

    name = "linear_gaussian"

    def __init__(self, X: ObservationMatrix, min_seg_len: int = 1):
        super().__init__(X.n, min_seg_len)
        self.L = X.L
        self.prefix = np.zeros((X.n + 1, X.L))
        np.cumsum(X.values, axis=0, out=self.prefix[1:])
        self.square_prefix = np.zeros(X.n + 1)
        np.cumsum(np.sum(X.values ** 2, axis=1), out=self.square_prefix[1:])

    @property
    def width(self) -> int:
        return self.L + 2

    def pair(self, starts, ends) -> np.ndarray:
        starts = np.asarray(starts)
        ends = np.asarray(ends)
        length = ends - starts
        valid = length >= 1
        m = np.where(valid, length, 1).astype(float)
        diff = self.prefix[ends] - self.prefix[starts]
        acc = diff[..., 0] * diff[..., 0]
        for col in range(1, self.L):
            acc = acc + diff[..., col] * diff[..., col]
        return np.where(valid, acc / m, -np.inf)

    def within_sse(self, i: int, j: int) -> float:
        """Sum of squared deviations from the segment mean over rows i..j."""
        return float(self.square_prefix[j] - self.square_prefix[i - 1]) - self.cost(i, j)


class KernelCost(SegmentCost):
    """Gaussian-kernel gain (1/m) sum_{s,t in seg} k(X_s, X_t).

    Keeps the (n+1) x (n+1) double prefix sum of the Gram matrix, so every
    segment costs O(1).
    """

    name = "kernel_gaussian"

    def __init__(
        self,
        X: ObservationMatrix,
        bandwidth: float,
        min_seg_len: int = 1,
        memory_budget: Optional[int] = None,
    ):
        super().__init__(X.n, min_seg_len)
        budget = Var.MEMORY_BUDGET if memory_budget is None else memory_budget
        if 2 * self.table_bytes() > budget:
            raise ConfigError(
                f"kernel cost for n={X.n} needs {2 * self.table_bytes() / 1024 ** 2:.0f} MiB, "
                f"over the memory budget of {budget / 1024 ** 2:.0f} MiB"
            )
        self.bandwidth = float(bandwidth)
        gram = np.exp(-cdist(X.values, X.values, "sqeuclidean") / (2.0 * self.bandwidth ** 2))
        self.prefix = np.zeros((X.n + 1, X.n + 1))
        self.prefix[1:, 1:] = gram.cumsum(axis=0).cumsum(axis=1)

    @property
    def width(self) -> int:
        return 6

    def pair(self, starts, ends) -> np.ndarray:
        starts = np.asarray(starts)
        ends = np.asarray(ends)
        length = ends - starts
        valid = length >= 1
        m = np.where(valid, length, 1).astype(float)
        q = self.prefix
        inner = q[ends, ends] - q[starts, ends] - q[ends, starts] + q[starts, starts]
        return np.where(valid, inner / m, -np.inf)

    def table_bytes(self) -> int:
        return (self.n + 1) ** 2 * 8


def linear_cost(X: ObservationMatrix, i: int, j: int) -> float:
    return LinearCost(X).cost(i, j)


def kernel_cost(X: ObservationMatrix, i: int, j: int, bandwidth: float) -> float:
    if not 1 <= i <= j <= X.n:
        raise InvalidSegmentation(f"rows {i}..{j} are not a segment of 1..{X.n}")
    rows = X.values[i - 1 : j]
    gram = np.exp(-cdist(rows, rows, "sqeuclidean") / (2.0 * float(bandwidth) ** 2))
    return float(gram.sum() / (j - i + 1))


def median_bandwidth(X: ObservationMatrix, seed: int = 0) -> float:
    """Median pairwise distance over a seeded subsample of at most 500 rows."""
    rows = X.values
    if X.n > BANDWIDTH_SAMPLE:
        picked = rng.stream(seed, rng.BANDWIDTH).choice(X.n, BANDWIDTH_SAMPLE, replace=False)
        rows = rows[np.sort(picked)]
    distances = pdist(rows)
    positive = distances[distances > 0]
    if not positive.size:
        logger.warning("All sampled rows coincide; falling back to kernel bandwidth 1.0")
        return 1.0
    median = float(np.median(distances))
    return median if median > 0 else float(np.median(positive))


def build_cost(
    kind: CostKind,
    X: ObservationMatrix,
    min_seg_len: int = 1,
    memory_budget: Optional[int] = None,
    max_ridge: float = RIDGE_SCHEDULE[-1],
    seed: int = 0,
) -> Tuple[SegmentCost, Optional[RankCovariance]]:
    """Cost provider for a variant, plus the rank covariance when one was built."""
    if kind.variant == "rank_mkw":
        R = compute_ranks(X)
        S = rank_covariance(R, max_ridge)
        costs = RankCost(WhitenedRanks.from_table(R, S), min_seg_len)
        return materialize_if_fits(costs, memory_budget), S
    if kind.variant == "linear_gaussian":
        return materialize_if_fits(LinearCost(X, min_seg_len), memory_budget), None
    bandwidth = kind.bandwidth if kind.bandwidth is not None else median_bandwidth(X, seed)
    logger.debug("Kernel bandwidth %.4g", bandwidth)
    return KernelCost(X, bandwidth, min_seg_len, memory_budget), None


class _SegmentTester:
    """Single change-point test restricted to rows [start, stop)."""

    def __init__(self, X: ObservationMatrix, local_ranks: bool, max_ridge: float):
        self.X = X
        self.local_ranks = local_ranks
        self.max_ridge = max_ridge
        if not local_ranks:
            self.R = compute_ranks(X)
            self.S = rank_covariance(self.R, max_ridge)

    def geometry(self, start: int, stop: int) -> Optional[WhitenedRanks]:
        if not self.local_ranks:
            ranks = self.R.ranks[start:stop]
            return WhitenedRanks(ranks, self.S, center=ranks.mean(axis=0), norm=self.R.n)
        values = self.X.values[start:stop]
        varying = np.ptp(values, axis=0) > 0
        if not varying.any():
            return None
        R = compute_ranks(ObservationMatrix(values[:, varying]))
        try:
            S = rank_covariance(R, self.max_ridge)
        except DegenerateCovariance as err:
            logger.debug("Rows %d..%d not tested: %s", start + 1, stop, err)
            return None
        return WhitenedRanks.from_table(R, S)


def binseg_vost(
    X: ObservationMatrix,
    alpha: float,
    B: int,
    min_seg_len: int = 1,
    seed: int = 0,
    local_ranks: bool = True,
    max_ridge: float = RIDGE_SCHEDULE[-1],
) -> Segmentation:
    """Greedy binary segmentation with the permutation single change-point test.

    Each sub-segment draws its permutations from a stream keyed by its bounds,
    so the result does not depend on the order in which segments are visited.
    """
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must lie in [0, 1), got {alpha}")
    tester = _SegmentTester(X, local_ranks, max_ridge)
    boundaries = []
    pending = deque([(0, X.n)])
    while pending:
        start, stop = pending.pop()
        if stop - start < 2 * min_seg_len:
            continue
        geometry = tester.geometry(start, stop)
        if geometry is None:
            continue
        offset, t_max = geometry.scan(min_seg_len)
        hits = permutation_count(geometry, t_max, B, seed, (start, stop), min_seg_len, alpha)
        pvalue = (1 + hits) / (B + 1)
        if pvalue > alpha:
            continue
        cut = start + offset
        logger.debug(
            "Split rows %d..%d at %d (T=%.4g, p=%.4g)", start + 1, stop, cut, t_max, pvalue
        )
        boundaries.append(cut)
        pending.append((cut, stop))
        pending.append((start, cut))
    return Segmentation(X.n, tuple(sorted(boundaries)), min_seg_len)
