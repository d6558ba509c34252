"""Exact dynamic-programming maximization of additive segment gains.

I_K(p) = max over n_{K-1} of I_{K-1}(n_{K-1}) + gain(n_{K-1}+1 : p), for every K
up to K_max, in O(K_max * n^2) time. Gains come from a `SegmentCost`, which is
either computed on demand from prefix sums or read from a materialized
(n+1) x (n+1) table; both paths evaluate the same elementwise arithmetic.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from dynmkw.core.ranks import RankCovariance, RankTable
from dynmkw.core.statistic import Segmentation, WhitenedRanks
from dynmkw.exceptions import InfeasibleSegmentation, InvalidSegmentation
from dynmkw.vars import Var

logger = logging.getLogger(__name__)

# working-set size of one block of DP rows
BLOCK_BYTES = 32 * 1024 ** 2


class SegmentCost:
    """Gain of the segment holding prefix positions (s, e], i.e. rows s+1..e."""

    name = "segment"

    def __init__(self, n: int, min_seg_len: int = 1):
        self.n = int(n)
        self.min_seg_len = int(min_seg_len)

    @property
    def width(self) -> int:
        """Scratch floats per (start, end) pair while computing a block."""
        return 1

    def pair(self, starts, ends) -> np.ndarray:
        raise NotImplementedError

    def block(self, ends: np.ndarray) -> np.ndarray:
        """len(ends) x (n+1) gains for every start position; -inf when empty."""
        ends = np.asarray(ends)
        return self.pair(np.arange(self.n + 1)[None, :], ends[:, None])

    def cost(self, i: int, j: int) -> float:
        """Gain of rows i..j (1-based, inclusive)."""
        if not 1 <= i <= j <= self.n:
            raise InvalidSegmentation(f"rows {i}..{j} are not a segment of 1..{self.n}")
        return float(self.pair(np.array([i - 1]), np.array([j]))[0])

    def table_bytes(self) -> int:
        return (self.n + 1) ** 2 * 8


class RankCost(SegmentCost):
    """Multivariate Kruskal-Wallis segment cost Delta(i:j)."""

    name = "rank_mkw"

    def __init__(self, geometry: WhitenedRanks, min_seg_len: int = 1):
        super().__init__(geometry.n, min_seg_len)
        self.geometry = geometry

    @property
    def width(self) -> int:
        return self.geometry.L + 2

    def pair(self, starts, ends) -> np.ndarray:
        return self.geometry.gains(starts, ends)


class MaterializedCost(SegmentCost):
    def __init__(self, base: SegmentCost):
        super().__init__(base.n, base.min_seg_len)
        self.base = base
        self.name = base.name
        table = np.empty((self.n + 1, self.n + 1))
        for ends in _blocks(self.n, base.width):
            table[ends] = base.block(ends)
        table.setflags(write=False)
        self.table = table

    def pair(self, starts, ends) -> np.ndarray:
        return self.table[np.asarray(ends), np.asarray(starts)]

    def block(self, ends: np.ndarray) -> np.ndarray:
        return self.table[np.asarray(ends)]


def _blocks(n: int, width: int):
    size = max(1, int(BLOCK_BYTES // (8 * (n + 1) * max(width, 1))))
    for lo in range(0, n + 1, size):
        yield np.arange(lo, min(lo + size, n + 1))


def materialize_if_fits(costs: SegmentCost, memory_budget: Optional[int] = None) -> SegmentCost:
    budget = Var.MEMORY_BUDGET if memory_budget is None else memory_budget
    needed = costs.table_bytes()
    if needed <= budget:
        logger.debug("Materializing %s gains: %.1f MiB", costs.name, needed / 1024 ** 2)
        return MaterializedCost(costs)
    logger.debug(
        "Computing %s gains on demand: table would need %.1f MiB, budget %.1f MiB",
        costs.name,
        needed / 1024 ** 2,
        budget / 1024 ** 2,
    )
    return costs


def precompute_costs(
    R: RankTable,
    S: RankCovariance,
    min_seg_len: int = 1,
    memory_budget: Optional[int] = None,
) -> SegmentCost:
    """Rank cost provider; peak extra memory is (n+1)^2 * 8 bytes when materialized."""
    return materialize_if_fits(RankCost(WhitenedRanks.from_table(R, S), min_seg_len), memory_budget)


@dataclass(frozen=True)
class DpTable:
    n: int
    k_max: int
    min_seg_len: int
    values: np.ndarray
    back: np.ndarray

    def value(self, K: int) -> float:
        self._check(K)
        return float(self.values[K - 1, self.n])

    def curve(self) -> np.ndarray:
        """I_K(n) for K = 1..K_max."""
        return self.values[:, self.n].copy()

    def _check(self, K: int):
        if not 1 <= K <= self.k_max:
            raise InvalidSegmentation(f"K={K} outside 1..{self.k_max}")


def solve(costs: SegmentCost, k_max: int, min_seg_len: Optional[int] = None) -> DpTable:
    n = costs.n
    m = costs.min_seg_len if min_seg_len is None else int(min_seg_len)
    if k_max < 1 or m < 1:
        raise InfeasibleSegmentation(f"need K_max >= 1 and min_seg_len >= 1, got {k_max}, {m}")
    if n < k_max * m:
        raise InfeasibleSegmentation(
            f"n={n} is shorter than K_max * min_seg_len = {k_max} * {m}"
        )

    values = np.full((k_max, n + 1), -np.inf)
    back = np.zeros((k_max, n + 1), dtype=np.int64)
    empty = np.full(n + 1, -np.inf)
    empty[0] = 0.0
    starts = np.arange(n + 1)

    for ends in _blocks(n, costs.width):
        gains = costs.block(ends)
        gains = np.where(ends[:, None] - starts[None, :] >= m, gains, -np.inf)
        rows = np.arange(len(ends))
        for k in range(k_max):
            previous = empty if k == 0 else values[k - 1]
            candidates = previous[None, :] + gains
            best = np.argmax(candidates, axis=1)
            values[k, ends] = candidates[rows, best]
            back[k, ends] = best

    values.setflags(write=False)
    back.setflags(write=False)
    return DpTable(n=n, k_max=k_max, min_seg_len=m, values=values, back=back)


def backtrack(table: DpTable, K: int) -> Segmentation:
    table._check(K)
    if not np.isfinite(table.values[K - 1, table.n]):
        raise InfeasibleSegmentation(f"no admissible segmentation with K={K}")
    boundaries = []
    position = table.n
    for k in range(K - 1, 0, -1):
        position = int(table.back[k, position])
        boundaries.append(position)
    return Segmentation(table.n, tuple(reversed(boundaries)), table.min_seg_len)
