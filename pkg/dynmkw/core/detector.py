"""One entry point composing ranks, costs, the DP and model selection."""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

from dynmkw.core.baselines import CostKind, KernelCost, binseg_vost, build_cost
from dynmkw.core.dp import backtrack, solve
from dynmkw.core.ranks import ObservationMatrix, RankCovariance, compute_ranks, rank_covariance
from dynmkw.core.selection import SelectionResult, default_d_max, select_change_count
from dynmkw.core.statistic import (
    Segmentation,
    SegmentStatistic,
    fixed_boundary_pvalue,
    statistic_T,
)
from dynmkw.exceptions import ConfigError
from dynmkw.vars import Var

logger = logging.getLogger(__name__)

METHODS = ("dynmkw", "linear", "kernel", "binseg")
_VARIANTS = {"dynmkw": "rank_mkw", "linear": "linear_gaussian", "kernel": "kernel_gaussian"}


@dataclass(frozen=True)
class Detection:
    method: str
    segmentation: Segmentation
    curve: Tuple[float, ...] = ()
    selection: Optional[SelectionResult] = None
    statistic: Optional[SegmentStatistic] = None
    pvalue: Optional[float] = None
    ridge: Optional[float] = None
    condition_flag: bool = False
    bandwidth: Optional[float] = None

    @property
    def boundaries(self) -> Tuple[int, ...]:
        return self.segmentation.boundaries

    @property
    def k_hat(self) -> int:
        """Number of detected change-points."""
        return len(self.segmentation.boundaries)


def detect(
    X: ObservationMatrix,
    method: str = "dynmkw",
    n_segments: Optional[int] = None,
    max_segments: Optional[int] = None,
    min_seg_len: int = 1,
    alpha: float = Var.ALPHA,
    permutations: int = Var.PERMUTATIONS,
    seed: int = 0,
    memory_budget: Optional[int] = None,
    max_ridge: float = Var.MAX_RIDGE,
    bandwidth: Optional[float] = None,
    local_ranks: bool = True,
) -> Detection:
    """Segment X with `method`.

    With `n_segments` the DP runs at that fixed number of segments. Otherwise
    the zero-change gate decides first and the slope heuristic picks the count
    on the curve up to `max_segments` (default one more than the largest
    admissible number of change-points). `binseg` ignores both counts.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}, expected one of {METHODS}")
    if n_segments is not None and max_segments is not None:
        raise ConfigError("give either a fixed number of segments or a maximum, not both")

    if method == "binseg":
        seg = binseg_vost(X, alpha, permutations, min_seg_len, seed, local_ranks, max_ridge)
        logger.info("Binary segmentation found %d change-point(s)", len(seg.boundaries))
        return Detection(method=method, segmentation=seg)

    costs, S = build_cost(
        CostKind(_VARIANTS[method], bandwidth), X, min_seg_len, memory_budget, max_ridge, seed
    )
    used_bandwidth = costs.bandwidth if isinstance(costs, KernelCost) else None

    if n_segments is not None:
        table = solve(costs, n_segments, min_seg_len)
        seg = backtrack(table, n_segments)
        selection = None
    else:
        k_max = max_segments or default_d_max(X.n, min_seg_len) + 1
        table = solve(costs, k_max, min_seg_len)
        R = compute_ranks(X)
        gate_covariance: RankCovariance = S if S is not None else rank_covariance(R, max_ridge)
        selection = select_change_count(
            X, table, alpha, permutations, seed, ranks=R, covariance=gate_covariance
        )
        if selection.gated:
            seg = Segmentation(X.n, (), min_seg_len)
        else:
            seg = backtrack(table, selection.k_hat + 1)

    statistic = pvalue = None
    if S is not None:
        statistic = statistic_T(compute_ranks(X), S, seg)
        if statistic.df >= 1:
            pvalue = fixed_boundary_pvalue(statistic)

    return Detection(
        method=method,
        segmentation=seg,
        curve=tuple(float(v) for v in table.curve()),
        selection=selection,
        statistic=statistic,
        pvalue=pvalue,
        ridge=None if S is None else S.ridge,
        condition_flag=False if S is None else S.condition_flag,
        bandwidth=used_bandwidth,
    )
