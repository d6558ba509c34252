# This file is a part of dynMKW

from .ranks import ObservationMatrix, RankTable, RankCovariance, compute_ranks, rank_covariance
from .statistic import (
    Segmentation,
    SegmentStatistic,
    mean_rank_vector,
    segment_cost,
    statistic_T,
    kruskal_wallis_univariate,
    fixed_boundary_pvalue,
    max_single_cp_scan,
    permutation_pvalue,
)
from .dp import DpTable, precompute_costs, solve, backtrack
from .selection import SelectionResult, select_k, zero_gate, select_change_count
from .baselines import CostKind, linear_cost, kernel_cost, binseg_vost
from .detector import Detection, detect
