"""Number of change-points from the I_K(n) curve: zero gate, then the two-line kink fit."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from dynmkw.core.dp import DpTable
from dynmkw.core.ranks import (
    ObservationMatrix,
    RankCovariance,
    RankTable,
    compute_ranks,
    rank_covariance,
)
from dynmkw.core.statistic import max_single_cp_scan, permutation_pvalue
from dynmkw.exceptions import ConfigError, SelectionError

logger = logging.getLogger(__name__)

# relative tolerance (times the curve's total sum of squares) for RSS ties
TIE_TOLERANCE = 1e-12
D_MAX_CAP = 20


@dataclass(frozen=True)
class KinkFit:
    k_hat: int
    rss: Tuple[float, ...]
    low_confidence: bool


@dataclass(frozen=True)
class SelectionResult:
    """`rss_curve[c]` is the two-line RSS with the kink at c + 1 change-points."""

    k_hat: int
    rss_curve: Tuple[float, ...] = ()
    gate_pvalue: Optional[float] = None
    gated: bool = False
    low_confidence: bool = False
    curve: Tuple[float, ...] = field(default=(), repr=False)


def default_d_max(n: int, min_seg_len: int = 1) -> int:
    return min(D_MAX_CAP, n // (2 * min_seg_len))


def _line_rss(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    slope = np.dot(xc, yc) / np.dot(xc, xc)
    residual = yc - slope * xc
    return float(np.dot(residual, residual))


def select_k(curve: Sequence[float]) -> KinkFit:
    """Kink of the curve I_{D+1}(n), D = 0..D_max, by two least-squares lines.

    The candidate point belongs to both fits, so each side holds at least two
    points and candidates run over D = 1..D_max-1.
    """
    y = np.asarray(curve, dtype=float)
    if y.ndim != 1 or y.size < 4:
        raise SelectionError(f"need at least 4 curve points (D_max >= 3), got {y.size}")
    if not np.all(np.isfinite(y)):
        raise SelectionError("curve holds non-finite values")
    x = np.arange(y.size, dtype=float)
    rss = np.array(
        [_line_rss(x[: k + 1], y[: k + 1]) + _line_rss(x[k:], y[k:]) for k in range(1, y.size - 1)]
    )
    total = float(np.sum((y - y.mean()) ** 2))
    tolerance = TIE_TOLERANCE * max(1.0, total)
    k_hat = int(np.flatnonzero(rss <= rss.min() + tolerance)[0]) + 1
    low_confidence = bool(rss.max() - rss.min() <= tolerance)
    return KinkFit(k_hat=k_hat, rss=tuple(float(v) for v in rss), low_confidence=low_confidence)


def zero_gate(
    X: ObservationMatrix,
    R: RankTable,
    S: RankCovariance,
    alpha: float,
    B: int,
    seed: int,
    min_seg_len: int = 1,
) -> Tuple[bool, float]:
    """Permutation test of 'no change at all' on the best single split."""
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must lie in [0, 1), got {alpha}")
    _, t_max = max_single_cp_scan(R, S, min_seg_len)
    pvalue = permutation_pvalue(X, t_max, B, seed, min_seg_len, ranks=R, covariance=S)
    return bool(pvalue <= alpha), float(pvalue)


def select_change_count(
    X: ObservationMatrix,
    table: DpTable,
    alpha: float,
    B: int,
    seed: int,
    ranks: Optional[RankTable] = None,
    covariance: Optional[RankCovariance] = None,
) -> SelectionResult:
    R = ranks if ranks is not None else compute_ranks(X)
    S = covariance if covariance is not None else rank_covariance(R)
    significant, pvalue = zero_gate(X, R, S, alpha, B, seed, table.min_seg_len)
    if not significant:
        logger.info("No significant change (gate p=%.4g > alpha=%g)", pvalue, alpha)
        return SelectionResult(k_hat=0, gate_pvalue=pvalue, gated=True)
    curve = table.curve()
    fit = select_k(curve)
    logger.info(
        "Gate p=%.4g; slope heuristic picked %d change-point(s)%s",
        pvalue,
        fit.k_hat,
        " (low confidence)" if fit.low_confidence else "",
    )
    return SelectionResult(
        k_hat=fit.k_hat,
        rss_curve=fit.rss,
        gate_pvalue=pvalue,
        gated=False,
        low_confidence=fit.low_confidence,
        curve=tuple(float(v) for v in curve),
    )
