from dataclasses import dataclass
from typing import Sequence, Union

from dynmkw.core.statistic import Segmentation
from dynmkw.exceptions import ConfigError


@dataclass(frozen=True)
class EvalMetrics:
    precision: float
    recall: float
    tolerance: int
    matched: int = 0
    n_detected: int = 0


def precision_recall(
    est: Union[Segmentation, Sequence[int]], truth: Sequence[int], tol: int
) -> EvalMetrics:
    """Greedy one-to-one matching of detections to true changes within +-tol.

    Both lists are walked in increasing order; a detection matches the first
    unmatched true change within reach. No detections means precision 1.
    """
    if tol < 0:
        raise ConfigError(f"tolerance must be >= 0, got {tol}")
    detected = sorted(est.boundaries if isinstance(est, Segmentation) else est)
    actual = sorted(truth)
    used = [False] * len(actual)
    matched = 0
    for point in detected:
        for idx, change in enumerate(actual):
            if not used[idx] and abs(point - change) <= tol:
                used[idx] = True
                matched += 1
                break
    precision = matched / len(detected) if detected else 1.0
    recall = matched / len(actual) if actual else 1.0
    return EvalMetrics(
        precision=precision,
        recall=recall,
        tolerance=int(tol),
        matched=matched,
        n_detected=len(detected),
    )
