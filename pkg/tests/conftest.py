import itertools

import numpy as np
import pytest

from dynmkw.core.ranks import ObservationMatrix


def step_matrix(levels, lengths, noise=0.0, seed=0) -> ObservationMatrix:
    """Piecewise-constant rows `levels[k]` repeated `lengths[k]` times, plus optional noise."""
    levels = np.atleast_2d(np.asarray(levels, dtype=float))
    if levels.shape[0] == 1 and len(lengths) > 1:
        levels = levels.T
    values = np.repeat(levels, lengths, axis=0)
    if noise:
        values = values + noise * np.random.default_rng(seed).standard_normal(values.shape)
    return ObservationMatrix(values)


def brute_force(costs, K: int, min_seg_len: int = 1):
    """All segmentations of 1..n into K segments, scored with costs.cost in segment order.

    Returns (best value, lexicographically first best boundaries, second best value).
    """
    n = costs.n
    scored = []
    for boundaries in itertools.combinations(range(1, n), K - 1):
        edges = (0,) + boundaries + (n,)
        if any(edges[k + 1] - edges[k] < min_seg_len for k in range(K)):
            continue
        total = 0.0
        for k in range(K):
            total += costs.cost(edges[k] + 1, edges[k + 1])
        scored.append((total, boundaries))
    best = max(value for value, _ in scored)
    first = next(b for value, b in scored if value == best)
    others = [value for value, b in scored if b != first]
    return best, first, max(others) if others else -np.inf


@pytest.fixture
def gen():
    return np.random.default_rng(20240229)


@pytest.fixture
def two_step():
    """Noiseless 1-D signal 0/1/0 with segments of length 10."""
    return step_matrix([[0.0], [1.0], [0.0]], [10, 10, 10])
