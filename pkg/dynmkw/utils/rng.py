"""Counter-based random streams.

Every random draw in the package comes from a generator keyed by the user seed
plus a tuple of non-negative integers (purpose, replicate, segment bounds, ...),
so results never depend on the order in which work is scheduled.
"""

import numpy as np

SIGNAL = 0
OUTLIERS = 1
PERMUTATION = 2
BINSEG = 3
BANDWIDTH = 4
GATE = 5


def stream(seed: int, *key: int) -> np.random.Generator:
    spawn_key = tuple(int(k) for k in key)
    if any(k < 0 for k in spawn_key):
        raise ValueError(f"stream keys must be non-negative, got {spawn_key}")
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))
