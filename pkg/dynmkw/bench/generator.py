"""Synthetic piecewise-constant signals with correlated Gaussian noise and outliers."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from dynmkw.core.ranks import ObservationMatrix
from dynmkw.exceptions import ConfigError
from dynmkw.utils import rng

logger = logging.getLogger(__name__)

DEFAULT_BOUNDARIES = (100, 200, 300, 400)
# every boundary moves 2 or 3 of the 5 coordinates and leaves the rest alone
DEFAULT_LEVELS = (
    (0.0, 0.0, 0.0, 0.0, 0.0),
    (1.0, 1.0, 0.0, 0.0, 0.0),
    (1.0, 0.0, 1.0, 1.0, 0.0),
    (0.0, 0.0, 1.0, 0.0, 1.0),
    (0.0, 1.0, 1.0, 0.0, 0.0),
)
SNR_CONVENTIONS = ("amplitude", "power")

_SCENARIO_FIELDS = {
    "SIM_N": "n",
    "SIM_L": "L",
    "SIM_BOUNDARIES": "boundaries",
    "SIM_OUTLIER_RATE": "outlier_rate",
    "SIM_OUTLIER_EXCESS_DB": "outlier_excess_db",
    "SIM_CORRELATION": "correlation",
    "SIM_REPLICATIONS": "replications",
    "SIM_SEED": "seed",
    "SIM_SNR_CONVENTION": "snr_convention",
}


def default_levels(segments: int, L: int) -> Tuple[Tuple[float, ...], ...]:
    """0/1 levels where boundary k flips coordinates k-1 and k (mod L)."""
    if (segments, L) == (len(DEFAULT_LEVELS), len(DEFAULT_LEVELS[0])):
        return DEFAULT_LEVELS
    levels = [np.zeros(L)]
    for k in range(1, segments):
        nxt = levels[-1].copy()
        flipped = {(k - 1) % L} if L < 3 else {(k - 1) % L, k % L}
        for col in flipped:
            nxt[col] = 1.0 - nxt[col]
        levels.append(nxt)
    return tuple(tuple(float(v) for v in row) for row in levels)


@dataclass(frozen=True)
class SimConfig:
    n: int = 500
    L: int = 5
    boundaries: Tuple[int, ...] = DEFAULT_BOUNDARIES
    levels: Optional[Tuple[Tuple[float, ...], ...]] = None
    snr_db: float = 16.0
    correlation: float = 0.3
    outlier_rate: float = 0.0
    outlier_excess_db: float = 10.0
    replications: int = 100
    seed: int = 0
    snr_convention: str = "amplitude"
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(int(b) for b in self.boundaries))
        edges = np.diff((0,) + self.boundaries + (self.n,))
        if self.L < 1 or np.any(edges < 1):
            raise ConfigError(
                f"boundaries {self.boundaries} must increase strictly inside (0, {self.n}), L >= 1"
            )
        if self.levels is None:
            object.__setattr__(self, "levels", default_levels(len(self.boundaries) + 1, self.L))
        levels = np.asarray(self.levels, dtype=float)
        if levels.shape != (len(self.boundaries) + 1, self.L):
            raise ConfigError(
                f"levels must be {len(self.boundaries) + 1} x {self.L}, got {levels.shape}"
            )
        moved = levels[1:] != levels[:-1]
        if not np.all(moved.any(axis=1)):
            raise ConfigError("every boundary must move at least one coordinate")
        if self.L > 1 and not np.all((~moved).any(axis=1)):
            raise ConfigError("every boundary must leave at least one coordinate unchanged")
        if not 0.0 <= self.outlier_rate < 1.0:
            raise ConfigError(f"outlier rate must lie in [0, 1), got {self.outlier_rate}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if self.snr_convention not in SNR_CONVENTIONS:
            raise ConfigError(f"SNR convention must be one of {SNR_CONVENTIONS}")

    @classmethod
    def from_scenario(cls, values: Dict[str, object], **overrides) -> "SimConfig":
        """Build from parsed `SIM_*` keys; SIM_SNR_GRID is left to the caller."""
        fields = {_SCENARIO_FIELDS[k]: v for k, v in values.items() if k in _SCENARIO_FIELDS}
        fields.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**fields)

    def at_snr(self, snr_db: float, outlier_rate: Optional[float] = None) -> "SimConfig":
        rate = self.outlier_rate if outlier_rate is None else outlier_rate
        return replace(self, snr_db=float(snr_db), outlier_rate=rate)

    def noise_sigma(self) -> float:
        if math.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        divisor = 20.0 if self.snr_convention == "amplitude" else 10.0
        return self.amplitude / 10 ** (self.snr_db / divisor)

    def noise_correlation(self) -> np.ndarray:
        corr = np.full((self.L, self.L), float(self.correlation))
        np.fill_diagonal(corr, 1.0)
        return corr


def baseline(cfg: SimConfig) -> np.ndarray:
    lengths = np.diff((0,) + cfg.boundaries + (cfg.n,))
    return np.repeat(np.asarray(cfg.levels, dtype=float) * cfg.amplitude, lengths, axis=0)


def _noise_factor(correlation: np.ndarray) -> np.ndarray:
    eigenvalues, vectors = np.linalg.eigh(correlation)
    if eigenvalues.min() < -1e-12 * max(1.0, abs(eigenvalues).max()):
        raise ConfigError(
            f"noise correlation is not positive semi-definite (eigenvalue {eigenvalues.min():.3g})"
        )
    return vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def generate_signal(cfg: SimConfig, replicate: int) -> Tuple[ObservationMatrix, Tuple[int, ...]]:
    """Baseline plus sigma-scaled correlated noise, without outliers.

    The standard noise draw only depends on (seed, replicate), so one replicate
    seen at several SNRs differs by the noise scale alone.
    """
    factor = _noise_factor(cfg.noise_correlation())
    standard = rng.stream(cfg.seed, rng.SIGNAL, replicate).standard_normal((cfg.n, cfg.L))
    values = baseline(cfg) + cfg.noise_sigma() * (standard @ factor.T)
    return ObservationMatrix(values), cfg.boundaries


def inject_outliers(
    X: ObservationMatrix,
    rate: float,
    excess_db: float,
    seed: int,
    sigma: float,
    replicate: int = 0,
) -> ObservationMatrix:
    """Add N(0, sigma^2 * 10^(excess_db/10)) noise to ceil(rate * n) uniformly chosen rows."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"outlier rate must lie in [0, 1), got {rate}")
    count = math.ceil(rate * X.n - 1e-9)
    if count == 0:
        return X
    generator = rng.stream(seed, rng.OUTLIERS, replicate)
    rows = generator.choice(X.n, count, replace=False)
    scale = sigma * math.sqrt(10 ** (excess_db / 10.0))
    values = np.array(X.values)
    values[rows] += scale * generator.standard_normal((count, X.L))
    return ObservationMatrix(values, X.labels)


def replicate_signal(cfg: SimConfig, replicate: int) -> Tuple[ObservationMatrix, Tuple[int, ...]]:
    X, truth = generate_signal(cfg, replicate)
    if cfg.outlier_rate > 0:
        X = inject_outliers(
            X, cfg.outlier_rate, cfg.outlier_excess_db, cfg.seed, cfg.noise_sigma(), replicate
        )
    return X, truth


def snr_grid(values: Optional[Sequence[float]] = None) -> Tuple[float, ...]:
    if values is None:
        return tuple(float(v) for v in range(0, 31, 2))
    return tuple(float(v) for v in values)
