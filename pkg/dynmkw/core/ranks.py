"""Rank transforms and the empirical rank covariance."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.stats import rankdata

from dynmkw.exceptions import DegenerateCovariance, InvalidObservations

logger = logging.getLogger(__name__)

# relative ridge multipliers tried in order; scaled by trace(sigma) / L
RIDGE_SCHEDULE = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)
# smallest accepted squared pivot ratio of the Cholesky factor
PIVOT_TOLERANCE = 1e-14


@dataclass(frozen=True)
class ObservationMatrix:
    """n x L signal, rows are time points and columns are coordinates."""

    values: np.ndarray
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InvalidObservations(f"expected a 2-D array, got {values.ndim} dimensions")
        n, dim = values.shape
        if n < 2 or dim < 1:
            raise InvalidObservations(f"need n >= 2 rows and L >= 1 columns, got {n} x {dim}")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            row, col = bad[0]
            raise InvalidObservations(
                f"non-finite value {values[row, col]} at row {row + 1}, column {col + 1}"
            )
        if self.labels is not None and len(self.labels) != dim:
            raise InvalidObservations(f"{len(self.labels)} labels for {dim} columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def L(self) -> int:
        return self.values.shape[1]

    def select(self, columns: Sequence[int]) -> "ObservationMatrix":
        labels = None if self.labels is None else tuple(self.labels[c] for c in columns)
        return ObservationMatrix(self.values[:, list(columns)], labels)


@dataclass(frozen=True)
class RankTable:
    ranks: np.ndarray
    prefix: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def L(self) -> int:
        return self.ranks.shape[1]

    def empirical_cdf(self) -> np.ndarray:
        """F_hat evaluated at the observations, i.e. ranks / n."""
        return self.ranks / self.n


@dataclass(frozen=True)
class RankCovariance:
    """Covariance of the centered empirical CDF values.

    `sigma` is on the empirical-CDF scale, so its tie-free diagonal is
    (n^2 + 2) / (12 n^2) and tends to 1/12. `rank_units` gives the same matrix
    expressed in squared rank units divided by n^2.
    """

    sigma: np.ndarray
    inverse_factor: np.ndarray
    ridge: float
    condition_flag: bool
    n: int

    @property
    def L(self) -> int:
        return self.sigma.shape[0]

    @property
    def rank_units(self) -> np.ndarray:
        return self.sigma * self.n

    def whiten(self, vectors: np.ndarray) -> np.ndarray:
        """Apply the inverse lower factor to the trailing axis of `vectors`."""
        flat = np.atleast_2d(vectors)
        out = linalg.solve_triangular(self.inverse_factor, flat.T, lower=True, check_finite=False).T
        return out.reshape(np.shape(vectors))

    def quadratic_form(self, vector: np.ndarray) -> float:
        vector = np.asarray(vector, dtype=float)
        z = linalg.solve_triangular(self.inverse_factor, vector, lower=True)
        return float(np.dot(z, z))


def compute_ranks(X: ObservationMatrix) -> RankTable:
    """Midranks per column, plus (n+1) x L prefix sums with a leading zero row."""
    ranks = rankdata(X.values, method="average", axis=0).astype(float)
    prefix = np.zeros((X.n + 1, X.L))
    np.cumsum(ranks, axis=0, out=prefix[1:])
    ranks.setflags(write=False)
    prefix.setflags(write=False)
    return RankTable(ranks=ranks, prefix=prefix)


def _factorize(matrix: np.ndarray) -> Optional[np.ndarray]:
    try:
        factor = linalg.cholesky(matrix, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None
    pivots = np.diag(factor) ** 2
    if not np.all(pivots > 0) or pivots.min() < PIVOT_TOLERANCE * pivots.max():
        return None
    return factor


def rank_covariance(R: RankTable, max_ridge: float = RIDGE_SCHEDULE[-1]) -> RankCovariance:
    """Empirical rank covariance with a Cholesky factor of sigma + ridge * I."""
    n = R.n
    constant = np.flatnonzero(np.all(R.ranks == R.ranks[0], axis=0))
    if constant.size:
        raise DegenerateCovariance(f"column {constant[0] + 1} is constant")
    centered = R.ranks - n / 2.0
    gram = centered.T @ centered / float(n) ** 3
    sigma = np.triu(gram) + np.triu(gram, 1).T

    scale = np.trace(sigma) / R.L
    for multiplier in RIDGE_SCHEDULE:
        if multiplier > max_ridge:
            break
        ridge = multiplier * scale
        factor = _factorize(sigma + ridge * np.eye(R.L))
        if factor is None:
            continue
        if ridge > 0:
            logger.warning(
                "Rank covariance is singular; applied ridge %.3g (relative %.0e)", ridge, multiplier
            )
        sigma.setflags(write=False)
        factor.setflags(write=False)
        return RankCovariance(
            sigma=sigma,
            inverse_factor=factor,
            ridge=float(ridge),
            condition_flag=bool(ridge > 0),
            n=n,
        )
    raise DegenerateCovariance(
        f"factorization failed up to relative ridge {min(max_ridge, RIDGE_SCHEDULE[-1]):.0e}"
    )
