"""CSV ingestion, piecewise-constant reconstruction and JSON reports."""

import json
import logging
import re
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from dynmkw.core.detector import Detection
from dynmkw.core.ranks import ObservationMatrix
from dynmkw.core.statistic import Segmentation
from dynmkw.exceptions import CsvFormatError, InvalidObservations

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
_LINE = re.compile(r"line (\d+)")


def read_csv(path: str, has_header: bool = False, delimiter: str = ",") -> ObservationMatrix:
    """Rows are time points and columns coordinates; every cell must be a finite number."""
    offset = 2 if has_header else 1
    try:
        frame = pd.read_csv(
            path,
            header=0 if has_header else None,
            sep=delimiter,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise CsvFormatError("no data")
    except pd.errors.ParserError as err:
        match = _LINE.search(str(err))
        raise CsvFormatError(
            str(err).strip().split(". ")[-1], int(match.group(1)) if match else None
        )

    blank = frame.fillna("").apply(lambda col: col.str.strip() == "").all(axis=1).to_numpy()
    filled = np.flatnonzero(~blank)
    # trailing empty lines only; inner ones stay errors
    frame = frame.iloc[: filled[-1] + 1] if filled.size else frame.iloc[:0]
    if frame.empty:
        raise CsvFormatError("no data rows")
    ragged = frame.isna().any(axis=1).to_numpy()
    if ragged.any():
        row = int(np.flatnonzero(ragged)[0])
        found = int(frame.iloc[row].notna().sum())
        raise CsvFormatError(
            f"expected {frame.shape[1]} fields, saw {found}", row + offset
        )

    values = np.empty(frame.shape)
    for col, name in enumerate(frame.columns):
        cells = frame[name].str.strip()
        numbers = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(numbers))
        if bad.size:
            row = int(bad[0])
            raise CsvFormatError(
                f"column {col + 1} holds {cells.iloc[row]!r}, not a finite number", row + offset
            )
        values[:, col] = numbers

    labels = tuple(str(name).strip() for name in frame.columns) if has_header else None
    try:
        X = ObservationMatrix(values, labels)
    except InvalidObservations as err:
        raise CsvFormatError(err.detail)
    logger.debug("Read %d x %d observations from %s", X.n, X.L, path)
    return X


def resolve_columns(X: ObservationMatrix, columns: Optional[str]) -> ObservationMatrix:
    """Restrict X to a comma list of column labels (or 0-based indices)."""
    if not columns:
        return X
    picked: List[int] = []
    for token in (part.strip() for part in columns.split(",")):
        if not token:
            continue
        if X.labels is not None and token in X.labels:
            picked.append(X.labels.index(token))
        elif token.isdigit() and int(token) < X.L:
            picked.append(int(token))
        else:
            raise CsvFormatError(f"unknown column {token!r}")
    if not picked:
        raise CsvFormatError("empty column selection")
    return X.select(picked)


def segment_means(X: ObservationMatrix, boundaries: Sequence[int]) -> np.ndarray:
    """K x L matrix of per-segment column means."""
    seg = boundaries if isinstance(boundaries, Segmentation) else Segmentation(X.n, boundaries)
    return np.vstack([X.values[first - 1 : last].mean(axis=0) for first, last in seg.segments()])


def reconstruct(X: ObservationMatrix, boundaries: Sequence[int]) -> np.ndarray:
    seg = boundaries if isinstance(boundaries, Segmentation) else Segmentation(X.n, boundaries)
    lengths = np.diff(seg.edges())
    return np.repeat(segment_means(X, seg), lengths, axis=0)


def write_smoothed(path: str, X: ObservationMatrix, boundaries: Sequence[int], delimiter=","):
    columns = list(X.labels) if X.labels is not None else [f"x{c}" for c in range(X.L)]
    frame = pd.DataFrame(reconstruct(X, boundaries), columns=columns)
    frame.to_csv(path, index=False, sep=delimiter, float_format="%.17g", lineterminator="\n")


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


@dataclass
class SegmentationReport:
    method: str
    n: int
    L: int
    boundaries: Tuple[int, ...]
    k_hat: int
    segment_means: List[List[float]]
    seed: int
    min_seg_len: int
    labels: Optional[Tuple[str, ...]] = None
    curve: List[float] = field(default_factory=list)
    gate_pvalue: Optional[float] = None
    gated: bool = False
    low_confidence: bool = False
    rss_curve: List[float] = field(default_factory=list)
    statistic: Optional[float] = None
    df: Optional[int] = None
    pvalue: Optional[float] = None
    ridge: Optional[float] = None
    condition_flag: bool = False
    bandwidth: Optional[float] = None
    wall_time: Optional[float] = None
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def build(
        cls, X: ObservationMatrix, found: Detection, seed: int, min_seg_len: int
    ) -> "SegmentationReport":
        selection = found.selection
        return cls(
            method=found.method,
            n=X.n,
            L=X.L,
            labels=X.labels,
            boundaries=tuple(found.boundaries),
            k_hat=found.k_hat,
            segment_means=segment_means(X, found.segmentation).tolist(),
            seed=seed,
            min_seg_len=min_seg_len,
            curve=list(found.curve),
            gate_pvalue=None if selection is None else selection.gate_pvalue,
            gated=False if selection is None else selection.gated,
            low_confidence=False if selection is None else selection.low_confidence,
            rss_curve=[] if selection is None else list(selection.rss_curve),
            statistic=None if found.statistic is None else float(found.statistic.value),
            df=None if found.statistic is None else int(found.statistic.df),
            pvalue=_optional_float(found.pvalue),
            ridge=_optional_float(found.ridge),
            condition_flag=bool(found.condition_flag),
            bandwidth=_optional_float(found.bandwidth),
        )

    def to_json(self) -> str:
        payload = asdict(self)
        if payload["wall_time"] is None:
            del payload["wall_time"]
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
