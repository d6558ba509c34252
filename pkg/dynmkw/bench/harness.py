"""Monte-Carlo precision/recall evaluation over an SNR grid."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from dynmkw.bench.generator import SimConfig, replicate_signal, snr_grid
from dynmkw.bench.metrics import precision_recall
from dynmkw.bench.store import ResultStore
from dynmkw.core.detector import METHODS, detect
from dynmkw.exceptions import ConfigError, DynMKWError, ReplicateFailed
from dynmkw.utils import get_readable_time, rng
from dynmkw.vars import Var

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COLUMNS = [
    "schema_version",
    "method",
    "snr_db",
    "outlier_rate",
    "tolerance",
    "metric",
    "mean",
    "stderr",
    "replications",
]


@dataclass(frozen=True)
class DetectorOptions:
    alpha: float = Var.ALPHA
    permutations: int = Var.PERMUTATIONS
    min_seg_len: int = Var.MIN_SEG_LEN
    max_segments: Optional[int] = None
    bandwidth: Optional[float] = None
    local_ranks: bool = True
    memory_budget: Optional[int] = None
    max_ridge: float = Var.MAX_RIDGE


@dataclass(frozen=True)
class _Task:
    cfg: SimConfig
    method: str
    replicate: int
    known_k: bool
    tolerances: tuple
    options: DetectorOptions = field(default_factory=DetectorOptions)


def replicate_seed(seed: int, replicate: int) -> int:
    """Seed handed to the detectors for one replicate, shared across methods."""
    return int(rng.stream(seed, rng.GATE, replicate).integers(2 ** 32))


def _run_replicate(task: _Task) -> List[Dict[str, object]]:
    cfg, opts = task.cfg, task.options
    try:
        X, truth = replicate_signal(cfg, task.replicate)
        found = detect(
            X,
            method=task.method,
            n_segments=len(truth) + 1 if task.known_k else None,
            max_segments=None if task.known_k else opts.max_segments,
            min_seg_len=opts.min_seg_len,
            alpha=opts.alpha,
            permutations=opts.permutations,
            seed=replicate_seed(cfg.seed, task.replicate),
            memory_budget=opts.memory_budget,
            max_ridge=opts.max_ridge,
            bandwidth=opts.bandwidth,
            local_ranks=opts.local_ranks,
        )
    except DynMKWError as err:
        raise ReplicateFailed(cfg.seed, task.replicate, cfg.snr_db, err)
    rows = []
    for tol in task.tolerances:
        scores = precision_recall(found.segmentation, truth, tol)
        rows.append(
            {
                "snr_db": cfg.snr_db,
                "outlier_rate": cfg.outlier_rate,
                "replicate": task.replicate,
                "tolerance": int(tol),
                "precision": scores.precision,
                "recall": scores.recall,
                "n_detected": scores.n_detected,
                "k_hat": None if task.known_k else found.k_hat,
            }
        )
    return rows


def _aggregate(raw: pd.DataFrame, known_k: bool, replications: int) -> pd.DataFrame:
    metrics = ["precision", "recall", "n_detected"] + ([] if known_k else ["k_hat"])
    keys = ["method", "snr_db", "outlier_rate", "tolerance"]
    long = raw.melt(id_vars=keys, value_vars=metrics, var_name="metric", value_name="value")
    long["value"] = long["value"].astype(float)
    grouped = long.groupby(keys + ["metric"], sort=False)["value"]
    table = grouped.agg(["mean", "std", "count"]).reset_index()
    if replications > 1:
        table["stderr"] = table["std"] / np.sqrt(table["count"])
    else:
        table["stderr"] = np.nan
    table["replications"] = table["count"].astype(int)
    table["schema_version"] = SCHEMA_VERSION
    return table[COLUMNS]


def monte_carlo(
    cfg: SimConfig,
    methods: Union[str, Sequence[str]] = "dynmkw",
    known_k: bool = False,
    snr_values: Optional[Sequence[float]] = None,
    tolerances: Sequence[int] = (1,),
    options: Optional[DetectorOptions] = None,
    workers: int = Var.WORKERS,
    store: Optional[ResultStore] = None,
) -> pd.DataFrame:
    """Tidy table of mean and standard error per (method, SNR, tolerance, metric).

    Every method sees the same replicate signals. Output does not depend on
    the number of workers.
    """
    methods = (methods,) if isinstance(methods, str) else tuple(methods)
    for method in methods:
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}, expected one of {METHODS}")
    if known_k and "binseg" in methods:
        raise ConfigError("binseg cannot run with a known number of change-points")
    if not tolerances or min(tolerances) < 0:
        raise ConfigError(f"tolerances must be non-negative, got {tolerances}")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    options = options or DetectorOptions()
    grid = snr_grid(snr_values)
    tolerances = tuple(int(t) for t in tolerances)

    tasks = [
        _Task(cfg.at_snr(snr), method, rep, known_k, tolerances, options)
        for method in methods
        for snr in grid
        for rep in range(cfg.replications)
    ]
    started = time.time()
    logger.info(
        "Running %d replicate(s) x %d SNR point(s) x %d method(s) on %d worker(s)",
        cfg.replications,
        len(grid),
        len(methods),
        workers,
    )
    if workers == 1:
        raw_rows = _collect(tasks, map(_run_replicate, tasks), cfg.replications)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_replicate, tasks, chunksize=max(1, cfg.replications // 4))
            raw_rows = _collect(tasks, results, cfg.replications)

    raw = pd.DataFrame(raw_rows)
    if store is not None:
        scenario = asdict(cfg)
        scenario["snr_grid"] = list(grid)
        for method in methods:
            rows = raw[raw["method"] == method].drop(columns="method")
            records = [
                {k: (None if pd.isna(v) else v) for k, v in row.items()}
                for row in rows.to_dict("records")
            ]
            store.record_run(method, cfg.seed, known_k, cfg.replications, scenario, records)
    logger.info("Monte-Carlo run finished in %s", get_readable_time(time.time() - started))
    return _aggregate(raw, known_k, cfg.replications)


def _collect(tasks, results, per_point: int) -> List[Dict[str, object]]:
    rows = []
    for done, (task, replicate_rows) in enumerate(zip(tasks, results), start=1):
        for row in replicate_rows:
            rows.append({"method": task.method, **row})
        if done % per_point == 0:
            logger.info(
                "%s at %.1f dB: %d replicate(s) done", task.method, task.cfg.snr_db, per_point
            )
    return rows


def write_csv(table: pd.DataFrame, path: Optional[str] = None) -> str:
    """Tidy CSV text; also written to `path` when given."""
    text = table.to_csv(index=False, na_rep="nan", float_format="%.10g", lineterminator="\n")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    return text
