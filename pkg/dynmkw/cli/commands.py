# This file is a part of dynMKW

import argparse
import logging
import sys
import time
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from dynmkw.bench.generator import SimConfig
from dynmkw.bench.harness import DetectorOptions, monte_carlo, write_csv
from dynmkw.bench.store import ResultStore
from dynmkw.cli.io import SegmentationReport, read_csv, resolve_columns, write_smoothed
from dynmkw.cli.parser import build_parser
from dynmkw.core.detector import detect
from dynmkw.core.ranks import ObservationMatrix, compute_ranks, rank_covariance
from dynmkw.core.statistic import (
    Segmentation,
    SegmentStatistic,
    fixed_boundary_pvalue,
    statistic_T,
)
from dynmkw.exceptions import ConfigError, DynMKWError
from dynmkw.utils import ScenarioParser, get_readable_time, rng, setup_logging
from dynmkw.vars import Var

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
CALIBRATION_SCHEMA_VERSION = 1


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info("Wrote %s", path)
    else:
        sys.stdout.write(text)


def cmd_segment(args: argparse.Namespace) -> SegmentationReport:
    X = resolve_columns(read_csv(args.input, args.header, args.delimiter), args.columns)
    started = time.time()
    found = detect(
        X,
        method=args.method,
        n_segments=args.k,
        max_segments=args.kmax,
        min_seg_len=args.min_seg_len,
        alpha=args.alpha,
        permutations=args.permutations,
        seed=args.seed,
        memory_budget=args.memory_budget,
        max_ridge=args.ridge_budget,
        bandwidth=args.bandwidth,
        local_ranks=not args.global_ranks,
    )
    elapsed = time.time() - started
    report = SegmentationReport.build(X, found, args.seed, args.min_seg_len)
    if args.timings:
        report.wall_time = elapsed
    logger.info(
        "%s found %d change-point(s) in %d x %d observations (%s)",
        args.method,
        report.k_hat,
        X.n,
        X.L,
        get_readable_time(elapsed),
    )
    _emit(report.to_json(), args.output)
    if args.smoothed:
        write_smoothed(args.smoothed, X, found.segmentation, args.delimiter)
    return report


def cmd_simulate(args: argparse.Namespace) -> pd.DataFrame:
    if args.config:
        scenario = ScenarioParser(args.config).parse_from_file()
    else:
        scenario = ScenarioParser().parse_from_env()
    seed = args.seed
    if seed is None and "SIM_SEED" not in scenario:
        seed = Var.SEED
    convention = args.snr_convention
    if convention is None and "SIM_SNR_CONVENTION" not in scenario:
        convention = Var.SNR_CONVENTION
    cfg = SimConfig.from_scenario(
        scenario,
        replications=args.replications,
        outlier_rate=args.outlier_rate,
        outlier_excess_db=args.outlier_excess_db,
        correlation=args.correlation,
        snr_convention=convention,
        seed=seed,
    )
    options = DetectorOptions(
        alpha=args.alpha,
        permutations=args.permutations,
        min_seg_len=args.min_seg_len,
        max_segments=args.kmax,
        bandwidth=args.bandwidth,
        local_ranks=not args.global_ranks,
        memory_budget=args.memory_budget,
        max_ridge=args.ridge_budget,
    )
    store = ResultStore(args.store) if args.store else None
    table = monte_carlo(
        cfg,
        methods=args.methods,
        known_k=args.known_k,
        snr_values=args.snr_db or scenario.get("SIM_SNR_GRID"),
        tolerances=args.tolerance,
        options=options,
        workers=args.workers,
        store=store,
    )
    _emit(write_csv(table), args.output)
    return table


def equal_boundaries(n: int, K: int) -> Segmentation:
    return Segmentation(n, tuple(int(round(k * n / K)) for k in range(1, K)))


def cmd_calibrate(args: argparse.Namespace) -> pd.DataFrame:
    if args.K < 2:
        raise ConfigError(f"calibration needs K >= 2 segments, got K={args.K}")
    if args.n < args.K:
        raise ConfigError(f"n={args.n} cannot hold K={args.K} segments")
    seg = equal_boundaries(args.n, args.K)
    df = (args.K - 1) * args.L
    values = np.empty(args.replications)
    for rep in range(args.replications):
        noise = rng.stream(args.seed, rng.SIGNAL, rep).standard_normal((args.n, args.L))
        R = compute_ranks(ObservationMatrix(noise))
        values[rep] = statistic_T(R, rank_covariance(R), seg).value

    ks = stats.kstest(values, "chi2", args=(df,))
    logger.info(
        "T over %d null replicate(s): mean %.4f, reference %d, KS %.4f (p=%.4g)",
        args.replications,
        values.mean(),
        df,
        ks.statistic,
        ks.pvalue,
    )
    ordered = np.sort(values)
    levels = (np.arange(1, args.replications + 1) - 0.5) / args.replications
    table = pd.DataFrame(
        {
            "schema_version": CALIBRATION_SCHEMA_VERSION,
            "n": args.n,
            "L": args.L,
            "K": args.K,
            "df": df,
            "order": np.arange(1, args.replications + 1),
            "statistic": ordered,
            "reference_quantile": stats.chi2.ppf(levels, df),
            "pvalue": [fixed_boundary_pvalue_of(t, df) for t in ordered],
        }
    )
    _emit(table.to_csv(index=False, float_format="%.10g", lineterminator="\n"), args.output)
    return table


def fixed_boundary_pvalue_of(value: float, df: int) -> float:
    return fixed_boundary_pvalue(SegmentStatistic(value=value, df=df, per_segment_costs=()))


COMMANDS = {"segment": cmd_segment, "simulate": cmd_simulate, "calibrate": cmd_calibrate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    if args.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"dynmkw: error: unknown log level {args.log_level}\n")
        return EXIT_USAGE
    setup_logging(args.log_level, args.log_file)

    problems = Var.validate()
    if problems:
        logger.error("Invalid settings: %s", ", ".join(problems))
        return EXIT_USAGE

    started = time.time()
    verbose = logger.isEnabledFor(logging.DEBUG)
    try:
        COMMANDS[args.command](args)
    except ConfigError as err:
        logger.error("%s", err, exc_info=verbose)
        return EXIT_USAGE
    except (DynMKWError, OSError) as err:
        logger.error("%s", err, exc_info=verbose)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return EXIT_RUNTIME
    logger.info("%s finished in %s", args.command, get_readable_time(time.time() - started))
    return EXIT_OK
