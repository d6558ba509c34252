import argparse
from typing import List, Optional, Sequence

from dynmkw import __version__
from dynmkw.core.detector import METHODS
from dynmkw.vars import Var


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1), got {value}")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a value > 0, got {value}")
    return value


def _items(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in _items(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma list of numbers")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def tolerance_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in _items(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma list of integers")
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError("tolerances must be non-negative integers")
    return values


def method_list(text: str) -> List[str]:
    methods = _items(text)
    unknown = [m for m in methods if m not in METHODS]
    if not methods or unknown:
        raise argparse.ArgumentTypeError(f"methods must come from {', '.join(METHODS)}")
    return methods


def _detector_flags(parser: argparse.ArgumentParser, seed_default: Optional[int] = Var.SEED):
    parser.add_argument("--min-seg-len", type=positive_int, default=Var.MIN_SEG_LEN)
    parser.add_argument(
        "--alpha", type=probability, default=Var.ALPHA, help="level of the zero-change gate"
    )
    parser.add_argument("--permutations", type=positive_int, default=Var.PERMUTATIONS)
    parser.add_argument("--seed", type=int, default=seed_default)
    parser.add_argument(
        "--ridge-budget",
        type=positive_float,
        default=Var.MAX_RIDGE,
        help="largest relative ridge tried on a singular rank covariance",
    )
    parser.add_argument(
        "--memory-budget",
        type=positive_int,
        default=Var.MEMORY_BUDGET,
        help="bytes allowed for the materialized cost table",
    )
    parser.add_argument(
        "--bandwidth", type=positive_float, help="kernel bandwidth (median heuristic)"
    )
    parser.add_argument(
        "--global-ranks",
        action="store_true",
        help="binseg: rank once over the whole series instead of inside every sub-segment",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynmkw",
        description="Rank-based multiple change-point detection for multivariate signals",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=Var.LOG_LEVEL, type=str.upper)
    parser.add_argument("--log-file", default=Var.LOG_FILE)
    commands = parser.add_subparsers(dest="command", required=True)

    segment = commands.add_parser("segment", help="segment a CSV signal")
    segment.add_argument("--input", required=True)
    segment.add_argument("--header", action="store_true", help="first row holds column labels")
    segment.add_argument("--delimiter", default=",")
    segment.add_argument("--columns", help="comma list of labels or 0-based indices")
    count = segment.add_mutually_exclusive_group()
    count.add_argument("--k", type=positive_int, help="fixed number of segments")
    count.add_argument("--kmax", type=positive_int, help="largest number of segments considered")
    segment.add_argument("--method", choices=METHODS, default="dynmkw")
    _detector_flags(segment)
    segment.add_argument("--output", help="JSON report path (stdout when omitted)")
    segment.add_argument("--smoothed", help="write the piecewise-constant signal here")
    segment.add_argument("--timings", action="store_true", help="add wall time to the report")

    simulate = commands.add_parser("simulate", help="Monte-Carlo precision/recall benchmark")
    simulate.add_argument("--config", help="dotenv-style scenario file with SIM_* keys")
    simulate.add_argument("--methods", type=method_list, default=["dynmkw"])
    simulate.add_argument("--known-k", action="store_true")
    simulate.add_argument("--snr-db", type=float_list, help="comma list (default 0..30 step 2)")
    simulate.add_argument("--replications", type=positive_int)
    simulate.add_argument("--outlier-rate", type=probability)
    simulate.add_argument("--outlier-excess-db", type=float)
    simulate.add_argument("--correlation", type=float)
    simulate.add_argument("--snr-convention", choices=("amplitude", "power"))
    simulate.add_argument("--tolerance", type=tolerance_list, default=[1])
    simulate.add_argument("--kmax", type=positive_int)
    simulate.add_argument("--workers", type=positive_int, default=Var.WORKERS)
    simulate.add_argument(
        "--store", default=Var.DATABASE_URL, help="SQLAlchemy URL for the run store"
    )
    simulate.add_argument("--output", help="CSV path (stdout when omitted)")
    _detector_flags(simulate, seed_default=None)

    calibrate = commands.add_parser("calibrate", help="null distribution of T at fixed boundaries")
    calibrate.add_argument("--n", type=positive_int, default=200)
    calibrate.add_argument("--L", type=positive_int, default=1)
    calibrate.add_argument("--K", type=positive_int, default=2)
    calibrate.add_argument("--replications", type=positive_int, default=2000)
    calibrate.add_argument("--seed", type=int, default=Var.SEED)
    calibrate.add_argument("--output", help="CSV path (stdout when omitted)")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)
