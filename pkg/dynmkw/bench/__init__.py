# This file is a part of dynMKW

from .generator import SimConfig, generate_signal, inject_outliers, replicate_signal
from .metrics import EvalMetrics, precision_recall
from .harness import DetectorOptions, monte_carlo, write_csv
from .store import ResultStore
