# This file is a part of dynMKW

from .io import SegmentationReport, read_csv, segment_means, reconstruct
from .commands import cmd_segment, cmd_simulate, cmd_calibrate, main
