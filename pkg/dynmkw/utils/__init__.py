# This file is a part of dynMKW

from .rng import stream
from .logger import setup_logging
from .config_parser import ScenarioParser
from .time_format import get_readable_time
