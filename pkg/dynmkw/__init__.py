# This file is a part of dynMKW

from .vars import Var

__version__ = "1.0.0"
