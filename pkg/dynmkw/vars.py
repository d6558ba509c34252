# This file is a part of dynMKW

from os import environ
from typing import List, Optional

from dotenv import load_dotenv

load_dotenv()


def _flag(name: str, default: str) -> str:
    return str(environ.get(f"DYNMKW_{name}", default)).strip()


class Var(object):
    """Process-wide defaults, read once from the environment (and `.env`)."""

    LOG_LEVEL: str = _flag("LOG_LEVEL", "INFO").upper()
    LOG_FILE: Optional[str] = _flag("LOG_FILE", "") or None

    SEED: int = int(_flag("SEED", "0"))
    ALPHA: float = float(_flag("ALPHA", "0.05"))
    PERMUTATIONS: int = int(_flag("PERMUTATIONS", "999"))
    MIN_SEG_LEN: int = int(_flag("MIN_SEG_LEN", "1"))

    MEMORY_BUDGET: int = int(_flag("MEMORY_BUDGET", str(1024 ** 3)))  # 1 GiB
    MAX_RIDGE: float = float(_flag("MAX_RIDGE", "1e-2"))
    WORKERS: int = int(_flag("WORKERS", "1"))

    DATABASE_URL: Optional[str] = _flag("DATABASE_URL", "") or None
    SNR_CONVENTION: str = _flag("SNR_CONVENTION", "amplitude").lower()

    @classmethod
    def validate(cls) -> List[str]:
        """Names of the settings that hold unusable values."""
        problems = []
        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            problems.append("DYNMKW_LOG_LEVEL")
        if not 0.0 <= cls.ALPHA < 1.0:
            problems.append("DYNMKW_ALPHA")
        if cls.PERMUTATIONS < 1:
            problems.append("DYNMKW_PERMUTATIONS")
        if cls.MIN_SEG_LEN < 1:
            problems.append("DYNMKW_MIN_SEG_LEN")
        if cls.MEMORY_BUDGET <= 0:
            problems.append("DYNMKW_MEMORY_BUDGET")
        if not cls.MAX_RIDGE > 0:
            problems.append("DYNMKW_MAX_RIDGE")
        if cls.WORKERS < 1:
            problems.append("DYNMKW_WORKERS")
        if cls.SNR_CONVENTION not in ("amplitude", "power"):
            problems.append("DYNMKW_SNR_CONVENTION")
        return problems
