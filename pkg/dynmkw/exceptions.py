# This file is a part of dynMKW

from typing import Optional, Union


class DynMKWError(Exception):
    message = "Change-point detection failed"

    def __init__(self, detail: Optional[str] = None):
        self.detail = detail
        super().__init__(f"{self.message}: {detail}" if detail else self.message)


class InvalidObservations(DynMKWError, ValueError):
    message = "Invalid observation matrix"


class DegenerateCovariance(DynMKWError):
    message = "degenerate rank covariance"


class InvalidSegmentation(DynMKWError, IndexError):
    message = "Invalid segmentation"


class SeriesTooShort(DynMKWError):
    message = "Series too short"


class InfeasibleSegmentation(DynMKWError):
    message = "Infeasible segmentation"


class UndefinedTest(DynMKWError):
    message = "test undefined for a single group"


class SelectionError(DynMKWError):
    message = "Cannot select the number of change-points"


class ConfigError(DynMKWError):
    message = "Invalid configuration"


class CsvFormatError(DynMKWError, ValueError):
    message = "Malformed CSV input"

    def __init__(self, detail: Optional[str] = None, line: Optional[int] = None):
        self.line = line
        if line is not None:
            detail = f"line {line}: {detail}"
        super().__init__(detail)


class ReplicateFailed(DynMKWError):
    message = "Monte-Carlo replicate failed"

    def __init__(self, seed: int, replicate: int, snr_db: float, cause: Union[BaseException, str]):
        self.seed = seed
        self.replicate = replicate
        self.snr_db = snr_db
        if isinstance(cause, BaseException):
            cause = f"{type(cause).__name__}: {cause}"
        self.cause = cause
        super().__init__(f"seed={seed} replicate={replicate} snr_db={snr_db}: {self.cause}")

    def __reduce__(self):
        # crosses process boundaries from worker pools
        return (self.__class__, (self.seed, self.replicate, self.snr_db, self.cause))
