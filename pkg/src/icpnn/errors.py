"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

from __future__ import annotations


class ICPError(Exception):
    exit_code = 3


class UsageError(ICPError, ValueError):
    exit_code = 1


class InvalidInputError(ICPError, ValueError):
    exit_code = 2


class DataError(ICPError, ValueError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InvalidSplitError(DataError):
    pass


class ArtifactIncompatibleError(DataError):
    pass


class EmptyCalibrationError(ICPError, ValueError):
    exit_code = 2


class InsufficientCalibrationError(ICPError, ValueError):
    """Significance level too small for the calibration size (s = 0)."""

    exit_code = 1


class DegenerateConfidenceError(ICPError, ValueError):
    exit_code = 1


class DegenerateNormalizerError(ICPError, ArithmeticError):
    pass


class DegenerateInputError(ICPError, ValueError):
    pass


class TrainingDivergedError(ICPError, RuntimeError):
    pass
