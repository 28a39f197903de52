"""Exceptions raised by the fuel-shock toolkit.

Every error carries a ``detail`` message and the process ``exit_code`` the CLI
reports for it, the way route handlers pair a detail with a status code.
"""

from __future__ import annotations

from collections.abc import Sequence

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_RANK = 3
EXIT_CONVERGENCE = 4
EXIT_ESTIMATION = 5
EXIT_REPRODUCTION = 6


class FuelShockError(Exception):
    exit_code: int = EXIT_UNEXPECTED

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class InputValidationError(FuelShockError):
    exit_code = EXIT_INPUT


class PanelValidationError(InputValidationError):
    """A panel file violates the documented schema.

    ``row`` is the 1-based line number in the file (the header is line 1).
    """

    def __init__(self, detail: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"line {row}")
        if column is not None:
            where.append(f"column '{column}'")
        message = f"{detail} ({', '.join(where)})" if where else detail
        super().__init__(message)
        self.row = row
        self.column = column


class ParameterFileError(InputValidationError):
    def __init__(self, detail: str, path: str | None = None, line: int | None = None):
        prefix = path or ""
        if path and line is not None:
            prefix = f"{path}:{line}"
        super().__init__(f"{prefix}: {detail}" if prefix else detail)
        self.path = path
        self.line = line


class ConfigError(InputValidationError):
    pass


class InvalidArgumentError(FuelShockError, ValueError):
    exit_code = EXIT_INPUT


class RankDeficiencyError(FuelShockError):
    exit_code = EXIT_RANK

    def __init__(self, detail: str, collinear: Sequence[str] = ()):
        super().__init__(detail)
        self.collinear = tuple(collinear)


class ConvergenceError(FuelShockError):
    exit_code = EXIT_CONVERGENCE

    def __init__(self, detail: str, iterations: int, change: float):
        super().__init__(detail)
        self.iterations = iterations
        self.change = change


class EstimationError(FuelShockError):
    exit_code = EXIT_ESTIMATION


class DegenerateRegressorError(EstimationError):
    pass


class InsufficientDataError(EstimationError):
    pass


class ReproductionMismatchError(FuelShockError):
    exit_code = EXIT_REPRODUCTION

    def __init__(self, detail: str, failed_cells: int):
        super().__init__(detail)
        self.failed_cells = failed_cells
