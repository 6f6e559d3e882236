"""Exception hierarchy shared by every module.

Each class carries the process exit code the command-line driver reports.
"""


class KpiDiagError(Exception):
    exit_code = 1


class UsageError(KpiDiagError, ValueError):
    """Bad arguments, parameters or configuration."""

    exit_code = 1


class DataError(KpiDiagError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 2

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SchemaError(DataError):
    """A required attribute is absent or has the wrong kind."""


class ModelError(KpiDiagError):
    """A trained model cannot be used with the given data or artifact."""

    exit_code = 3
