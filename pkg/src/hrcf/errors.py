"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 1,
DataError -> 2, NumericAbort -> 3, oracle failures -> 4.
"""


class HrcfError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(HrcfError, ValueError):
    """Invalid hyperparameter, flag, or synthetic-graph specification."""


class DataError(HrcfError, ValueError):
    """Problem with an interaction file or derived dataset."""


class ParseError(DataError):
    """Malformed line in an interaction file; message carries the line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyDatasetError(DataError):
    """No interactions survived loading or filtering."""


class ConstraintError(HrcfError, ValueError):
    """A point or vector violates a manifold constraint beyond tolerance."""


class DegenerateEmbeddingError(HrcfError, ValueError):
    """All embedding rows collapsed to zero; the regularizer is undefined."""


class NumericAbort(HrcfError, RuntimeError):
    """Training produced a non-finite loss; carries diagnostic context."""

    def __init__(self, message: str, epoch: int, batch: int, indices=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.indices = indices
