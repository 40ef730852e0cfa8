from contextlib import contextmanager


class LagwurmError(Exception):
    """General error for a lagwurm operation failing.

    When the failure comes from a third-party library, its
    ``__cause__`` attribute refers to the original exception."""


class ConfigError(LagwurmError):
    """A configuration value is invalid or inconsistent."""


class UnsatisfiableModelError(ConfigError):
    """No stationary model could be drawn for the requested setup."""


class ContractError(LagwurmError, ValueError):
    """A precondition of an operation was violated by the caller."""


class DataError(LagwurmError):
    """The input data cannot be used."""


class ParseError(DataError):
    """A cell of an input table is not a number.

    :ivar row: 1-based data row (the header is not counted)
    :ivar column: name of the offending column"""

    def __init__(self, message, *, row, column):
        super().__init__(message)
        self.row = row
        self.column = column


class MissingDataError(DataError):
    """The input table has an empty or NaN cell."""


class DegenerateVarianceError(DataError):
    """A column has zero variance and cannot be standardized."""


class InsufficientSamplesError(LagwurmError):
    """Too few samples remain for the requested test or run."""


class DegenerateTestError(LagwurmError):
    """A test statistic is undefined for the given samples."""


class ConditioningError(LagwurmError):
    """A Gaussian process kernel matrix is numerically singular."""


class DimensionalityError(LagwurmError):
    """A full regression has at least as many regressors as samples."""


class EstimationError(LagwurmError):
    """A third-party estimator failed on the given samples.

    Its ``__cause__`` attribute refers to the original exception."""


class SimulationDivergedError(LagwurmError):
    """A simulated process escaped to non-finite or huge values."""


class NullTableError(LagwurmError):
    """A null distribution sidecar file cannot be read or written."""


class StoreError(LagwurmError):
    """A run store operation failed.

    Its ``__cause__`` attribute refers to the relevant
    :class:`sqlite3.Error`."""


@contextmanager
def estimation_errors(what):
    """Re-raise estimator failures inside the block as
    :class:`EstimationError`; lagwurm errors pass through."""
    try:
        yield
    except LagwurmError:
        raise
    except (ValueError, ArithmeticError) as e:
        raise EstimationError(f'{what} failed: {e}') from e
