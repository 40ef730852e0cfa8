"""Observation data model and construction of time-aligned lagged samples."""

from dataclasses import dataclass, field
from functools import cached_property
import hashlib
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import (
    ContractError, DataError, DegenerateVarianceError,
    InsufficientSamplesError, MissingDataError, ParseError)

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({'', 'nan', 'na', 'null', 'none'})


@dataclass(frozen=True, order=True)
class LaggedVariable:
    """Variable *var* observed *lag* steps before the target time.

    Ordering is by ``(lag, var)``, the tie-breaking order used when
    sorting candidate parents."""
    lag: int
    var: int

    def __init__(self, var: int, lag: int):
        object.__setattr__(self, 'var', int(var))
        object.__setattr__(self, 'lag', int(lag))
        if self.var < 0 or self.lag < 0:
            raise ContractError(
                f'invalid lagged variable ({var}, {lag}): index and lag '
                'must be non-negative')

    def shifted(self, tau: int) -> 'LaggedVariable':
        return LaggedVariable(self.var, self.lag + tau)

    def __repr__(self):
        return f'LaggedVariable({self.var}, -{self.lag})'


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    """A ``T x N`` observation matrix with variable names.

    The values array is copied and made read-only, so a dataset can be
    shared freely between workers."""
    values: np.ndarray
    names: Tuple[str, ...]
    standardized: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(
                f'dataset values must be two-dimensional, got shape '
                f'{values.shape}')
        names = tuple(str(name) for name in self.names)
        if len(names) != values.shape[1]:
            raise DataError(
                f'{len(names)} names given for {values.shape[1]} columns')
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise MissingDataError(
                f'missing value at row {row + 1}, column {names[col]!r}')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'names', names)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def standardize(self) -> 'TimeSeriesDataset':
        """Return a copy with every column at zero mean, unit variance.

        :raises DegenerateVarianceError: if a column is constant"""
        mean = self.values.mean(axis=0)
        std = self.values.std(axis=0)
        for name, sd in zip(self.names, std):
            if not sd > 0:
                raise DegenerateVarianceError(
                    f'column {name!r} is constant and cannot be '
                    'standardized')
        return TimeSeriesDataset(
            (self.values - mean) / std, self.names, standardized=True)

    def check_length(self, tau_max: int) -> None:
        if self.T < 2 * tau_max + 2:
            raise InsufficientSamplesError(
                f'T={self.T} is too short for tau_max={tau_max}, '
                f'need at least {2 * tau_max + 2} time steps')

    @cached_property
    def fingerprint(self) -> str:
        """Digest of names and values, identifying the data in caches."""
        digest = hashlib.blake2b(digest_size=16)
        digest.update('\x1f'.join(self.names).encode('utf-8'))
        digest.update(self.values.tobytes())
        return digest.hexdigest()

    def with_values(self, values) -> 'TimeSeriesDataset':
        return TimeSeriesDataset(values, self.names, self.standardized)


@dataclass(frozen=True, eq=False)
class LaggedSampleArrays:
    """Time-aligned samples behind one test of X _||_ Y | Z.

    Row ``k`` of ``x``, ``y`` and ``z`` belongs to target time
    ``cutoff + k``."""
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    x_node: Optional[LaggedVariable] = None
    y_node: Optional[LaggedVariable] = None
    z_nodes: Tuple[LaggedVariable, ...] = field(default=())
    cutoff: int = 0
    source: Optional[str] = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim_z(self) -> int:
        return self.z.shape[1]

    def swapped(self) -> 'LaggedSampleArrays':
        return LaggedSampleArrays(
            self.y, self.x, self.z, self.y_node, self.x_node, self.z_nodes,
            self.cutoff, self.source)


def load_csv(path, standardize=True) -> TimeSeriesDataset:
    """Read a dataset from a CSV file with one header row of names.

    :param path: The file to read
    :param bool standardize: Whether to transform each column to zero
        mean and unit variance (the default)
    :raises ParseError: for a non-numeric cell
    :raises MissingDataError: for an empty or NaN cell
    :raises DegenerateVarianceError: for a constant column when
        standardizing"""
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, encoding='utf-8')
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataError(f'cannot parse {path}: {e}') from e
    except pd.errors.EmptyDataError as e:
        raise DataError(f'{path} is empty') from e
    if frame.shape[0] == 0:
        raise DataError(f'{path} has no data rows')
    columns = []
    for name in frame.columns:
        cells = frame[name]
        missing = cells.isna()
        text = cells.where(~missing, '').str.strip()
        missing |= text.str.lower().isin(MISSING_TOKENS)
        if missing.any():
            row = int(np.flatnonzero(missing.to_numpy())[0]) + 1
            raise MissingDataError(
                f'missing value at row {row}, column {name!r} of {path}')
        bad = pd.to_numeric(text, errors='coerce').isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise ParseError(
                f'non-numeric value {text.iloc[row]!r} at row {row + 1}, '
                f'column {name!r} of {path}', row=row + 1, column=name)
        columns.append(text.to_numpy(dtype=object).astype(np.float64))
    ds = TimeSeriesDataset(np.column_stack(columns), tuple(frame.columns))
    logger.info('loaded %s: T=%d, N=%d', path, ds.T, ds.N)
    if standardize:
        ds = ds.standardize()
    return ds


def format_float(value) -> str:
    """Shortest text that reads back as the same double."""
    return repr(float(value))


def write_csv(ds: TimeSeriesDataset, path) -> None:
    """Write *ds* so that :func:`load_csv` reads back identical values."""
    frame = pd.DataFrame(np.asarray(ds.values), columns=list(ds.names))
    frame.to_csv(path, index=False, float_format=format_float,
                 encoding='utf-8', lineterminator='\n')


def lagged_matrix(ds: TimeSeriesDataset, nodes: Sequence[LaggedVariable],
                  cutoff: int) -> np.ndarray:
    """Return the ``(T - cutoff) x len(nodes)`` block of lagged columns."""
    T = ds.T
    out = np.empty((T - cutoff, len(nodes)))
    for col, node in enumerate(nodes):
        if node.lag > cutoff:
            raise ContractError(
                f'lag {node.lag} of {node!r} exceeds the window cutoff '
                f'{cutoff}')
        if node.var >= ds.N:
            raise ContractError(
                f'variable index {node.var} out of range for N={ds.N}')
        out[:, col] = ds.values[cutoff - node.lag:T - node.lag, node.var]
    return out


def unique_conditions(conds, exclude=()):
    seen = set(exclude)
    out = []
    for node in conds:
        if node not in seen:
            seen.add(node)
            out.append(node)
    return out


def build_lagged_arrays(
        ds: TimeSeriesDataset, x: LaggedVariable, y: LaggedVariable,
        conds: Sequence[LaggedVariable], tau_max: int,
        cutoff: Optional[int] = None) -> LaggedSampleArrays:
    """Materialize the samples for testing ``x _||_ y | conds``.

    All arrays share the window starting at *cutoff* (``tau_max``
    unless a larger window is requested), so ``n = T - cutoff``.

    :raises ContractError: if a lag exceeds the window
    :raises InsufficientSamplesError: if ``n <= D_Z + 2``"""
    if cutoff is None:
        cutoff = tau_max
    elif cutoff < tau_max:
        raise ContractError(
            f'cutoff {cutoff} must not be smaller than tau_max {tau_max}')
    conds = unique_conditions(conds, exclude=(x, y))
    for node in (x, y, *conds):
        if node.lag > cutoff:
            raise ContractError(
                f'lag {node.lag} of {node!r} exceeds tau_max={tau_max}'
                if cutoff == tau_max else
                f'lag {node.lag} of {node!r} exceeds the window cutoff '
                f'{cutoff}')
    n = ds.T - cutoff
    if n <= len(conds) + 2:
        raise InsufficientSamplesError(
            f'only n={n} samples for a test with {len(conds)} conditions')
    block = lagged_matrix(ds, [x, y, *conds], cutoff)
    return LaggedSampleArrays(
        block[:, 0], block[:, 1], block[:, 2:], x, y, tuple(conds), cutoff,
        ds.fingerprint)
