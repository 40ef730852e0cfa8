"""Precomputed null distributions of the GPDC statistic.

Under the null hypothesis the copula-transformed residuals are
independent uniforms, so the distribution of their distance correlation
only depends on the sample size *n*. Tables are built once per *n*,
kept in memory and, when a cache directory is given, in sidecar files
named ``gpdc_null_n{n}_b{B}_s{seed}.bin``.

A table sent to a worker process is frozen: it serves the sizes built
before dispatch (or found in the cache directory) and refuses to build
others, so every size must be prepared with :meth:`GpdcNullTable.ensure`
in the main process.

A sidecar file starts with the header ``<8sHIII`` (magic, version, n,
B_null, seed) followed by B_null sorted little-endian doubles.
"""

import logging
import os
from pathlib import Path
import struct
import tempfile
import threading
from typing import Dict, Iterable, Optional

import numpy as np

from .distcorr import copula_transform, distance_correlation
from .errors import ContractError, NullTableError
from .seeding import derive_rng

logger = logging.getLogger(__name__)

MAGIC = b'LWGPDCNL'
VERSION = 1
HEADER = struct.Struct('<8sHIII')
MIN_B_NULL = 100


def null_statistics(n, B_null, seed) -> np.ndarray:
    """Draw *B_null* null statistics for sample size *n*, sorted."""
    rng = derive_rng(seed, n)
    stats = np.empty(B_null)
    for b in range(B_null):
        u = copula_transform(rng.random(n))
        v = copula_transform(rng.random(n))
        stats[b] = distance_correlation(u, v)
    stats.sort()
    return stats


def sidecar_name(n, B_null, seed):
    return f'gpdc_null_n{n}_b{B_null}_s{seed}.bin'


def write_sidecar(path, n, B_null, seed, values):
    """Atomically write one table to *path*.

    :raises NullTableError: on i/o failure"""
    path = Path(path)
    payload = HEADER.pack(MAGIC, VERSION, n, B_null, seed) + \
        np.asarray(values, dtype='<f8').tobytes()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name,
                                   suffix='.tmp')
        try:
            with os.fdopen(fd, 'wb') as f:
                f.write(payload)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as e:
        raise NullTableError(f'cannot write null table {path}') from e


def read_sidecar(path, n, B_null, seed) -> np.ndarray:
    """Read and validate one table.

    :raises NullTableError: if the file is unreadable or was built for a
        different key"""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise NullTableError(f'cannot read null table {path}') from e
    if len(data) < HEADER.size:
        raise NullTableError(f'{path} is truncated')
    magic, version, hn, hb, hseed = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise NullTableError(f'{path} is not a GPDC null table')
    if version != VERSION:
        raise NullTableError(
            f'{path} has version {version}, expected {VERSION}')
    if (hn, hb, hseed) != (n, B_null, seed):
        raise NullTableError(
            f'{path} holds the table for n={hn}, B_null={hb}, '
            f'seed={hseed}, expected n={n}, B_null={B_null}, seed={seed}')
    if len(data) != HEADER.size + 8 * B_null:
        raise NullTableError(f'{path} has a wrong payload size')
    return np.frombuffer(data, dtype='<f8', offset=HEADER.size).astype(
        np.float64)


class GpdcNullTable:
    """Sorted null statistics per sample size, built on demand.

    :param int B_null: Number of null statistics per sample size
    :param int seed: Seed of the null draws; each size uses its own
        stream derived from ``(seed, n)``
    :param cache_dir: Directory for sidecar files, or ``None`` to keep
        tables in memory only
    """

    def __init__(self, B_null=1000, seed=0, cache_dir=None):
        if B_null < MIN_B_NULL:
            raise ContractError(
                f'B_null must be at least {MIN_B_NULL}, got {B_null}')
        self.B_null = B_null
        self.seed = seed
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self._tables: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()
        self.frozen = False
        if self.cache_dir is None:
            logger.info('GPDC null tables for B_null=%d, seed=%d are kept '
                        'in memory only', B_null, seed)

    def __getstate__(self):
        state = self.__dict__.copy()
        del state['_lock']
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()
        self.frozen = True

    def __contains__(self, n):
        return n in self._tables

    def __len__(self):
        return len(self._tables)

    def sizes(self):
        return sorted(self._tables)

    def sidecar_path(self, n) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        return self.cache_dir / sidecar_name(n, self.B_null, self.seed)

    def get(self, n) -> np.ndarray:
        """Return the sorted table for *n*, loading or building it once."""
        table = self._tables.get(n)
        if table is not None:
            return table
        with self._lock:
            table = self._tables.get(n)
            if table is None:
                table = self._load_or_build(n)
                table.flags.writeable = False
                self._tables[n] = table
        return table

    def ensure(self, sizes: Iterable[int]) -> None:
        """Load or build the tables of all *sizes* now."""
        for n in sorted(set(int(n) for n in sizes)):
            self.get(n)

    def _load_or_build(self, n):
        path = self.sidecar_path(n)
        if path is not None and path.exists():
            logger.debug('loading GPDC null table %s', path)
            return read_sidecar(path, n, self.B_null, self.seed)
        if self.frozen:
            raise NullTableError(
                f'null table for n={n} was not prebuilt before dispatch '
                f'(have {self.sizes()})')
        logger.info('building GPDC null table for n=%d, B_null=%d',
                    n, self.B_null)
        table = null_statistics(n, self.B_null, self.seed)
        if path is not None:
            write_sidecar(path, n, self.B_null, self.seed, table)
        return table

    def p_value(self, n, statistic) -> float:
        """Fraction of null statistics greater than or equal to *statistic*."""
        table = self.get(n)
        below = np.searchsorted(table, statistic, side='left')
        return float(len(table) - below) / len(table)

    def quantile(self, n, q) -> float:
        return float(np.quantile(self.get(n), q))


def build_gpdc_null_table(sample_sizes: Iterable[int], B_null=1000, seed=0,
                          cache_dir=None) -> GpdcNullTable:
    """Build (or load) the tables for all *sample_sizes*.

    :raises ContractError: if ``B_null < 100``
    :raises NullTableError: on sidecar i/o failure"""
    table = GpdcNullTable(B_null=B_null, seed=seed, cache_dir=cache_dir)
    table.ensure(sample_sizes)
    return table
