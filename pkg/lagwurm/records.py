"""Dataclass-backed tables of the benchmark run store."""

from dataclasses import dataclass, field
import json
from types import MappingProxyType
from typing import (
    Any, ClassVar, Dict, Generic, Iterator, Optional, Tuple, Type, TypeVar,
    get_type_hints)

from . import sql
from .connection import execute
from .errors import StoreError


def table_fields(table):
    return {
        key: value for key, value in get_type_hints(table).items()
        if not key.startswith('_') and key != 'rowid'}


class TableMeta(type):
    def __new__(cls, clsname, bases, classdict, name=None, abstract=False,
                indexes=()):
        t = super().__new__(cls, clsname, bases, classdict)
        t.__abstract__ = abstract
        if abstract:
            t.__table_name__ = '<abstract table>'
        else:
            t.__table_name__ = name or clsname.lower()
            t.__fields_info__ = MappingProxyType(table_fields(t))
            t.__indexes__ = tuple(indexes)
        return t

    def __iter__(self):
        """Iterate over all rows of the table.

        .. note:: This method accesses the connected store.

        """
        return iter(self.query())

    def __len__(self):
        """The total number of rows in this table.

        .. note:: This method accesses the connected store.

        """
        return len(self.query())

    def query(self, **kwargs):
        """Create a query matching fields equal to the given values.

        Merely creating a query does not access the store.

        :rtype: Query"""
        return Query(self, kwargs)


@dataclass
class Record(metaclass=TableMeta, abstract=True):
    """Baseclass of the run store tables. Tables must be dataclasses.

    Use the keyword arguments *name* and *indexes* in the class
    definition to set the table name and the indexed column groups."""
    __fields_info__: ClassVar[Dict[str, type]]
    __indexes__: ClassVar[Tuple[Tuple[str, ...], ...]]
    __abstract__: ClassVar[bool]
    __table_name__: ClassVar[str]

    rowid: Optional[int] = field(
        init=False, default=None, compare=False, repr=False)

    def insert(self):
        """Insert a new row into the store.

        .. note:: This method accesses the connected store.

        """
        if self.rowid is not None:
            raise StoreError(f'{self!r} is already stored')
        cursor = execute(sql.insert(type(self)), self._encode_row())
        self.rowid = cursor.lastrowid

    def _encode_row(self):
        return {
            key: sql.encode_value(ty, getattr(self, key))
            for key, ty in self.__fields_info__.items()}


def decode_row(table, row):
    rowid, *values = row
    item = table(**{
        name: sql.decode_value(ty, value)
        for (name, ty), value in zip(table.__fields_info__.items(), values)})
    item.rowid = rowid
    return item


def create_tables(tbl, conn):
    for table in tbl.__subclasses__():
        if not table.__abstract__:
            execute(sql.create(table), conn=conn)
            for create_index_query in sql.create_indexes(table):
                execute(create_index_query, conn=conn)
        create_tables(table, conn)


T = TypeVar('T')


class Query(Generic[T]):
    """Rows of *table* whose fields equal the given *filters*."""

    def __init__(self, table: Type[T], filters: Dict[str, Any]) -> None:
        self.table = table
        for key in filters:
            if key not in table.__fields_info__ and key != 'rowid':
                raise StoreError(f'invalid query: {table.__name__}.{key} '
                                 'does not exist')
        self.values = {
            key: (value if key == 'rowid' else
                  sql.encode_value(table.__fields_info__[key], value))
            for key, value in filters.items()}
        self.comparisons = ' and '.join(
            f'{key} is null' if value is None else f'{key}=:{key}'
            for key, value in self.values.items())
        self.values = {key: value for key, value in self.values.items()
                       if value is not None}

    def __len__(self) -> int:
        """Returns the number of matching rows.

        .. note:: This method accesses the connected store.

        """
        c, = execute(sql.count(self.table, self.comparisons),
                     self.values).fetchone()
        return c

    def select_with_limit(self, limit: Optional[int] = None) -> Iterator[T]:
        if limit is not None:
            values = {'_limit_': limit, **self.values}
        else:
            values = self.values
        for row in execute(sql.select(self.table, self.comparisons,
                                      limit is not None), values):
            yield decode_row(self.table, row)

    def __iter__(self) -> Iterator[T]:
        return self.select_with_limit()

    def one(self) -> T:
        """Return the only matching row.

        :raises StoreError: if there are zero or several matches"""
        rows = list(self.select_with_limit(2))
        if len(rows) != 1:
            raise StoreError(
                f'expected one {self.table.__name__} row, got '
                f'{"none" if not rows else "several"}')
        return rows[0]

    def delete(self) -> int:
        """Delete the matching rows and return their number.

        .. warning:: An unfiltered query deletes all rows of the table
        """
        return execute(sql.delete(self.table, self.comparisons),
                       self.values).rowcount


@dataclass
class NetworkRecord(Record, name='networks', indexes=[('setting', 'net')]):
    """One drawn model of an experiment setting."""
    setting: str
    net: int
    seed: int
    spec_json: str
    truth_json: str

    def truth(self):
        from .synthgen import GroundTruthGraph
        return GroundTruthGraph.from_json(self.truth_json)


@dataclass
class RunRecord(Record, name='runs',
                indexes=[('setting', 'method'), ('setting', 'net')]):
    """One method applied to one realization.

    *status* is ``'ok'`` with the graph JSON, or ``'failed'`` with the
    error message."""
    setting: str
    net: int
    rep: int
    method: str
    status: str
    autocorr_json: str
    graph_json: Optional[str] = None
    error: Optional[str] = None
    runtime_ms: Optional[float] = None

    @property
    def ok(self):
        return self.status == 'ok'

    def graph(self):
        from .graph import TimeSeriesGraph
        return TimeSeriesGraph.from_json(self.graph_json)

    def autocorrelations(self):
        return json.loads(self.autocorr_json)
