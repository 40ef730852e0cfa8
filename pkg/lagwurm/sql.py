from typing import NamedTuple, Optional, Union, get_args, get_origin


class ColumnType(NamedTuple):
    sql_type: str
    encode: callable
    decode: callable


TYPE_MAPPING = {}


def passthrough(x):
    return x


def register_type(python_type, sql_type, *, encode=passthrough,
                  decode=passthrough):
    """Registers a type for use in record fields.

    :param type python_type: The type to register
    :param str sql_type: The SQLite column type
    :param encode: Prepares a value for storage
    :param decode: Interprets a stored value"""
    assert python_type not in TYPE_MAPPING
    TYPE_MAPPING[python_type] = ColumnType(sql_type, encode, decode)


def unwrap_optional(ty):
    """Return ``(inner type, nullable)`` for ``Optional[inner]``."""
    if get_origin(ty) is Union:
        args = [arg for arg in get_args(ty) if arg is not type(None)]
        if len(args) == 1 and len(get_args(ty)) == 2:
            return args[0], True
    return ty, False


def column_type(ty) -> ColumnType:
    inner, _ = unwrap_optional(ty)
    return TYPE_MAPPING[inner]


def encode_value(ty, value):
    if value is None:
        return None
    return column_type(ty).encode(value)


def decode_value(ty, stored):
    if stored is None:
        return None
    return column_type(ty).decode(stored)


def create_fields(table):
    return ", ".join(
        f'{name} {column_type(ty).sql_type}'
        f'{"" if unwrap_optional(ty)[1] else " NOT NULL"}'
        for name, ty in table.__fields_info__.items())


def create(table):
    return (
        f'create table if not exists {table.__table_name__}'
        f'(rowid INTEGER PRIMARY KEY, {create_fields(table)})')


def create_indexes(table):
    table_name = table.__table_name__
    for columns in table.__indexes__:
        yield (
            f'create index if not exists'
            f' {table_name}_{"_".join(columns)}_index on {table_name} '
            f'({", ".join(columns)})')


def where_clause(where):
    return f'where {where}' if where else ''


def count(table, where=None):
    return (f'select count(*) from {table.__table_name__} '
            f'{where_clause(where)}')


def select(table, where=None, limit=False):
    columns = ', '.join(['rowid', *table.__fields_info__])
    limit_clause = 'limit :_limit_' if limit else ''
    return (f'select {columns} from {table.__table_name__} '
            f'{where_clause(where)} order by rowid {limit_clause}')


def insert(table):
    columns = list(table.__fields_info__)
    return (f'insert into {table.__table_name__} ({", ".join(columns)}) '
            f'values({", ".join(":" + column for column in columns)})')


def delete(table, where=None):
    return f'delete from {table.__table_name__} {where_clause(where)}'


register_type(str, 'TEXT')
register_type(int, 'INTEGER')
register_type(float, 'REAL')
register_type(bool, 'INTEGER', encode=int, decode=bool)
