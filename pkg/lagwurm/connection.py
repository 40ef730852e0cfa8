from contextlib import contextmanager
from contextvars import ContextVar
import sqlite3

from .errors import StoreError

connection = ContextVar('connection')


def execute(*args, conn=None):
    if conn is None:
        try:
            conn = connection.get()
        except LookupError:
            raise StoreError('setup_connection() not called in current'
                             ' context!') from None
    try:
        with conn:
            return conn.execute(*args)
    except sqlite3.Error as e:
        raise StoreError(f'run store operation failed: {e}') from e


def setup_connection(conn):
    """Call this once in each OS thread with a
    :class:`sqlite3.Connection`, before accessing the run store.

    This records the connection and ensures all tables are created."""
    token = connection.set(conn)
    from .records import Record, create_tables
    create_tables(Record, conn)
    return token


def close_connection(token):
    connection.reset(token)


@contextmanager
def open_store(path):
    """Connect to the run store at *path* for the duration of the block.

    ``':memory:'`` gives a private in-memory store."""
    try:
        conn = sqlite3.connect(str(path))
    except sqlite3.Error as e:
        raise StoreError(f'cannot open run store {path}') from e
    token = setup_connection(conn)
    try:
        yield conn
    finally:
        close_connection(token)
        conn.close()
