import os
import sqlite3

DB_NAME = os.environ.get("TREE_SIBLINGS_DB", "verification.db")

def get_connection():
    """
    Returns a SQLite connection with WAL mode enabled
    so concurrent suite workers do not hit locked-database errors.
    """
    conn = sqlite3.connect(DB_NAME, check_same_thread=False, timeout=10)
    conn.execute("PRAGMA journal_mode=WAL;")
    return conn
