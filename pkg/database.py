from db_utils import get_connection

def create_tables():
    conn = get_connection()
    c = conn.cursor()

    # SUITE REPORTS TABLE
    c.execute("""
    CREATE TABLE IF NOT EXISTS suite_reports (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        run_id TEXT,
        suite TEXT,
        cases INTEGER,
        violations INTEGER,
        passed INTEGER,
        wall_time REAL,
        config_hash TEXT,
        created_at TEXT,
        body TEXT
    )
    """)

    # REGISTRY SNAPSHOTS TABLE
    c.execute("""
    CREATE TABLE IF NOT EXISTS registry_snapshots (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        path TEXT,
        entries INTEGER,
        created_at TEXT,
        body TEXT
    )
    """)

    conn.commit()
    conn.close()
