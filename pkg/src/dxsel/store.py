"""Embedded key-value store for live sessions.

Backed by sqlite so in-progress sessions survive a service restart;
``:memory:`` works for tests. Values are JSON documents keyed by
session id. Access is serialized by a process-wide lock; per-session
write ordering is the service's job.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from typing import Iterator


class SessionStore:
    def __init__(self, path: str = ":memory:") -> None:
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS sessions (id TEXT PRIMARY KEY, body TEXT NOT NULL)"
            )
            self._conn.commit()

    def get(self, session_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT body FROM sessions WHERE id = ?", (session_id,)
            ).fetchone()
        return json.loads(row[0]) if row else None

    def put(self, session_id: str, body: dict) -> None:
        payload = json.dumps(body)
        with self._lock:
            self._conn.execute(
                "INSERT INTO sessions (id, body) VALUES (?, ?) "
                "ON CONFLICT(id) DO UPDATE SET body = excluded.body",
                (session_id, payload),
            )
            self._conn.commit()

    def ids(self) -> Iterator[str]:
        with self._lock:
            rows = self._conn.execute("SELECT id FROM sessions").fetchall()
        return (row[0] for row in rows)

    def close(self) -> None:
        with self._lock:
            self._conn.close()
