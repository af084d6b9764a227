"""HTTP annotation service.

Serves HIT items to the companion UI one at a time, enforces the
no-revisit / must-interact rules server-side, persists every rating
synchronously in a single-file SQLite store, and runs the QC gate when
a session completes. Item kind and control links never leave the
server.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .hits import HIT, HIT_SIZE, qc_hit


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class Store:
    """Single-file SQLite persistence; writes are atomic per rating."""

    def __init__(self, path: str = ":memory:"):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.Lock()
        self._conn.executescript(
            """
            CREATE TABLE IF NOT EXISTS hits (
                hit_id TEXT PRIMARY KEY,
                body TEXT NOT NULL
            );
            CREATE TABLE IF NOT EXISTS sessions (
                session_id TEXT PRIMARY KEY,
                annotator TEXT NOT NULL,
                hit_id TEXT NOT NULL,
                cursor INTEGER NOT NULL,
                created REAL NOT NULL,
                updated REAL NOT NULL,
                UNIQUE (annotator, hit_id)
            );
            CREATE TABLE IF NOT EXISTS ratings (
                session_id TEXT NOT NULL,
                item_index INTEGER NOT NULL,
                side TEXT NOT NULL,
                raw REAL NOT NULL,
                created REAL NOT NULL,
                UNIQUE (session_id, item_index, side)
            );
            CREATE TABLE IF NOT EXISTS qc_results (
                session_id TEXT PRIMARY KEY,
                hit_id TEXT NOT NULL,
                annotator TEXT NOT NULL,
                statistic REAL,
                p_value REAL NOT NULL,
                method TEXT NOT NULL,
                accepted INTEGER NOT NULL
            );
            """
        )
        self._conn.commit()

    def add_hit(self, hit: HIT):
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO hits (hit_id, body) VALUES (?, ?)",
                (hit.hit_id, json.dumps(hit.to_dict())),
            )
            self._conn.commit()

    def get_hit(self, hit_id: str) -> Optional[HIT]:
        row = self._conn.execute(
            "SELECT body FROM hits WHERE hit_id = ?", (hit_id,)
        ).fetchone()
        return HIT.from_dict(json.loads(row[0])) if row else None

    def create_session(self, annotator: str, hit_id: str) -> dict:
        now = time.time()
        session_id = uuid.uuid4().hex
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO sessions (session_id, annotator, hit_id, cursor, created, updated)"
                    " VALUES (?, ?, ?, 0, ?, ?)",
                    (session_id, annotator, hit_id, now, now),
                )
                self._conn.commit()
            except sqlite3.IntegrityError:
                raise ServiceError(409, "SessionExists",
                                   f"annotator {annotator!r} already has a session on {hit_id!r}")
        return {"session_id": session_id, "annotator": annotator,
                "hit_id": hit_id, "cursor": 0}

    def get_session(self, session_id: str) -> dict:
        row = self._conn.execute(
            "SELECT session_id, annotator, hit_id, cursor FROM sessions WHERE session_id = ?",
            (session_id,),
        ).fetchone()
        if row is None:
            raise ServiceError(404, "SessionNotFound", f"no session {session_id!r}")
        return {"session_id": row[0], "annotator": row[1], "hit_id": row[2], "cursor": row[3]}

    def sides_submitted(self, session_id: str, item_index: int) -> set[str]:
        rows = self._conn.execute(
            "SELECT side FROM ratings WHERE session_id = ? AND item_index = ?",
            (session_id, item_index),
        ).fetchall()
        return {r[0] for r in rows}

    def add_rating(self, session_id: str, item_index: int, side: str, raw: float):
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO ratings (session_id, item_index, side, raw, created)"
                    " VALUES (?, ?, ?, ?, ?)",
                    (session_id, item_index, side, raw, time.time()),
                )
            except sqlite3.IntegrityError:
                raise ServiceError(409, "DuplicateRating",
                                   f"side {side!r} of item {item_index} already rated")
            self._conn.commit()

    def advance_cursor(self, session_id: str, cursor: int):
        with self._lock:
            self._conn.execute(
                "UPDATE sessions SET cursor = ?, updated = ? WHERE session_id = ?",
                (cursor, time.time(), session_id),
            )
            self._conn.commit()

    def ratings_of(self, session_id: str) -> dict:
        rows = self._conn.execute(
            "SELECT item_index, side, raw FROM ratings WHERE session_id = ?",
            (session_id,),
        ).fetchall()
        return {(r[0], r[1]): r[2] for r in rows}

    def store_qc(self, session_id: str, hit_id: str, annotator: str, result, accepted: bool):
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO qc_results"
                " (session_id, hit_id, annotator, statistic, p_value, method, accepted)"
                " VALUES (?, ?, ?, ?, ?, ?, ?)",
                (session_id, hit_id, annotator, result.statistic, result.p_value,
                 result.method, int(accepted)),
            )
            self._conn.commit()

    def qc_of_hit(self, hit_id: str) -> list[dict]:
        rows = self._conn.execute(
            "SELECT annotator, statistic, p_value, method, accepted FROM qc_results"
            " WHERE hit_id = ? ORDER BY annotator",
            (hit_id,),
        ).fetchall()
        return [
            {"annotator": r[0], "statistic": r[1], "p_value": r[2],
             "method": r[3], "accepted": bool(r[4])}
            for r in rows
        ]


class SessionCreate(BaseModel):
    annotator: str
    hit: str


class RatingSubmit(BaseModel):
    item: int
    side: str
    raw: float
    interacted: bool


def create_app(store: Optional[Store] = None) -> FastAPI:
    app = FastAPI(title="metricprobe annotation service")
    app.state.store = store or Store()
    # per-session locks so concurrent submits for one session serialize
    session_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def lock_for(session_id: str) -> threading.Lock:
        with locks_guard:
            return session_locks.setdefault(session_id, threading.Lock())

    @app.exception_handler(ServiceError)
    async def service_error_handler(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session(body: SessionCreate):
        st: Store = app.state.store
        if st.get_hit(body.hit) is None:
            raise ServiceError(404, "HitNotFound", f"no HIT {body.hit!r}")
        return st.create_session(body.annotator, body.hit)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return app.state.store.get_session(session_id)

    @app.get("/sessions/{session_id}/next")
    def next_item(session_id: str):
        st: Store = app.state.store
        session = st.get_session(session_id)
        if session["cursor"] >= HIT_SIZE:
            raise ServiceError(409, "SessionComplete", "all items are annotated")
        hit = st.get_hit(session["hit_id"])
        item = hit.items[session["cursor"]]
        # the view never reveals kind, control links, or side roles
        return {
            "item": item.index,
            "total": HIT_SIZE,
            "reference": item.reference,
            "left": item.left,
            "right": item.right,
            "highlight_left": item.highlight_left,
            "highlight_right": item.highlight_right,
        }

    @app.post("/sessions/{session_id}/ratings")
    def submit_rating(session_id: str, body: RatingSubmit):
        st: Store = app.state.store
        with lock_for(session_id):
            session = st.get_session(session_id)
            if session["cursor"] >= HIT_SIZE:
                raise ServiceError(409, "SessionComplete", "all items are annotated")
            if body.item != session["cursor"]:
                raise ServiceError(409, "OutOfOrder",
                                   f"expected item {session['cursor']}, got {body.item}")
            if body.side not in ("left", "right"):
                raise ServiceError(422, "RangeError", f"unknown side {body.side!r}")
            if not 0 <= body.raw <= 100:
                raise ServiceError(422, "RangeError", "raw rating must be in [0, 100]")
            if not body.interacted:
                raise ServiceError(422, "NotInteracted",
                                   "the slider must be interacted with before submitting")
            st.add_rating(session_id, body.item, body.side, body.raw)
            cursor = session["cursor"]
            if st.sides_submitted(session_id, body.item) == {"left", "right"}:
                cursor += 1
                st.advance_cursor(session_id, cursor)
                if cursor == HIT_SIZE:
                    _run_qc(st, session)
            return {"cursor": cursor}

    @app.get("/hits/{hit_id}/qc")
    def hit_qc(hit_id: str):
        st: Store = app.state.store
        if st.get_hit(hit_id) is None:
            raise ServiceError(404, "HitNotFound", f"no HIT {hit_id!r}")
        return {"hit": hit_id, "results": st.qc_of_hit(hit_id)}

    return app


def _run_qc(store: Store, session: dict):
    hit = store.get_hit(session["hit_id"])
    ratings = store.ratings_of(session["session_id"])
    result, accepted = qc_hit(hit, ratings)
    store.store_qc(session["session_id"], session["hit_id"], session["annotator"],
                   result, accepted)


def serve(hits_paths, store_path: str, port: int = 8000, host: str = "127.0.0.1"):
    """Load HIT files into the store and run the service."""
    import uvicorn

    store = Store(store_path)
    for path in hits_paths:
        store.add_hit(HIT.load(path))
    app = create_app(store)
    uvicorn.run(app, host=host, port=port)
