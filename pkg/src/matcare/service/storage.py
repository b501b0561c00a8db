"""Embedded persistence for patients, visits, and binary attachments.

SQLite holds the structured records (patients, visit archives, surveys);
audio and images live in a content-addressed blob directory next to the
database. Visits are stored as their event logs plus registration inputs,
so loading a visit replays the log — the same determinism the workflow
tests rely on.
"""

from __future__ import annotations

import hashlib
import json
import re
import sqlite3
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional


class StorageError(RuntimeError):
    pass


class NotFound(StorageError):
    pass


class Conflict(StorageError):
    pass


DEFAULT_MR_PATTERN = r"^[A-Za-z0-9][A-Za-z0-9\-]{0,31}$"


@dataclass(frozen=True)
class PatientRecord:
    mr_number: str
    name: str
    age: Optional[int]
    care_type: str  # public | private
    visit_ids: tuple

    def to_json(self) -> dict:
        return {
            "mr_number": self.mr_number,
            "name": self.name,
            "age": self.age,
            "care_type": self.care_type,
            "visit_ids": list(self.visit_ids),
        }


_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS patients (
    mr_number TEXT PRIMARY KEY,
    body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS visits (
    visit_id TEXT PRIMARY KEY,
    mr_number TEXT NOT NULL,
    body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS surveys (
    visit_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    body TEXT NOT NULL
);
"""


class Store:
    def __init__(self, data_dir: Path,
                 mr_pattern: str = DEFAULT_MR_PATTERN):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.blob_dir = self.data_dir / "blobs"
        self.blob_dir.mkdir(exist_ok=True)
        self.mr_re = re.compile(mr_pattern)
        # The service runs handlers in a thread pool; serialize access
        # with one lock rather than per-thread connections.
        self.db = sqlite3.connect(self.data_dir / "records.sqlite3",
                                  check_same_thread=False)
        self._lock = threading.RLock()
        self.db.executescript(_SCHEMA_SQL)
        self.db.commit()

    def close(self) -> None:
        self.db.close()

    # -- patients ------------------------------------------------------------

    def create_patient(self, mr_number: str, name: str,
                       age: Optional[int], care_type: str) -> PatientRecord:
        if not self.mr_re.match(mr_number):
            raise StorageError(f"malformed mr_number {mr_number!r}")
        if care_type not in ("public", "private"):
            raise StorageError(f"unknown care type {care_type!r}")
        record = PatientRecord(mr_number, name, age, care_type, ())
        try:
            with self._lock, self.db:
                self.db.execute(
                    "INSERT INTO patients (mr_number, body) VALUES (?, ?)",
                    (mr_number, json.dumps(record.to_json())))
        except sqlite3.IntegrityError:
            raise Conflict(f"patient {mr_number} already exists")
        return record

    def get_patient(self, mr_number: str) -> PatientRecord:
        with self._lock:
            row = self.db.execute(
            "SELECT body FROM patients WHERE mr_number = ?",
                (mr_number,)).fetchone()
        if row is None:
            raise NotFound(f"no patient {mr_number}")
        obj = json.loads(row[0])
        return PatientRecord(
            mr_number=obj["mr_number"], name=obj["name"], age=obj["age"],
            care_type=obj["care_type"], visit_ids=tuple(obj["visit_ids"]))

    def _append_visit_id(self, mr_number: str, visit_id: str) -> None:
        record = self.get_patient(mr_number)
        if visit_id in record.visit_ids:
            return
        updated = PatientRecord(record.mr_number, record.name, record.age,
                                record.care_type,
                                record.visit_ids + (visit_id,))
        with self._lock, self.db:
            self.db.execute(
                "UPDATE patients SET body = ? WHERE mr_number = ?",
                (json.dumps(updated.to_json()), mr_number))

    # -- visits --------------------------------------------------------------

    def save_visit(self, visit_id: str, mr_number: str, body: dict) -> None:
        with self._lock, self.db:
            self.db.execute(
                "INSERT INTO visits (visit_id, mr_number, body) VALUES (?, ?, ?) "
                "ON CONFLICT(visit_id) DO UPDATE SET body = excluded.body",
                (visit_id, mr_number, json.dumps(body, sort_keys=True)))
        self._append_visit_id(mr_number, visit_id)

    def load_visit(self, visit_id: str) -> dict:
        with self._lock:
            row = self.db.execute(
                "SELECT body FROM visits WHERE visit_id = ?",
                (visit_id,)).fetchone()
        if row is None:
            raise NotFound(f"no visit {visit_id}")
        return json.loads(row[0])

    def list_visits(self, mr_number: Optional[str] = None) -> List[str]:
        with self._lock:
            if mr_number is None:
                rows = self.db.execute(
                    "SELECT visit_id FROM visits ORDER BY visit_id").fetchall()
            else:
                rows = self.db.execute(
                    "SELECT visit_id FROM visits WHERE mr_number = ? "
                    "ORDER BY visit_id", (mr_number,)).fetchall()
        return [r[0] for r in rows]

    # -- surveys -------------------------------------------------------------

    def add_survey(self, visit_id: str, kind: str, body: dict) -> None:
        with self._lock, self.db:
            self.db.execute(
                "INSERT INTO surveys (visit_id, kind, body) VALUES (?, ?, ?)",
                (visit_id, kind, json.dumps(body, sort_keys=True)))

    def get_surveys(self, visit_id: str) -> List[dict]:
        with self._lock:
            rows = self.db.execute(
                "SELECT kind, body FROM surveys WHERE visit_id = ? "
                "ORDER BY rowid", (visit_id,)).fetchall()
        return [{"kind": kind, **json.loads(body)} for kind, body in rows]

    # -- blobs ---------------------------------------------------------------

    def put_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.blob_dir / digest
        if not path.exists():
            path.write_bytes(data)
        return digest

    def get_blob(self, digest: str) -> bytes:
        path = self.blob_dir / digest
        if not path.exists():
            raise NotFound(f"no blob {digest}")
        return path.read_bytes()
