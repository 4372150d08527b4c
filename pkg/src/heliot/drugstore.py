"""Persistent store of drug records keyed by ministerial code.

SQLite-backed; the six text-heavy leaflet fields are stored as Zstandard
level-3 compressed blobs. Reads go through a small LRU cache. Writes are
serialized behind a lock; readers always see a complete record.
"""

from __future__ import annotations

import os
import re
import sqlite3
import threading
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from .storage import LRUCache, compress_text, decompress_text

# WHO ATC shape: letter, digit pair, then optional letter, letter, digit pair.
# Prefixes at each level are valid (lengths 1, 3, 4, 5, 7).
ATC_PATTERN = re.compile(r"^[A-Z](?:\d{2}(?:[A-Z](?:[A-Z](?:\d{2})?)?)?)?$")

TEXT_FIELDS = (
    "composition",
    "excipients",
    "contraindications",
    "drug_interactions",
    "side_effects",
    "incompatibilities",
)


class DrugRecordError(ValueError):
    """Raised when a record violates its invariants; names the bad field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


class StoreIOError(OSError):
    """Raised when the backing database cannot be opened or written."""


@dataclass(frozen=True)
class DrugRecord:
    """One pharmaceutical product with its form-specific leaflet fields."""

    drug_code: str
    drug_name: str
    drug_form: str
    atc_code: str
    composition: str = ""
    excipients: str = ""
    contraindications: str = ""
    drug_interactions: str = ""
    side_effects: str = ""
    incompatibilities: str = ""

    def validated(self) -> "DrugRecord":
        """Return a normalized copy (ATC uppercased) or raise DrugRecordError."""
        if not self.drug_code or not self.drug_code.strip():
            raise DrugRecordError("drug_code", "must be non-empty")
        atc = self.atc_code.strip().upper()
        if not ATC_PATTERN.match(atc):
            raise DrugRecordError(
                "atc_code", f"{self.atc_code!r} does not match the WHO ATC shape"
            )
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, str):
                raise DrugRecordError(f.name, "must be a string (may be empty)")
        if atc != self.atc_code:
            return replace(self, atc_code=atc)
        return self


@dataclass(frozen=True)
class StoreStats:
    record_count: int
    bytes_on_disk: int
    cache_hit_rate: float


_SCHEMA = """
CREATE TABLE IF NOT EXISTS drugs (
    drug_code TEXT PRIMARY KEY,
    drug_name TEXT NOT NULL,
    drug_form TEXT NOT NULL,
    atc_code TEXT NOT NULL,
    composition BLOB NOT NULL,
    excipients BLOB NOT NULL,
    contraindications BLOB NOT NULL,
    drug_interactions BLOB NOT NULL,
    side_effects BLOB NOT NULL,
    incompatibilities BLOB NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_drugs_atc ON drugs (atc_code, drug_code);
"""


class DrugStore:
    """Drug-record store over SQLite with compressed text columns.

    Pass ":memory:" for an ephemeral store. The cache capacity is configurable;
    0 disables caching.
    """

    def __init__(self, path: Union[str, Path], cache_capacity: int = 256):
        self._path = str(path)
        self._lock = threading.RLock()
        self._cache: LRUCache[str, DrugRecord] = LRUCache(cache_capacity)
        try:
            self._conn = sqlite3.connect(self._path, check_same_thread=False)
            if self._path != ":memory:":
                self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()
        except sqlite3.Error as exc:
            raise StoreIOError(f"cannot open drug store at {self._path}: {exc}") from exc

    def put(self, record: DrugRecord) -> None:
        """Insert or atomically replace the record for its code."""
        record = record.validated()
        row = (
            record.drug_code,
            record.drug_name,
            record.drug_form,
            record.atc_code,
            *(compress_text(getattr(record, name)) for name in TEXT_FIELDS),
        )
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT OR REPLACE INTO drugs VALUES (?,?,?,?,?,?,?,?,?,?)", row
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StoreIOError(
                    f"write failed for {record.drug_code} at {self._path}: {exc}"
                ) from exc
            self._cache.invalidate(record.drug_code)

    def put_many(self, records: Iterable[DrugRecord]) -> int:
        count = 0
        for record in records:
            self.put(record)
            count += 1
        return count

    def get(self, drug_code: str) -> Optional[DrugRecord]:
        """Return the most recently written record for the code, or None."""
        cached = self._cache.get(drug_code)
        if cached is not None:
            return cached
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM drugs WHERE drug_code = ?", (drug_code,)
            ).fetchone()
        if row is None:
            return None
        record = self._row_to_record(row)
        self._cache.put(drug_code, record)
        return record

    def query_by_atc_prefix(self, prefix: str) -> list[DrugRecord]:
        """All records whose ATC code starts with the prefix, in drug-code order."""
        if not prefix:
            raise ValueError("ATC prefix must be non-empty")
        prefix = prefix.upper()
        # LIKE with escaped wildcards keeps the prefix literal.
        escaped = prefix.replace("\\", "\\\\").replace("%", "\\%").replace("_", "\\_")
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM drugs WHERE atc_code LIKE ? ESCAPE '\\' "
                "ORDER BY drug_code",
                (escaped + "%",),
            ).fetchall()
        return [self._row_to_record(row) for row in rows]

    def query_names_by_atc_prefix(self, prefix: str) -> list[tuple[str, str, str]]:
        """Lightweight projection of query_by_atc_prefix: (code, name, atc) only."""
        if not prefix:
            raise ValueError("ATC prefix must be non-empty")
        prefix = prefix.upper()
        escaped = prefix.replace("\\", "\\\\").replace("%", "\\%").replace("_", "\\_")
        with self._lock:
            rows = self._conn.execute(
                "SELECT drug_code, drug_name, atc_code FROM drugs "
                "WHERE atc_code LIKE ? ESCAPE '\\' ORDER BY drug_code",
                (escaped + "%",),
            ).fetchall()
        return rows

    def count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM drugs").fetchone()[0]

    def compact_and_stats(self) -> StoreStats:
        """Compact the database file and report current stats."""
        with self._lock:
            try:
                self._conn.execute("VACUUM")
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StoreIOError(f"compaction failed at {self._path}: {exc}") from exc
            record_count = self.count()
        if self._path == ":memory:":
            bytes_on_disk = 0
        else:
            bytes_on_disk = os.path.getsize(self._path)
        return StoreStats(record_count, bytes_on_disk, self._cache.hit_rate)

    @property
    def cache(self) -> LRUCache:
        return self._cache

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "DrugStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    @staticmethod
    def _row_to_record(row: tuple) -> DrugRecord:
        code, name, form, atc = row[:4]
        texts = [decompress_text(blob) for blob in row[4:]]
        return DrugRecord(code, name, form, atc, *texts)
