"""Longitudinal store of free-text clinical notes per patient.

Notes are immutable; corrections are new notes. The merge helper combines
historical notes with the current one into the narrative handed to the
decision prompt, evicting oldest history first when over the context cap.
"""

from __future__ import annotations

import csv
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .drugstore import StoreIOError
from .storage import compress_text, decompress_text

MERGE_CAP_CHARS = 16_000
TRUNCATION_MARKER = "[OLDER HISTORY TRUNCATED]"

PATIENT_CSV_HEADER = ["Patient_ID", "Timestamp", "Source", "Text"]


class NoteSource(Enum):
    MANUAL = "manual"
    BATCH = "batch"
    API = "api"


class NoteError(ValueError):
    """Raised when a clinical note violates its invariants."""


@dataclass(frozen=True)
class ClinicalNote:
    patient_id: str
    timestamp: datetime
    text: str
    source: NoteSource = NoteSource.MANUAL

    def validated(self, now: Optional[datetime] = None) -> "ClinicalNote":
        if not self.patient_id.strip():
            raise NoteError("patient_id must be non-empty")
        if not self.text.strip():
            raise NoteError("note text must be non-empty")
        if self.timestamp.tzinfo is None:
            raise NoteError("timestamp must be timezone-aware (UTC)")
        now = now or datetime.now(timezone.utc)
        if self.timestamp > now:
            raise NoteError("timestamp must not be in the future")
        return self


@dataclass(frozen=True)
class PatientHistory:
    patient_id: str
    notes: tuple[ClinicalNote, ...]


_SCHEMA = """
CREATE TABLE IF NOT EXISTS notes (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    patient_id TEXT NOT NULL,
    ts TEXT NOT NULL,
    source TEXT NOT NULL,
    text BLOB NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_notes_patient ON notes (patient_id, ts, seq);
"""


class PatientStore:
    """Append-only note store; same SQLite+zstd layer as the drug store."""

    def __init__(self, path: Union[str, Path]):
        self._path = str(path)
        self._lock = threading.RLock()
        try:
            self._conn = sqlite3.connect(self._path, check_same_thread=False)
            if self._path != ":memory:":
                self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()
        except sqlite3.Error as exc:
            raise StoreIOError(
                f"cannot open patient store at {self._path}: {exc}"
            ) from exc

    def append(self, note: ClinicalNote) -> None:
        note = note.validated()
        ts = note.timestamp.astimezone(timezone.utc).isoformat()
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO notes (patient_id, ts, source, text) VALUES (?,?,?,?)",
                    (note.patient_id, ts, note.source.value, compress_text(note.text)),
                )
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StoreIOError(
                    f"append failed for {note.patient_id} at {self._path}: {exc}"
                ) from exc

    def get_history(self, patient_id: str) -> PatientHistory:
        """All notes for the patient, oldest first, ties by insertion order."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT patient_id, ts, source, text FROM notes "
                "WHERE patient_id = ? ORDER BY ts, seq",
                (patient_id,),
            ).fetchall()
        notes = tuple(
            ClinicalNote(
                patient_id=row[0],
                timestamp=datetime.fromisoformat(row[1]),
                text=decompress_text(row[3]),
                source=NoteSource(row[2]),
            )
            for row in rows
        )
        return PatientHistory(patient_id=patient_id, notes=notes)

    def export_csv(self, path: Union[str, Path]) -> int:
        with self._lock:
            rows = self._conn.execute(
                "SELECT patient_id, ts, source, text FROM notes ORDER BY patient_id, ts, seq"
            ).fetchall()
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(PATIENT_CSV_HEADER)
            for patient_id, ts, source, blob in rows:
                writer.writerow([patient_id, ts, source, decompress_text(blob)])
        return len(rows)

    def import_csv(self, path: Union[str, Path]) -> int:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != PATIENT_CSV_HEADER:
                raise NoteError(
                    f"patient CSV header must be {PATIENT_CSV_HEADER}, got {header}"
                )
            count = 0
            for row in reader:
                if len(row) != 4:
                    raise NoteError(f"malformed patient CSV row: {row}")
                patient_id, ts, source, text = row
                self.append(
                    ClinicalNote(
                        patient_id=patient_id,
                        timestamp=datetime.fromisoformat(ts),
                        text=text,
                        source=NoteSource(source),
                    )
                )
                count += 1
        return count

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "PatientStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def merge_for_prompt(
    current: str,
    history: Optional[PatientHistory] = None,
    cap: int = MERGE_CAP_CHARS,
) -> str:
    """Combine history (oldest first, dated) and the current note, bounded by cap.

    Oldest history is evicted first when the narrative exceeds the cap, and a
    truncation marker is prepended. The current note is always kept verbatim.
    """
    notes = history.notes if history else ()
    if not current.strip() and not notes:
        raise NoteError("nothing to assess: no current note and no history")

    history_blocks = [
        f"[{note.timestamp.astimezone(timezone.utc).isoformat()}]\n{note.text}"
        for note in notes
    ]
    current_block = f"CURRENT NOTE:\n{current}"

    def assemble(blocks: list[str], truncated: bool) -> str:
        parts = ([TRUNCATION_MARKER] if truncated else []) + blocks + [current_block]
        return "\n\n".join(parts)

    narrative = assemble(history_blocks, truncated=False)
    dropped = 0
    while len(narrative) > cap and dropped < len(history_blocks):
        dropped += 1
        narrative = assemble(history_blocks[dropped:], truncated=True)
    return narrative
