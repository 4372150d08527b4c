"""Batch ingestion: leaflet CSVs, synonym CSVs, extraction, and translation.

Leaflet rows are validated individually — malformed rows are reported with
their line numbers and skipped, never silently dropped. Header mismatches
abort before anything is written.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from ..drugstore import DrugRecord, DrugRecordError, DrugStore
from ..llm import (
    ChatRequest,
    build_extraction_prompt,
    build_translation_prompt,
    complete_text,
    first_json_object,
)
from ..synonyms import IngredientEntry, IngredientKind, SynonymIndex, load_index

LEAFLET_CSV_HEADER = [
    "Drug_code",
    "Drug_name",
    "Drug_form",
    "ATC",
    "Composition",
    "Excipients",
    "Contraindications",
    "Drug_interactions",
    "Side_effects",
    "Incompatibilities",
]

SYNONYM_CSV_HEADER = ["Ingredient", "English_name", "Synonyms", "Type"]

EXTRACTION_KEYS = (
    "composition",
    "excipients",
    "contraindications",
    "drug_interactions",
    "side_effects",
    "incompatibilities",
)


class CsvHeaderError(ValueError):
    """Raised when a CSV header does not match the expected schema."""


class SynonymCsvError(ValueError):
    """Raised when a synonyms CSV row is invalid; carries the line number."""


class ExtractionError(RuntimeError):
    """Raised when the extraction response lacks the expected field structure."""


@dataclass
class IngestResult:
    stored: int = 0
    row_errors: list[str] = field(default_factory=list)


def _row_to_record(row: Sequence[str]) -> DrugRecord:
    return DrugRecord(
        drug_code=row[0],
        drug_name=row[1],
        drug_form=row[2],
        atc_code=row[3],
        composition=row[4],
        excipients=row[5],
        contraindications=row[6],
        drug_interactions=row[7],
        side_effects=row[8],
        incompatibilities=row[9],
    ).validated()


def read_leaflet_csv(path: Union[str, Path]) -> tuple[list[DrugRecord], list[str]]:
    """Parse a leaflet CSV into records plus per-row diagnostics."""
    records: list[DrugRecord] = []
    errors: list[str] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != LEAFLET_CSV_HEADER:
            raise CsvHeaderError(
                f"leaflet CSV header must be {LEAFLET_CSV_HEADER}, got {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(LEAFLET_CSV_HEADER):
                errors.append(
                    f"line {line_no}: expected {len(LEAFLET_CSV_HEADER)} columns, "
                    f"got {len(row)}"
                )
                continue
            try:
                records.append(_row_to_record(row))
            except DrugRecordError as exc:
                errors.append(f"line {line_no}: {exc}")
    return records, errors


def ingest_leaflet_csv(path: Union[str, Path], store: DrugStore) -> IngestResult:
    """Load a leaflet CSV into the drug store; bad rows are skipped with diagnostics."""
    records, errors = read_leaflet_csv(path)
    stored = store.put_many(records)
    return IngestResult(stored=stored, row_errors=errors)


def export_catalog_csv(
    records: Sequence[DrugRecord], path: Union[str, Path]
) -> None:
    """Write records in the leaflet CSV schema (the generator's output format)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(LEAFLET_CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.drug_code,
                    r.drug_name,
                    r.drug_form,
                    r.atc_code,
                    r.composition,
                    r.excipients,
                    r.contraindications,
                    r.drug_interactions,
                    r.side_effects,
                    r.incompatibilities,
                ]
            )


def ingest_synonyms_csv(path: Union[str, Path]) -> SynonymIndex:
    """Parse an ingredients-synonyms CSV (Synonyms '#'-separated) into an index."""
    entries: list[IngredientEntry] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != SYNONYM_CSV_HEADER:
            raise CsvHeaderError(
                f"synonyms CSV header must be {SYNONYM_CSV_HEADER}, got {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SYNONYM_CSV_HEADER):
                raise SynonymCsvError(
                    f"line {line_no}: expected {len(SYNONYM_CSV_HEADER)} columns, "
                    f"got {len(row)}"
                )
            ingredient, english, synonyms_field, kind_label = row
            try:
                kind = IngredientKind.parse(kind_label)
                entries.append(
                    IngredientEntry(
                        ingredient=ingredient,
                        english_name=english,
                        synonyms=tuple(
                            s for s in synonyms_field.split("#") if s.strip()
                        ),
                        kind=kind,
                    )
                )
            except ValueError as exc:
                raise SynonymCsvError(f"line {line_no}: {exc}") from exc
    return load_index(entries)


def write_synonyms_csv(
    entries: Sequence[IngredientEntry], path: Union[str, Path]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SYNONYM_CSV_HEADER)
        for entry in entries:
            writer.writerow(
                [
                    entry.ingredient,
                    entry.english_name,
                    "#".join(entry.synonyms),
                    entry.kind.value,
                ]
            )


def extract_leaflet_sections(
    leaflet_text: str,
    target_form: str,
    backend,
    model_id: str = "default",
) -> dict[str, str]:
    """Extract form-specific leaflet sections through the chat gateway."""
    system, user = build_extraction_prompt(leaflet_text, target_form)
    raw = complete_text(
        ChatRequest(system, user, model_id=model_id), backend
    )
    obj = first_json_object(raw)
    if obj is None:
        raise ExtractionError(f"extraction response has no JSON object: {raw[:200]!r}")
    missing = [key for key in EXTRACTION_KEYS if key not in obj]
    if missing:
        raise ExtractionError(
            f"extraction response missing key(s): {', '.join(missing)}"
        )
    sections = {}
    for key in EXTRACTION_KEYS:
        value = obj[key]
        if not isinstance(value, str):
            raise ExtractionError(f"extraction key {key!r} is not plain text")
        sections[key] = value
    return sections


def translate_ingredients(
    names: Sequence[str],
    source_language: str,
    backend,
    model_id: str = "default",
    max_workers: int = 4,
) -> list[str]:
    """Translate ingredient names to English, preserving order.

    Already-English names come back unchanged by the prompt's own fallback
    rule. Calls fan out with bounded parallelism.
    """
    if not names:
        return []

    def translate_one(name: str) -> str:
        system, user = build_translation_prompt(name, source_language)
        return complete_text(ChatRequest(system, user, model_id=model_id), backend).strip()

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(translate_one, names))
