"""The decision controller: retrieval, prompt assembly, streaming, parsing.

Per request it fetches the drug record, looks up same-class drugs, expands
ingredient synonyms, and retrieves patient history concurrently; translates
non-English narratives; streams the backend response to the caller; and
parses the structured assessment. The alert on the final assessment is always
produced by the domain derivation — parse failures surface as errors, never
as fabricated verdicts.
"""

from __future__ import annotations

import csv
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence, Union

from .domain import (
    Assessment,
    ClassificationCategory,
    AlertType,
    LabelError,
    ReactionType,
)
from .drugstore import DrugRecord, DrugStore
from .llm import (
    ChatChunk,
    ChatRequest,
    GatewayError,
    PromptContext,
    build_decision_prompt,
    build_translation_prompt,
    complete_streaming,
    complete_text,
    first_json_object,
)
from .patients import PatientHistory, PatientStore, merge_for_prompt
from .synonyms import SynonymIndex, normalize_name

# ATC level 4 (chemical subgroup) is the first five characters of a full code.
ATC_CLASS_PREFIX_LEN = 5

EXCIPIENT_GROUPS_HEADER = ["Group", "Members"]


class DrugNotFoundError(LookupError):
    def __init__(self, drug_code: str):
        super().__init__(f"no drug record for code {drug_code!r}")
        self.drug_code = drug_code


class AssessmentError(RuntimeError):
    """The assessment could not be completed; no verdict was produced."""


class ResponseParseError(AssessmentError):
    """Backend response did not contain a well-formed assessment object."""

    def __init__(self, message: str, raw_response: str):
        super().__init__(message)
        self.raw_response = raw_response


@dataclass(frozen=True)
class AssessmentRequest:
    drug_code: str
    patient_id: Optional[str] = None
    current_note: str = ""
    language_hint: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.drug_code.strip():
            raise ValueError("drug_code must be non-empty")
        if self.patient_id is None and not self.current_note.strip():
            raise ValueError("request needs a clinical note or a patient id")


@dataclass(frozen=True)
class ExcipientGroup:
    """A curated family of chemically cross-reactive excipients."""

    name: str
    members: tuple[str, ...]


def load_excipient_groups(
    path: Union[str, Path, None] = None,
) -> tuple[ExcipientGroup, ...]:
    """Load the curated cross-reactivity table (packaged default when no path)."""
    if path is None:
        source = resources.files("heliot.data").joinpath("excipient_groups.csv")
        text = source.read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header != EXCIPIENT_GROUPS_HEADER:
        raise ValueError(
            f"excipient group CSV header must be {EXCIPIENT_GROUPS_HEADER}, got {header}"
        )
    groups = []
    for row in reader:
        if not row:
            continue
        name, members = row[0], row[1] if len(row) > 1 else ""
        groups.append(
            ExcipientGroup(
                name=name,
                members=tuple(m.strip() for m in members.split("#") if m.strip()),
            )
        )
    return tuple(groups)


@dataclass(frozen=True)
class CrossReactivityContext:
    """Class siblings and excipient chemical-group matches for one drug."""

    same_class_drugs: tuple[tuple[str, str], ...]  # (drug_name, atc_code)
    excipient_group_matches: tuple[tuple[ExcipientGroup, tuple[str, ...]], ...]


@dataclass(frozen=True)
class ParsedResponse:
    analysis: str
    classification: ClassificationCategory
    reaction: ReactionType


# The output-format block embeds these phrases in the value positions; tolerate
# backends that echo them.
_LABEL_PREFIXES = ("final response:", "reaction type:")


def _clean_label(value: str) -> str:
    text = value.strip()
    lowered = text.casefold()
    for prefix in _LABEL_PREFIXES:
        if lowered.startswith(prefix):
            return text[len(prefix) :].strip()
    return text


def parse_assessment(raw: str) -> ParsedResponse:
    """Extract (analysis, classification, reaction) from a backend response.

    Locates the first balanced JSON object, tolerating surrounding prose and
    code fences. Missing keys or labels outside the closed vocabulary are
    errors.
    """
    obj = first_json_object(raw)
    if obj is None:
        raise ResponseParseError(
            "no structured assessment object found in response", raw
        )
    missing = [key for key in ("a", "r", "rt") if key not in obj]
    if missing:
        raise ResponseParseError(
            f"assessment object is missing key(s): {', '.join(missing)}", raw
        )
    try:
        classification = ClassificationCategory.parse(_clean_label(str(obj["r"])))
        reaction = ReactionType.parse(_clean_label(str(obj["rt"])))
    except LabelError as exc:
        raise ResponseParseError(str(exc), raw) from exc
    return ParsedResponse(str(obj["a"]), classification, reaction)


def serialize_assessment(
    analysis: str, classification: ClassificationCategory, reaction: ReactionType
) -> str:
    """Inverse of parse_assessment for well-formed single-object responses."""
    return json.dumps(
        {"a": analysis, "r": classification.display, "rt": reaction.display}
    )


def baseline_assess(classification: ClassificationCategory) -> AlertType:
    """Traditional-CDSS comparator: interrupt on anything potentially reactive.

    Ignores tolerance, severity, and the non-interruptive channel.
    """
    if classification in (
        ClassificationCategory.NO_DOCUMENTED_REACTIONS,
        ClassificationCategory.NO_REACTIVITY_TO_PRESCRIBED_DRUG,
    ):
        return AlertType.NONE
    return AlertType.INTERRUPTIVE


class AssessmentStream:
    """Single-use stream of chat chunks; `final` is available once drained."""

    def __init__(
        self,
        chunks: Iterator[ChatChunk],
        finalize: Callable[[str], Assessment],
    ):
        self._final: Optional[Assessment] = None
        self._iter = self._run(chunks, finalize)

    def _run(self, chunks: Iterator[ChatChunk], finalize) -> Iterator[ChatChunk]:
        parts: list[str] = []
        try:
            for chunk in chunks:
                parts.append(chunk.delta_text)
                yield chunk
        except GatewayError as exc:
            raise AssessmentError(f"chat backend failed: {exc}") from exc
        self._final = finalize("".join(parts))

    def __iter__(self) -> Iterator[ChatChunk]:
        return self._iter

    def __next__(self) -> ChatChunk:
        return next(self._iter)

    @property
    def final(self) -> Assessment:
        if self._final is None:
            raise AssessmentError("assessment stream has not been fully consumed")
        return self._final

    def drain(self) -> Assessment:
        for _ in self._iter:
            pass
        return self.final


_FIELD_SPLIT_RE = re.compile(r"[;\n]+")
_PARENTHETICAL_RE = re.compile(r"\([^)]*\)")


def split_ingredient_field(text: str) -> list[str]:
    """Split a free-text composition/excipients field into item strings."""
    return [part.strip() for part in _FIELD_SPLIT_RE.split(text) if part.strip()]


def strip_dosage_annotations(item: str) -> str:
    """Drop parenthetical dosage annotations from an ingredient item."""
    return _PARENTHETICAL_RE.sub("", item).strip()


@dataclass(frozen=True)
class ResolvedField:
    display: tuple[str, ...]  # canonical names with dosage annotations preserved
    canonical: tuple[str, ...]  # names used for matching
    unresolved: tuple[str, ...]


class DecisionEngine:
    """Orchestrates one assessment end to end. Stateless per request."""

    def __init__(
        self,
        drugs: DrugStore,
        backend,
        synonyms: Optional[SynonymIndex] = None,
        patients: Optional[PatientStore] = None,
        excipient_groups: Optional[Sequence[ExcipientGroup]] = None,
        model_id: str = "default",
        max_workers: int = 4,
        max_listed_class_drugs: int = 20,
    ):
        self._drugs = drugs
        self._backend = backend
        self._synonyms = synonyms or SynonymIndex(())
        self._patients = patients
        self._groups = tuple(
            excipient_groups if excipient_groups is not None else load_excipient_groups()
        )
        self._model_id = model_id
        self._max_listed = max_listed_class_drugs
        self._pool = ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="heliot-retrieval"
        )

    def close(self) -> None:
        self._pool.shutdown(wait=False)

    # -- retrieval -----------------------------------------------------------

    def _resolve_field(self, text: str) -> ResolvedField:
        display: list[str] = []
        canonical: list[str] = []
        unresolved: list[str] = []
        for item in split_ingredient_field(text):
            base = strip_dosage_annotations(item)
            annotation = " ".join(_PARENTHETICAL_RE.findall(item))
            entry = self._synonyms.resolve(base) if base else None
            if entry is not None:
                name = entry.english_name
            else:
                name = base or item
                unresolved.append(item)
            display.append(f"{name} {annotation}".strip() if annotation else name)
            canonical.append(name)
        return ResolvedField(tuple(display), tuple(canonical), tuple(unresolved))

    def _same_class_drugs(self, record: DrugRecord) -> tuple[tuple[str, str], ...]:
        if len(record.atc_code) < ATC_CLASS_PREFIX_LEN:
            return ()
        prefix = record.atc_code[:ATC_CLASS_PREFIX_LEN]
        siblings = self._drugs.query_names_by_atc_prefix(prefix)
        return tuple(
            (name, atc) for code, name, atc in siblings if code != record.drug_code
        )

    def _matching_groups(
        self, canonical_excipients: Sequence[str]
    ) -> tuple[tuple[ExcipientGroup, tuple[str, ...]], ...]:
        matches = []
        for group in self._groups:
            member_keys = {normalize_name(m) for m in group.members}
            present = tuple(
                name
                for name in canonical_excipients
                if normalize_name(name) in member_keys
            )
            if present:
                matches.append((group, present))
        return tuple(matches)

    # -- prompt-section rendering ---------------------------------------------

    def _render_cross_reactivity(
        self, siblings: tuple[tuple[str, str], ...]
    ) -> str:
        if not siblings:
            return "None known"
        listed = [f"{name} ({atc})" for name, atc in siblings[: self._max_listed]]
        text = "; ".join(listed)
        remaining = len(siblings) - self._max_listed
        if remaining > 0:
            text += f"; plus {remaining} more drugs in the same class"
        return text

    def _render_excipient_groups(
        self, matches: tuple[tuple[ExcipientGroup, tuple[str, ...]], ...]
    ) -> str:
        if not matches:
            return "None known"
        lines = []
        for group, present in matches:
            present_keys = {normalize_name(p) for p in present}
            related = [
                m for m in group.members if normalize_name(m) not in present_keys
            ]
            line = f"{group.name}: present in this drug: {', '.join(present)}"
            if related:
                line += f"; chemically related: {', '.join(related[:8])}"
            lines.append(line)
        return "\n".join(lines)

    # -- public operations ----------------------------------------------------

    def cross_reactivity_context(self, record: DrugRecord) -> CrossReactivityContext:
        excipients = self._resolve_field(record.excipients)
        return CrossReactivityContext(
            same_class_drugs=self._same_class_drugs(record),
            excipient_group_matches=self._matching_groups(excipients.canonical),
        )

    def build_context(
        self, drug_code: str, narrative: str = ""
    ) -> tuple[PromptContext, list[str]]:
        """Assemble the prompt context for a drug; returns (context, warnings)."""
        record = self._drugs.get(drug_code)
        if record is None:
            raise DrugNotFoundError(drug_code)
        actives = self._resolve_field(record.composition)
        excipients = self._resolve_field(record.excipients)
        siblings = self._same_class_drugs(record)
        return self._assemble(record, actives, excipients, siblings, narrative)

    def _assemble(
        self,
        record: DrugRecord,
        actives: ResolvedField,
        excipients: ResolvedField,
        siblings: tuple[tuple[str, str], ...],
        narrative: str,
    ) -> tuple[PromptContext, list[str]]:
        flags = [
            f"unresolved ingredient name: {item}"
            for item in actives.unresolved + excipients.unresolved
        ]
        ctx = PromptContext(
            drug=record.drug_name,
            active_ingredients=actives.display,
            excipients=excipients.display,
            cross_reactivity=self._render_cross_reactivity(siblings),
            excipients_cross_reacts=self._render_excipient_groups(
                self._matching_groups(excipients.canonical)
            ),
            contraindications=record.contraindications,
            clinical_notes=narrative,
        )
        return ctx, flags

    def _translate(self, text: str, language: str) -> str:
        system, user = build_translation_prompt(text, language)
        request = ChatRequest(system, user, model_id=self._model_id)
        try:
            return complete_text(request, self._backend)
        except GatewayError as exc:
            raise AssessmentError(f"translation failed: {exc}") from exc

    @staticmethod
    def _needs_translation(language_hint: Optional[str]) -> bool:
        return bool(language_hint) and language_hint.strip().lower() not in (
            "english",
            "en",
        )

    def assess(self, request: AssessmentRequest) -> AssessmentStream:
        """Run one assessment; chunks stream to the caller, `final` afterwards."""
        record = self._drugs.get(request.drug_code)
        if record is None:
            raise DrugNotFoundError(request.drug_code)

        # Independent retrievals run concurrently and are joined below.
        actives_future = self._pool.submit(self._resolve_field, record.composition)
        excipients_future = self._pool.submit(self._resolve_field, record.excipients)
        siblings_future = self._pool.submit(self._same_class_drugs, record)
        history_future = None
        if request.patient_id and self._patients is not None:
            history_future = self._pool.submit(
                self._patients.get_history, request.patient_id
            )

        current = request.current_note
        if current.strip() and self._needs_translation(request.language_hint):
            current = self._translate(current, request.language_hint or "")

        history: Optional[PatientHistory] = (
            history_future.result() if history_future is not None else None
        )
        narrative = merge_for_prompt(current, history)

        ctx, flags = self._assemble(
            record,
            actives_future.result(),
            excipients_future.result(),
            siblings_future.result(),
            narrative,
        )
        system, user = build_decision_prompt(ctx)
        chat_request = ChatRequest(system, user, model_id=self._model_id)

        def finalize(raw: str) -> Assessment:
            parsed = parse_assessment(raw)
            return Assessment(
                analysis=parsed.analysis,
                classification=parsed.classification,
                reaction=parsed.reaction,
                raw_response=raw,
                consistency_flags=tuple(flags),
            )

        return AssessmentStream(
            complete_streaming(chat_request, self._backend), finalize
        )

    def assess_complete(self, request: AssessmentRequest) -> Assessment:
        """Blocking convenience wrapper around assess()."""
        return self.assess(request).drain()
