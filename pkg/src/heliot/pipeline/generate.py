"""Synthetic drug-catalog and patient-case generators.

The catalog reproduces the reference drug-class distribution; the patient
generator reproduces the reference case strata, writing notes that narratively
encode each stratum (reaction timing, symptoms, tolerance statements,
cross-reactive drug mentions) plus a machine-readable ground-truth tag
consumed by the rule-based backend. Both are deterministic for a fixed seed.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from ..domain import (
    AlertType,
    ClassificationCategory,
    LabelError,
    ReactionType,
    derive_alert,
)
from ..drugstore import DrugRecord
from ..engine import (
    ExcipientGroup,
    load_excipient_groups,
    split_ingredient_field,
    strip_dosage_annotations,
)
from ..llm.gateway import GROUND_TRUTH_TAG_RE, format_ground_truth_tag
from ..synonyms import normalize_name


class DatasetFormatError(ValueError):
    """Raised when dataset definitions or CSV files are malformed."""


# --- drug catalog ------------------------------------------------------------


@dataclass(frozen=True)
class DrugClassSpec:
    """One drug class: its name, ATC prefix pool, and record count."""

    name: str
    atc_prefixes: tuple[str, ...]
    count: int

    def __post_init__(self) -> None:
        if self.count <= 0:
            raise DatasetFormatError(f"class {self.name!r} needs a positive count")
        if not self.atc_prefixes:
            raise DatasetFormatError(f"class {self.name!r} needs an ATC prefix pool")


DEFAULT_DRUG_DISTRIBUTION: tuple[DrugClassSpec, ...] = (
    DrugClassSpec("Opioids", ("N02AA", "N02AB", "N02AC", "N02AE", "N02AJ", "N02AX"), 653),
    DrugClassSpec("Antibiotics", ("J01CA", "J01CR", "J01DB", "J01DD", "J01FA", "J01MA"), 152),
    DrugClassSpec("NSAID", ("M01AB", "M01AC", "M01AE", "M01AH"), 47),
    DrugClassSpec("Diuretics", ("C03AA", "C03BA", "C03CA", "C03DA"), 24),
    DrugClassSpec("Antiplatelet agents", ("B01AC",), 16),
    DrugClassSpec(
        "Other",
        ("A02BC", "C09AA", "C10AA", "D01AC", "G03CA", "H03AA", "L04AA", "P01BA", "R03AC", "S01ED"),
        108,
    ),
)

_CLASS_INGREDIENTS = {
    "Opioids": (
        "morphine sulfate",
        "oxycodone hydrochloride",
        "fentanyl citrate",
        "tramadol hydrochloride",
        "codeine phosphate",
        "buprenorphine",
        "tapentadol hydrochloride",
        "hydromorphone hydrochloride",
    ),
    "Antibiotics": (
        "amoxicillin",
        "ceftriaxone sodium",
        "azithromycin dihydrate",
        "ciprofloxacin",
        "clarithromycin",
        "cefixime",
        "piperacillin sodium",
    ),
    "NSAID": (
        "ibuprofen",
        "diclofenac sodium",
        "naproxen sodium",
        "ketoprofen",
        "piroxicam",
        "etoricoxib",
    ),
    "Diuretics": (
        "furosemide",
        "hydrochlorothiazide",
        "spironolactone",
        "torasemide",
        "indapamide",
    ),
    "Antiplatelet agents": (
        "acetylsalicylic acid",
        "clopidogrel hydrogen sulfate",
        "ticagrelor",
        "prasugrel",
    ),
    "Other": (
        "omeprazole",
        "ramipril",
        "atorvastatin calcium",
        "levothyroxine sodium",
        "salbutamol sulfate",
        "miconazole nitrate",
        "estradiol",
        "azathioprine",
        "chloroquine phosphate",
        "timolol maleate",
    ),
}

_COMMON_EXCIPIENTS = (
    "lactose monohydrate",
    "microcrystalline cellulose",
    "magnesium stearate",
    "sodium starch glycolate",
    "povidone",
    "titanium dioxide",
    "sucrose",
    "sorbitol",
    "gelatin",
    "croscarmellose sodium",
    "colloidal silicon dioxide",
    "hypromellose",
    "talc",
    "maize starch",
    "sodium benzoate",
)

# Hypersensitivity-prone excipients sampled alongside the common ones so the
# curated chemical families show up across the catalog.
_SENSITIZING_EXCIPIENTS = (
    "polyethylene glycol",
    "macrogol 3350",
    "macrogol 4000",
    "polysorbate 20",
    "polysorbate 80",
    "benzalkonium chloride",
    "methyl parahydroxybenzoate",
    "propyl parahydroxybenzoate",
)

_FORMS = (
    "tablets",
    "capsules",
    "syrup",
    "oral solution",
    "solution for injection",
    "prolonged-release tablets",
)

_NAME_SUFFIXES = ("AN", "OL", "EX", "IL", "AX", "ON", "URA", "IST")

_STRENGTHS = ("5 mg", "10 mg", "20 mg", "25 mg", "50 mg", "100 mg", "250 mg", "500 mg")

_CLASS_SIDE_EFFECTS = {
    "Opioids": "Nausea, constipation, drowsiness; respiratory depression at high doses.",
    "Antibiotics": "Gastrointestinal upset, diarrhoea; hypersensitivity reactions including rash.",
    "NSAID": "Dyspepsia, gastric irritation; rarely bronchospasm in sensitive patients.",
    "Diuretics": "Electrolyte disturbances, dizziness, dehydration.",
    "Antiplatelet agents": "Bleeding tendency, bruising, gastrointestinal discomfort.",
    "Other": "See leaflet for the full list of undesirable effects.",
}

_CLASS_INTERACTIONS = {
    "Opioids": "Potentiates CNS depressants; avoid concurrent monoamine oxidase inhibitors.",
    "Antibiotics": "May potentiate oral anticoagulants; absorption reduced by antacids.",
    "NSAID": "Increases bleeding risk with anticoagulants; reduces diuretic efficacy.",
    "Diuretics": "Risk of hypokalaemia with corticosteroids; monitor lithium levels.",
    "Antiplatelet agents": "Additive bleeding risk with anticoagulants and NSAIDs.",
    "Other": "Consult the interaction tables before co-prescription.",
}


def _product_name(rng: random.Random, primary: str, strength: str, form: str) -> str:
    stem = primary.split()[0][:6].upper()
    suffix = rng.choice(_NAME_SUFFIXES)
    return f"{stem}{suffix} {strength.upper()} {form.upper()}"


def generate_drug_catalog(
    distribution: Sequence[DrugClassSpec] = DEFAULT_DRUG_DISTRIBUTION,
    seed: int = 0,
    excipient_groups: Optional[Sequence[ExcipientGroup]] = None,
) -> list[DrugRecord]:
    """Deterministic synthetic catalog honoring the per-class counts.

    Each curated excipient family is guaranteed to appear in at least 1% of
    records.
    """
    rng = random.Random(seed)
    groups = tuple(
        excipient_groups if excipient_groups is not None else load_excipient_groups()
    )
    records: list[DrugRecord] = []
    used_codes: set[str] = set()

    for spec in distribution:
        ingredients = _CLASS_INGREDIENTS.get(spec.name, _CLASS_INGREDIENTS["Other"])
        for _ in range(spec.count):
            code = f"{rng.randrange(10**8, 10**9)}"
            while code in used_codes:
                code = f"{rng.randrange(10**8, 10**9)}"
            used_codes.add(code)

            atc = f"{rng.choice(spec.atc_prefixes)}{rng.randrange(1, 100):02d}"
            primary = rng.choice(ingredients)
            strength = rng.choice(_STRENGTHS)
            form = rng.choice(_FORMS)

            composition_items = [f"{primary} ({strength})"]
            if rng.random() < 0.15:
                secondary = rng.choice([i for i in ingredients if i != primary])
                composition_items.append(secondary)

            excipient_pool = list(_COMMON_EXCIPIENTS)
            excipients = rng.sample(excipient_pool, rng.randrange(3, 6))
            if rng.random() < 0.30:
                excipients.append(rng.choice(_SENSITIZING_EXCIPIENTS))

            records.append(
                DrugRecord(
                    drug_code=code,
                    drug_name=_product_name(rng, primary, strength, form),
                    drug_form=form,
                    atc_code=atc,
                    composition="; ".join(composition_items),
                    excipients="; ".join(excipients),
                    contraindications=(
                        f"Hypersensitivity to {primary} or to any of the excipients listed."
                    ),
                    drug_interactions=_CLASS_INTERACTIONS[spec.name],
                    side_effects=_CLASS_SIDE_EFFECTS[spec.name],
                    incompatibilities="",
                ).validated()
            )

    _ensure_group_coverage(records, groups, rng)
    return records


def _excipient_names(record: DrugRecord) -> list[str]:
    return [
        strip_dosage_annotations(item)
        for item in split_ingredient_field(record.excipients)
    ]


def _active_names(record: DrugRecord) -> list[str]:
    return [
        strip_dosage_annotations(item)
        for item in split_ingredient_field(record.composition)
    ]


def _ensure_group_coverage(
    records: list[DrugRecord],
    groups: Sequence[ExcipientGroup],
    rng: random.Random,
) -> None:
    minimum = max(1, -(-len(records) // 100))  # ceil(1% of catalog)
    for group in groups:
        member_keys = {normalize_name(m) for m in group.members}
        covered = [
            i
            for i, record in enumerate(records)
            if any(normalize_name(n) in member_keys for n in _excipient_names(record))
        ]
        missing = minimum - len(covered)
        if missing <= 0:
            continue
        uncovered = [i for i in range(len(records)) if i not in set(covered)]
        for index in rng.sample(uncovered, missing):
            record = records[index]
            member = rng.choice(group.members)
            records[index] = DrugRecord(
                drug_code=record.drug_code,
                drug_name=record.drug_name,
                drug_form=record.drug_form,
                atc_code=record.atc_code,
                composition=record.composition,
                excipients=f"{record.excipients}; {member}",
                contraindications=record.contraindications,
                drug_interactions=record.drug_interactions,
                side_effects=record.side_effects,
                incompatibilities=record.incompatibilities,
            )


# --- case strata --------------------------------------------------------------


@dataclass(frozen=True)
class CaseStratum:
    """One (classification, reaction) stratum with its case count."""

    classification: ClassificationCategory
    reaction: ReactionType
    count: int

    def __post_init__(self) -> None:
        if self.count <= 0:
            raise DatasetFormatError("stratum count must be positive")

    @property
    def alert(self) -> AlertType:
        return derive_alert(self.classification, self.reaction)


_C = ClassificationCategory
_R = ReactionType

# The reference per-stratum counts. The 26-case chemical-cross-reactivity
# stratum carries an immune-mediated reaction so the ground-truth alert totals
# come out at (396 none, 455 interruptive, 149 non-interruptive).
DEFAULT_CASE_STRATA: tuple[CaseStratum, ...] = (
    CaseStratum(_C.NO_DOCUMENTED_REACTIONS, _R.NONE, 11),
    CaseStratum(_C.NO_REACTIVITY_TO_PRESCRIBED_DRUG, _R.NONE, 30),
    CaseStratum(_C.DIRECT_ACTIVE_INGREDIENT_REACTIVITY, _R.LIFE_THREATENING, 9),
    CaseStratum(_C.DIRECT_ACTIVE_INGREDIENT_REACTIVITY, _R.NON_LIFE_THREATENING_IMMUNE_MEDIATED, 12),
    CaseStratum(_C.DIRECT_ACTIVE_INGREDIENT_REACTIVITY, _R.NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED, 9),
    CaseStratum(_C.DIRECT_EXCIPIENT_REACTIVITY, _R.LIFE_THREATENING, 6),
    CaseStratum(_C.DIRECT_EXCIPIENT_REACTIVITY, _R.NON_LIFE_THREATENING_IMMUNE_MEDIATED, 4),
    CaseStratum(_C.DIRECT_EXCIPIENT_REACTIVITY, _R.NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED, 14),
    CaseStratum(_C.CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS, _R.LIFE_THREATENING, 15),
    CaseStratum(_C.CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS, _R.NON_LIFE_THREATENING_IMMUNE_MEDIATED, 9),
    CaseStratum(_C.CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS, _R.NON_LIFE_THREATENING_IMMUNE_MEDIATED, 26),
    CaseStratum(_C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE, _R.LIFE_THREATENING, 103),
    CaseStratum(_C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE, _R.NON_LIFE_THREATENING_IMMUNE_MEDIATED, 271),
    CaseStratum(_C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE, _R.NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED, 126),
    CaseStratum(_C.DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE, _R.NONE, 355),
)


@dataclass(frozen=True)
class SyntheticCase:
    """One evaluation case mirroring the dataset CSV schema."""

    patient_id: str
    drug_code: str
    drug_name: str
    clinical_note: str
    classification: ClassificationCategory
    alert_type: AlertType
    reaction_type: ReactionType
    prescribed_atc: str

    def __post_init__(self) -> None:
        expected = derive_alert(self.classification, self.reaction_type)
        if self.alert_type is not expected:
            raise DatasetFormatError(
                f"case {self.patient_id}: alert {self.alert_type.display!r} does not "
                f"derive from ({self.classification.display!r}, "
                f"{self.reaction_type.display!r})"
            )
        tag = GROUND_TRUTH_TAG_RE.search(self.clinical_note)
        if tag is not None:
            if (
                tag.group("r").strip() != self.classification.display
                or tag.group("rt").strip() != self.reaction_type.display
            ):
                raise DatasetFormatError(
                    f"case {self.patient_id}: embedded tag contradicts labels"
                )


# --- note narrative templates --------------------------------------------------

_INTROS = (
    "Seen in clinic for medication review.",
    "Follow-up visit; medication history reconciled with the patient.",
    "New prescription requested; allergy history reviewed.",
    "Pre-treatment check; previous adverse drug events discussed.",
)

_REACTION_SENTENCES = {
    ReactionType.LIFE_THREATENING: (
        "developed anaphylaxis with airway swelling and severe hypotension within "
        "minutes of taking {agent}; emergency adrenaline was required",
        "suffered anaphylactic shock with loss of consciousness shortly after a dose "
        "of {agent} and required resuscitation",
    ),
    ReactionType.NON_LIFE_THREATENING_IMMUNE_MEDIATED: (
        "broke out in generalized urticaria with facial angioedema within two hours "
        "of taking {agent}",
        "developed a widespread pruritic maculopapular rash the day after starting "
        "{agent}, settling with antihistamines",
    ),
    ReactionType.NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED: (
        "reported persistent nausea, epigastric discomfort and headache while on "
        "{agent}; symptoms resolved on stopping",
        "experienced dizziness and constipation during treatment with {agent}, with "
        "no rash or breathing difficulty",
    ),
}

_NARRATIVE_REACTIONS = tuple(_REACTION_SENTENCES)


def _reaction_sentence(rng: random.Random, reaction: ReactionType, agent: str) -> str:
    template = rng.choice(_REACTION_SENTENCES[reaction])
    return template.format(agent=agent)


def _timing_phrase(rng: random.Random) -> str:
    return rng.choice(
        (
            "Two years ago the patient",
            "Last year the patient",
            "Six months ago the patient",
            "During a previous admission the patient",
        )
    )


class _CatalogView:
    """Pre-indexed catalog facts the case builder draws from."""

    def __init__(self, catalog: Sequence[DrugRecord], groups: Sequence[ExcipientGroup]):
        if not catalog:
            raise DatasetFormatError("catalog must be non-empty")
        self.records = list(catalog)
        self.actives = {r.drug_code: _active_names(r) for r in self.records}
        self.excipients = {r.drug_code: _excipient_names(r) for r in self.records}

        by_class: dict[str, list[DrugRecord]] = {}
        for record in self.records:
            if len(record.atc_code) >= 5:
                by_class.setdefault(record.atc_code[:5], []).append(record)
        self.by_class = by_class

        self.with_excipients = [r for r in self.records if self.excipients[r.drug_code]]
        self.with_sibling = [
            r
            for r in self.records
            if len(r.atc_code) >= 5 and len(by_class[r.atc_code[:5]]) > 1
        ]

        # records containing a member of a multi-member curated family
        self.group_matches: list[tuple[DrugRecord, ExcipientGroup, str, str]] = []
        for record in self.records:
            names = self.excipients[record.drug_code]
            for group in groups:
                if len(group.members) < 2:
                    continue
                member_keys = {normalize_name(m): m for m in group.members}
                present = [n for n in names if normalize_name(n) in member_keys]
                if present:
                    present_key = normalize_name(present[0])
                    others = [
                        m for k, m in member_keys.items() if k != present_key
                    ]
                    if others:
                        self.group_matches.append(
                            (record, group, present[0], others[0])
                        )
                        break

        if not self.with_excipients:
            raise DatasetFormatError("catalog has no records with excipients")
        if not self.with_sibling:
            raise DatasetFormatError("catalog has no drug with a same-class sibling")
        if not self.group_matches:
            raise DatasetFormatError(
                "catalog has no excipients from the curated chemical families"
            )

    def sibling_of(self, record: DrugRecord, rng: random.Random) -> DrugRecord:
        pool = [
            r
            for r in self.by_class[record.atc_code[:5]]
            if r.drug_code != record.drug_code
        ]
        return rng.choice(pool)

    def unrelated_agent(self, record: DrugRecord, rng: random.Random) -> str:
        own = {normalize_name(n) for n in self.actives[record.drug_code]}
        own.update(normalize_name(n) for n in self.excipients[record.drug_code])
        own_class = record.atc_code[:5]
        for _ in range(64):
            other = rng.choice(self.records)
            if other.atc_code[:5] == own_class:
                continue
            agents = [
                n
                for n in self.actives[other.drug_code]
                if normalize_name(n) not in own
            ]
            if agents:
                return agents[0]
        raise DatasetFormatError("could not find an unrelated reaction agent")


def _build_note(
    rng: random.Random,
    view: _CatalogView,
    record: DrugRecord,
    stratum: CaseStratum,
    patient_id: str,
    cross_agent: Optional[str] = None,
    group_detail: Optional[tuple[str, str, str]] = None,
) -> str:
    c = stratum.classification
    sentences = [rng.choice(_INTROS)]

    if c is _C.NO_DOCUMENTED_REACTIONS:
        sentences.append(
            "No adverse drug reactions or intolerances documented to date; "
            "the patient denies any previous drug allergy."
        )
    elif c is _C.NO_REACTIVITY_TO_PRESCRIBED_DRUG:
        narrated = rng.choice(_NARRATIVE_REACTIONS)
        sentences.append(
            f"{_timing_phrase(rng)} "
            f"{_reaction_sentence(rng, narrated, cross_agent or 'an unrelated agent')}."
        )
        sentences.append("No other adverse drug events are documented.")
    elif c is _C.DIRECT_ACTIVE_INGREDIENT_REACTIVITY:
        sentences.append(
            f"{_timing_phrase(rng)} "
            f"{_reaction_sentence(rng, stratum.reaction, cross_agent or 'the drug')}."
        )
    elif c is _C.DIRECT_EXCIPIENT_REACTIVITY:
        sentences.append(
            f"{_timing_phrase(rng)} "
            f"{_reaction_sentence(rng, stratum.reaction, cross_agent or 'the product')}."
        )
        sentences.append(
            f"Allergy workup attributed the reaction to the excipient {cross_agent}."
        )
    elif c is _C.CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS:
        group_name, present, reacted = group_detail or ("", "", "")
        sentences.append(
            f"{_timing_phrase(rng)} "
            f"{_reaction_sentence(rng, stratum.reaction, reacted)}."
        )
        sentences.append(
            f"The reaction was attributed to {reacted}, chemically related to "
            f"{present} ({group_name})."
        )
    elif c is _C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE:
        sentences.append(
            f"{_timing_phrase(rng)} "
            f"{_reaction_sentence(rng, stratum.reaction, cross_agent or 'a class drug')}, "
            "a drug of the same therapeutic class as the current prescription."
        )
    elif c is _C.DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE:
        narrated = rng.choice(_NARRATIVE_REACTIONS)
        sentences.append(
            f"{_timing_phrase(rng)} "
            f"{_reaction_sentence(rng, narrated, cross_agent or 'a class drug')}, "
            "a drug of the same therapeutic class as the current prescription."
        )
        sentences.append(
            f"Has since taken {record.drug_name} on several occasions without any "
            "adverse reaction."
        )

    tag = format_ground_truth_tag(patient_id, c, stratum.reaction)
    return " ".join(sentences) + f"\n{tag}"


def generate_patient_dataset(
    strata: Sequence[CaseStratum] = DEFAULT_CASE_STRATA,
    catalog: Sequence[DrugRecord] = (),
    seed: int = 0,
    expected_total: Optional[int] = None,
    excipient_groups: Optional[Sequence[ExcipientGroup]] = None,
) -> list[SyntheticCase]:
    """Generate exactly the per-stratum case counts over the given catalog."""
    total = sum(s.count for s in strata)
    if expected_total is not None and total != expected_total:
        raise DatasetFormatError(
            f"stratum counts sum to {total}, expected {expected_total}"
        )
    groups = tuple(
        excipient_groups if excipient_groups is not None else load_excipient_groups()
    )
    view = _CatalogView(catalog, groups)
    rng = random.Random(seed)

    cases: list[SyntheticCase] = []
    next_id = 1
    for stratum in strata:
        for _ in range(stratum.count):
            patient_id = f"P{next_id:04d}"
            next_id += 1
            cross_agent: Optional[str] = None
            group_detail: Optional[tuple[str, str, str]] = None

            c = stratum.classification
            if c is _C.DIRECT_EXCIPIENT_REACTIVITY:
                record = rng.choice(view.with_excipients)
                cross_agent = rng.choice(view.excipients[record.drug_code])
            elif c is _C.CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS:
                record, group, present, reacted = rng.choice(view.group_matches)
                group_detail = (group.name, present, reacted)
            elif c in (
                _C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE,
                _C.DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE,
            ):
                record = rng.choice(view.with_sibling)
                cross_agent = view.sibling_of(record, rng).drug_name
            elif c is _C.DIRECT_ACTIVE_INGREDIENT_REACTIVITY:
                record = rng.choice(view.records)
                cross_agent = rng.choice(view.actives[record.drug_code])
            elif c is _C.NO_REACTIVITY_TO_PRESCRIBED_DRUG:
                record = rng.choice(view.records)
                cross_agent = view.unrelated_agent(record, rng)
            else:
                record = rng.choice(view.records)

            note = _build_note(
                rng, view, record, stratum, patient_id, cross_agent, group_detail
            )
            cases.append(
                SyntheticCase(
                    patient_id=patient_id,
                    drug_code=record.drug_code,
                    drug_name=record.drug_name,
                    clinical_note=note,
                    classification=stratum.classification,
                    alert_type=stratum.alert,
                    reaction_type=stratum.reaction,
                    prescribed_atc=record.atc_code,
                )
            )

    rng.shuffle(cases)
    return cases


# --- dataset CSV ----------------------------------------------------------------

DATASET_CSV_HEADER = [
    "Patient_ID",
    "Drug_code",
    "Drug_name",
    "Clinical_note",
    "Classification",
    "Alert_type",
    "Reaction_type",
    "Prescribed_ATC",
]


def export_dataset_csv(
    cases: Sequence[SyntheticCase], path: Union[str, Path]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(DATASET_CSV_HEADER)
        for case in cases:
            writer.writerow(
                [
                    case.patient_id,
                    case.drug_code,
                    case.drug_name,
                    case.clinical_note,
                    case.classification.display,
                    case.alert_type.display,
                    case.reaction_type.display,
                    case.prescribed_atc,
                ]
            )


def import_dataset_csv(source: Union[str, Path]) -> list[SyntheticCase]:
    with open(source, newline="", encoding="utf-8") as handle:
        return read_dataset_csv(handle)


def read_dataset_csv(handle) -> list[SyntheticCase]:
    """Parse a dataset CSV from an open text stream."""
    reader = csv.reader(handle)
    header = next(reader, None)
    if header != DATASET_CSV_HEADER:
        raise DatasetFormatError(
            f"dataset CSV header must be {DATASET_CSV_HEADER}, got {header}"
        )
    cases = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(DATASET_CSV_HEADER):
            raise DatasetFormatError(
                f"row {line_no}: expected {len(DATASET_CSV_HEADER)} columns, got {len(row)}"
            )
        try:
            cases.append(
                SyntheticCase(
                    patient_id=row[0],
                    drug_code=row[1],
                    drug_name=row[2],
                    clinical_note=row[3],
                    classification=ClassificationCategory.parse(row[4]),
                    alert_type=AlertType.parse(row[5]),
                    reaction_type=ReactionType.parse(row[6]),
                    prescribed_atc=row[7],
                )
            )
        except (LabelError, DatasetFormatError) as exc:
            raise DatasetFormatError(f"row {line_no}: {exc}") from exc
    return cases
