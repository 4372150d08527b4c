"""Shared fixtures: small catalog, stores, synonym index, engines."""

from __future__ import annotations

import pytest

from heliot.drugstore import DrugRecord, DrugStore
from heliot.engine import DecisionEngine, load_excipient_groups
from heliot.llm.gateway import RuleBasedBackend
from heliot.patients import PatientStore
from heliot.synonyms import IngredientEntry, IngredientKind, SynonymIndex


@pytest.fixture
def small_catalog() -> list[DrugRecord]:
    return [
        DrugRecord(
            drug_code="012745017",
            drug_name="ORAMORPH 20 MG SYRUP",
            drug_form="syrup",
            atc_code="N02AA01",
            composition="morphine sulfate (20 mg/ml)",
            excipients="sucrose; polysorbate 80; sodium benzoate",
            contraindications="Hypersensitivity to morphine or opioid analgesics.",
            drug_interactions="Potentiates CNS depressants.",
            side_effects="Nausea, constipation, drowsiness.",
            incompatibilities="",
        ),
        DrugRecord(
            drug_code="023456018",
            drug_name="MORPHAN 10 MG TABLETS",
            drug_form="tablets",
            atc_code="N02AA05",
            composition="oxycodone hydrochloride (10 mg)",
            excipients="lactose monohydrate; magnesium stearate",
            contraindications="Severe respiratory depression.",
            drug_interactions="",
            side_effects="",
            incompatibilities="",
        ),
        DrugRecord(
            drug_code="034567019",
            drug_name="AMOXIL 500 MG CAPSULES",
            drug_form="capsules",
            atc_code="J01CA04",
            composition="amoxicillin (500 mg)",
            excipients="gelatin; titanium dioxide",
            contraindications="Hypersensitivity to penicillins.",
            drug_interactions="",
            side_effects="Rash, diarrhoea.",
            incompatibilities="",
        ),
    ]


@pytest.fixture
def drug_store(small_catalog) -> DrugStore:
    store = DrugStore(":memory:")
    store.put_many(small_catalog)
    yield store
    store.close()


@pytest.fixture
def patient_store() -> PatientStore:
    store = PatientStore(":memory:")
    yield store
    store.close()


@pytest.fixture
def synonym_index() -> SynonymIndex:
    return SynonymIndex(
        [
            IngredientEntry(
                ingredient="morfina solfato",
                english_name="morphine sulfate",
                synonyms=("morphine sulphate", "morphine hemisulfate"),
                kind=IngredientKind.ACTIVE,
            ),
            IngredientEntry(
                ingredient="acido acetilsalicilico",
                english_name="aspirin",
                synonyms=("acetylsalicylic acid", "ASA"),
                kind=IngredientKind.ACTIVE,
            ),
            IngredientEntry(
                ingredient="polisorbato 80",
                english_name="polysorbate 80",
                synonyms=("tween 80",),
                kind=IngredientKind.INACTIVE,
            ),
        ]
    )


@pytest.fixture
def rule_engine(drug_store, patient_store, synonym_index) -> DecisionEngine:
    engine = DecisionEngine(
        drug_store,
        RuleBasedBackend(),
        synonyms=synonym_index,
        patients=patient_store,
        excipient_groups=load_excipient_groups(),
    )
    yield engine
    engine.close()
