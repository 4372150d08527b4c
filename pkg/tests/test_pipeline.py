"""Ingestion, extraction, translation, and the synthetic generators."""

import json
from collections import Counter

import pytest

from heliot.domain import AlertType, ClassificationCategory, ReactionType, derive_alert
from heliot.drugstore import DrugStore
from heliot.engine import load_excipient_groups, split_ingredient_field, strip_dosage_annotations
from heliot.llm import ChatRequest, ScriptedChatBackend, build_extraction_prompt
from heliot.llm.gateway import GROUND_TRUTH_TAG_RE, RuleBasedBackend
from heliot.pipeline.generate import (
    DEFAULT_CASE_STRATA,
    DEFAULT_DRUG_DISTRIBUTION,
    CaseStratum,
    DatasetFormatError,
    DrugClassSpec,
    export_dataset_csv,
    generate_drug_catalog,
    generate_patient_dataset,
    import_dataset_csv,
)
from heliot.pipeline.ingest import (
    CsvHeaderError,
    ExtractionError,
    LEAFLET_CSV_HEADER,
    SynonymCsvError,
    export_catalog_csv,
    extract_leaflet_sections,
    ingest_leaflet_csv,
    ingest_synonyms_csv,
    read_leaflet_csv,
    translate_ingredients,
)
from heliot.synonyms import normalize_name

C = ClassificationCategory
R = ReactionType
A = AlertType


GOOD_ROW = (
    '012745017,ORAMORPH,syrup,N02AA01,"morphine sulfate (20 mg/ml)",'
    '"sucrose; polysorbate 80",Hypersensitivity.,None.,Nausea.,\n'
)


def leaflet_csv(tmp_path, rows, header=",".join(LEAFLET_CSV_HEADER)):
    path = tmp_path / "leaflets.csv"
    path.write_text(header + "\n" + "".join(rows), encoding="utf-8")
    return path


class TestLeafletIngest:
    def test_three_valid_rows_stored(self, tmp_path):
        rows = [
            GOOD_ROW,
            GOOD_ROW.replace("012745017", "1"),
            GOOD_ROW.replace("012745017", "2"),
        ]
        with DrugStore(":memory:") as store:
            result = ingest_leaflet_csv(leaflet_csv(tmp_path, rows), store)
            assert result.stored == 3
            assert result.row_errors == []
            assert store.get("012745017").drug_name == "ORAMORPH"

    def test_bad_row_skipped_with_line_number(self, tmp_path):
        bad = GOOD_ROW.replace("N02AA01", "NOT-ATC").replace("012745017", "9")
        rows = [GOOD_ROW, bad, GOOD_ROW.replace("012745017", "2")]
        with DrugStore(":memory:") as store:
            result = ingest_leaflet_csv(leaflet_csv(tmp_path, rows), store)
            assert result.stored == 2
            assert len(result.row_errors) == 1
            assert "line 3" in result.row_errors[0]

    def test_wrong_header_aborts_before_write(self, tmp_path):
        path = leaflet_csv(tmp_path, [GOOD_ROW], header="Code,Name")
        with DrugStore(":memory:") as store:
            with pytest.raises(CsvHeaderError):
                ingest_leaflet_csv(path, store)
            assert store.count() == 0

    def test_catalog_csv_round_trip(self, tmp_path, small_catalog):
        path = tmp_path / "catalog.csv"
        export_catalog_csv(small_catalog, path)
        records, errors = read_leaflet_csv(path)
        assert errors == []
        assert records == small_catalog


class TestSynonymIngest:
    def test_hash_separated_synonyms(self, tmp_path):
        path = tmp_path / "syn.csv"
        path.write_text(
            "Ingredient,English_name,Synonyms,Type\n"
            "acido acetilsalicilico,aspirin,acetylsalicylic acid#ASA,active\n"
        )
        index = ingest_synonyms_csv(path)
        entry = index.resolve("aspirin")
        assert entry.synonyms == ("acetylsalicylic acid", "ASA")
        assert index.resolve("ASA") is entry

    def test_empty_synonyms_field(self, tmp_path):
        path = tmp_path / "syn.csv"
        path.write_text(
            "Ingredient,English_name,Synonyms,Type\nsaccarosio,sucrose,,inactive\n"
        )
        entry = ingest_synonyms_csv(path).resolve("sucrose")
        assert entry.synonyms == ()

    def test_unknown_type_is_row_error(self, tmp_path):
        path = tmp_path / "syn.csv"
        path.write_text(
            "Ingredient,English_name,Synonyms,Type\nx,y,z,unknown\n"
        )
        with pytest.raises(SynonymCsvError, match="line 2"):
            ingest_synonyms_csv(path)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "syn.csv"
        path.write_text("A,B,C,D\n")
        with pytest.raises(CsvHeaderError):
            ingest_synonyms_csv(path)


TWO_FORM_LEAFLET = """ORAMORPH
Syrup: each ml contains morphine sulfate 2 mg. Excipients (syrup): sucrose, sodium benzoate.
Oral solution: each vial contains morphine sulfate 30 mg. Excipients (oral solution): purified water, glycerol.
Contraindications: respiratory depression (both forms).
"""


class TestExtraction:
    def fixture_backend(self, response: dict) -> ScriptedChatBackend:
        system, user = build_extraction_prompt(TWO_FORM_LEAFLET, "syrup")
        fingerprint = ScriptedChatBackend.fingerprint(ChatRequest(system, user))
        return ScriptedChatBackend({fingerprint: [json.dumps(response)]})

    def syrup_sections(self):
        return {
            "composition": "morphine sulfate (2 mg/ml)",
            "excipients": "sucrose; sodium benzoate",
            "contraindications": "respiratory depression",
            "drug_interactions": "",
            "side_effects": "",
            "incompatibilities": "",
        }

    def test_form_specific_extraction(self):
        backend = self.fixture_backend(self.syrup_sections())
        sections = extract_leaflet_sections(TWO_FORM_LEAFLET, "syrup", backend)
        # excipients exclude items that belong only to the oral-solution form
        assert "glycerol" not in sections["excipients"]
        assert "sucrose" in sections["excipients"]
        assert sections["composition"].startswith("morphine sulfate")

    def test_missing_key_is_extraction_error(self):
        broken = self.syrup_sections()
        del broken["excipients"]
        backend = self.fixture_backend(broken)
        with pytest.raises(ExtractionError, match="excipients"):
            extract_leaflet_sections(TWO_FORM_LEAFLET, "syrup", backend)

    def test_non_object_response_is_extraction_error(self):
        system, user = build_extraction_prompt(TWO_FORM_LEAFLET, "syrup")
        fingerprint = ScriptedChatBackend.fingerprint(ChatRequest(system, user))
        backend = ScriptedChatBackend({fingerprint: ["no json here"]})
        with pytest.raises(ExtractionError):
            extract_leaflet_sections(TWO_FORM_LEAFLET, "syrup", backend)

    def test_empty_leaflet_rejected(self):
        with pytest.raises(ValueError):
            extract_leaflet_sections("", "syrup", ScriptedChatBackend({}))

    def test_deterministic_with_deterministic_backend(self):
        backend = self.fixture_backend(self.syrup_sections())
        first = extract_leaflet_sections(TWO_FORM_LEAFLET, "syrup", backend)
        second = extract_leaflet_sections(TWO_FORM_LEAFLET, "syrup", backend)
        assert first == second


class TestTranslateIngredients:
    def test_rule_backend_echoes_unknown_terms(self):
        # Fig-3 fallback behavior: unknown terms come back verbatim.
        names = ["acido acetilsalicilico", "saccarosio"]
        assert translate_ingredients(names, "Italian", RuleBasedBackend()) == names

    def test_scripted_translation(self):
        from heliot.llm import build_translation_prompt

        system, user = build_translation_prompt("acido acetilsalicilico", "Italian")
        backend = ScriptedChatBackend(
            {
                ScriptedChatBackend.fingerprint(ChatRequest(system, user)): [
                    "acetylsalicylic acid"
                ]
            }
        )
        assert translate_ingredients(["acido acetilsalicilico"], "Italian", backend) == [
            "acetylsalicylic acid"
        ]

    def test_empty_list(self):
        assert translate_ingredients([], "Italian", RuleBasedBackend()) == []

    def test_order_preserved_under_parallelism(self):
        names = [f"term {i}" for i in range(20)]
        result = translate_ingredients(names, "Italian", RuleBasedBackend(), max_workers=4)
        assert result == names


class TestCatalogGenerator:
    def test_class_counts_match_distribution(self):
        catalog = generate_drug_catalog(seed=3)
        assert len(catalog) == 1000
        prefixes = {spec.name: spec.atc_prefixes for spec in DEFAULT_DRUG_DISTRIBUTION}
        counts = Counter()
        for record in catalog:
            for name, pool in prefixes.items():
                if any(record.atc_code.startswith(p) for p in pool):
                    counts[name] += 1
                    break
        assert counts["Opioids"] == 653
        assert counts["Antibiotics"] == 152
        assert counts["NSAID"] == 47
        assert counts["Diuretics"] == 24
        assert counts["Antiplatelet agents"] == 16
        assert counts["Other"] == 108

    def test_same_seed_identical_catalogs(self):
        assert generate_drug_catalog(seed=5) == generate_drug_catalog(seed=5)

    def test_different_seeds_differ(self):
        assert generate_drug_catalog(seed=1) != generate_drug_catalog(seed=2)

    def test_each_curated_group_covers_at_least_one_percent(self):
        catalog = generate_drug_catalog(seed=11)
        for group in load_excipient_groups():
            member_keys = {normalize_name(m) for m in group.members}
            covered = sum(
                1
                for record in catalog
                if any(
                    normalize_name(strip_dosage_annotations(item)) in member_keys
                    for item in split_ingredient_field(record.excipients)
                )
            )
            assert covered >= 10, group.name

    def test_unique_drug_codes(self):
        catalog = generate_drug_catalog(seed=3)
        assert len({r.drug_code for r in catalog}) == len(catalog)

    def test_records_are_valid(self):
        for record in generate_drug_catalog(seed=3)[:50]:
            record.validated()


class TestDefaultStrata:
    def test_counts_match_reference_table(self):
        counts = tuple(s.count for s in DEFAULT_CASE_STRATA)
        assert counts == (11, 30, 9, 12, 9, 6, 4, 14, 15, 9, 26, 103, 271, 126, 355)
        assert sum(counts) == 1000

    def test_alert_totals(self):
        alerts = Counter()
        for stratum in DEFAULT_CASE_STRATA:
            alerts[stratum.alert] += stratum.count
        assert alerts[A.NONE] == 396
        assert alerts[A.INTERRUPTIVE] == 455
        assert alerts[A.NON_INTERRUPTIVE] == 149

    def test_classification_totals(self):
        totals = Counter()
        for stratum in DEFAULT_CASE_STRATA:
            totals[stratum.classification] += stratum.count
        assert totals[C.CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS] == 50
        assert totals[C.DIRECT_ACTIVE_INGREDIENT_REACTIVITY] == 30
        assert totals[C.DIRECT_EXCIPIENT_REACTIVITY] == 24
        assert totals[C.NO_DOCUMENTED_REACTIONS] == 11
        assert totals[C.NO_REACTIVITY_TO_PRESCRIBED_DRUG] == 30
        assert totals[C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE] == 500
        assert totals[C.DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE] == 355


@pytest.fixture(scope="module")
def module_catalog():
    return generate_drug_catalog(seed=7)


@pytest.fixture(scope="module")
def module_dataset(module_catalog):
    return generate_patient_dataset(DEFAULT_CASE_STRATA, module_catalog, seed=7)


class TestPatientGenerator:
    def test_exact_stratum_counts(self, module_dataset):
        counts = Counter((c.classification, c.reaction_type) for c in module_dataset)
        expected = Counter()
        for stratum in DEFAULT_CASE_STRATA:
            expected[(stratum.classification, stratum.reaction)] += stratum.count
        assert counts == expected

    def test_alert_always_derives(self, module_dataset):
        for case in module_dataset:
            assert case.alert_type is derive_alert(case.classification, case.reaction_type)

    def test_tags_match_labels(self, module_dataset):
        for case in module_dataset:
            match = GROUND_TRUTH_TAG_RE.search(case.clinical_note)
            assert match is not None
            assert match.group("id") == case.patient_id
            assert match.group("r").strip() == case.classification.display
            assert match.group("rt").strip() == case.reaction_type.display

    def test_seed_determinism(self, module_catalog, module_dataset):
        again = generate_patient_dataset(DEFAULT_CASE_STRATA, module_catalog, seed=7)
        assert again == module_dataset

    def test_unique_patient_ids(self, module_dataset):
        assert len({c.patient_id for c in module_dataset}) == len(module_dataset)

    def test_drug_fields_consistent_with_catalog(self, module_catalog, module_dataset):
        by_code = {r.drug_code: r for r in module_catalog}
        for case in module_dataset[:100]:
            record = by_code[case.drug_code]
            assert case.drug_name == record.drug_name
            assert case.prescribed_atc == record.atc_code

    def test_excipient_cases_reference_present_excipient(
        self, module_catalog, module_dataset
    ):
        by_code = {r.drug_code: r for r in module_catalog}
        checked = 0
        for case in module_dataset:
            if case.classification is not C.DIRECT_EXCIPIENT_REACTIVITY:
                continue
            record = by_code[case.drug_code]
            names = [
                strip_dosage_annotations(item)
                for item in split_ingredient_field(record.excipients)
            ]
            body = case.clinical_note.split("[GT ")[0]
            assert any(name in body for name in names), case.patient_id
            checked += 1
        assert checked == 24

    def test_tolerance_cases_mention_prescribed_drug(self, module_dataset):
        for case in module_dataset:
            if case.classification is C.DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE:
                assert case.drug_name in case.clinical_note
                assert "without any adverse reaction" in case.clinical_note

    def test_single_stratum_of_one(self, module_catalog):
        stratum = CaseStratum(C.NO_DOCUMENTED_REACTIONS, R.NONE, 1)
        cases = generate_patient_dataset([stratum], module_catalog, seed=1)
        assert len(cases) == 1
        assert cases[0].classification is C.NO_DOCUMENTED_REACTIONS

    def test_total_mismatch_is_an_error(self, module_catalog):
        stratum = CaseStratum(C.NO_DOCUMENTED_REACTIONS, R.NONE, 2)
        with pytest.raises(DatasetFormatError):
            generate_patient_dataset([stratum], module_catalog, seed=1, expected_total=5)

    def test_empty_catalog_rejected(self):
        with pytest.raises(DatasetFormatError):
            generate_patient_dataset(DEFAULT_CASE_STRATA, [], seed=1)

    def test_rule_backend_agrees_with_ground_truth_end_to_end(
        self, module_catalog, module_dataset
    ):
        # generator/backend consistency: empty error plan reproduces every label
        from heliot.engine import AssessmentRequest, DecisionEngine

        store = DrugStore(":memory:", cache_capacity=1024)
        store.put_many(module_catalog)
        engine = DecisionEngine(store, RuleBasedBackend())
        for case in module_dataset[::97]:  # sampled spread across strata
            final = engine.assess_complete(
                AssessmentRequest(drug_code=case.drug_code, current_note=case.clinical_note)
            )
            assert final.classification is case.classification
            assert final.reaction is case.reaction_type
            assert final.alert is case.alert_type
        engine.close()
        store.close()


class TestDatasetCsv:
    def test_round_trip(self, tmp_path, module_dataset):
        path = tmp_path / "cases.csv"
        export_dataset_csv(module_dataset, path)
        assert import_dataset_csv(path) == module_dataset

    def test_notes_with_commas_and_newlines_survive(self, tmp_path, module_dataset):
        case = module_dataset[0]
        assert "\n" in case.clinical_note  # tag on its own line
        path = tmp_path / "one.csv"
        export_dataset_csv([case], path)
        assert import_dataset_csv(path)[0].clinical_note == case.clinical_note

    def test_missing_column_is_an_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("Patient_ID,Drug_code\nP1,1\n")
        with pytest.raises(DatasetFormatError):
            import_dataset_csv(path)

    def test_inconsistent_alert_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "Patient_ID,Drug_code,Drug_name,Clinical_note,Classification,"
            "Alert_type,Reaction_type,Prescribed_ATC\n"
            'P1,1,X,note,NO DOCUMENTED REACTIONS OR INTOLERANCES,Interruptive,None,N02AA01\n'
        )
        with pytest.raises(DatasetFormatError, match="derive"):
            import_dataset_csv(path)


class TestDistributionSpec:
    def test_rejects_non_positive_count(self):
        with pytest.raises(DatasetFormatError):
            DrugClassSpec("X", ("N02",), 0)

    def test_rejects_empty_pool(self):
        with pytest.raises(DatasetFormatError):
            DrugClassSpec("X", (), 3)
