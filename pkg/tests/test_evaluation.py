"""Metrics, kappa, alert bookkeeping, and report serialization."""

import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats.inter_rater import fleiss_kappa as sm_fleiss_kappa

from heliot.domain import AlertType, ClassificationCategory, ReactionType
from heliot.evaluation import (
    FAILURE_LABEL,
    AlertCounts,
    CasePrediction,
    EvaluationError,
    alert_report,
    build_rating_matrix,
    compute_metrics,
    confusion_counts,
    evaluate,
    fleiss_kappa,
    interruptive_reduction,
    load_error_plan,
    report_to_dict,
    run_batch,
    save_error_plan,
    write_report,
)
from heliot.llm.gateway import ForcedOutcome, RuleBasedBackend

C = ClassificationCategory
R = ReactionType
A = AlertType


def brute_force_metrics(predictions, truth, labels):
    """Independent oracle: enumerate the confusion matrix cell by cell."""
    per_class = {}
    for label in labels:
        tp = sum(1 for p, t in zip(predictions, truth) if p == label and t == label)
        fp = sum(1 for p, t in zip(predictions, truth) if p == label and t != label)
        fn = sum(1 for p, t in zip(predictions, truth) if p != label and t == label)
        precision = tp / (tp + fp) if tp + fp else (1.0 if tp + fn == 0 else 0.0)
        recall = tp / (tp + fn) if tp + fn else (1.0 if tp + fp == 0 else 0.0)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = (precision, recall, f1)
    present = [label for label in labels if any(t == label for t in truth)]
    macro = tuple(
        sum(per_class[label][i] for label in present) / len(present) for i in range(3)
    )
    return per_class, macro


class TestComputeMetrics:
    def test_perfect_predictions(self):
        labels = ["a", "b", "c"]
        truth = ["a", "b", "c", "a"]
        report = compute_metrics(truth, truth, labels)
        assert report.macro_precision == report.macro_recall == report.macro_f1 == 1.0
        for label in labels:
            assert report.per_class[label].precision == 1.0

    def test_three_class_toy_hand_enumerated(self):
        # truth (A,A,B,C), pred (A,B,B,C): precision (1, 0.5, 1), recall (0.5, 1, 1)
        truth = ["A", "A", "B", "C"]
        pred = ["A", "B", "B", "C"]
        report = compute_metrics(pred, truth, ["A", "B", "C"])
        assert report.per_class["A"].precision == 1.0
        assert report.per_class["B"].precision == 0.5
        assert report.per_class["C"].precision == 1.0
        assert report.per_class["A"].recall == 0.5
        assert report.per_class["B"].recall == 1.0
        assert report.per_class["C"].recall == 1.0

    def test_length_mismatch(self):
        with pytest.raises(EvaluationError):
            compute_metrics(["a"], ["a", "b"], ["a", "b"])

    def test_failure_label_inflates_fn_only(self):
        truth = ["a", "a", "b"]
        pred = ["a", FAILURE_LABEL, "b"]
        counts = confusion_counts(pred, truth, ["a", "b"])
        assert counts["a"] == {"tp": 1, "fp": 0, "fn": 1}
        assert counts["b"] == {"tp": 1, "fp": 0, "fn": 0}
        report = compute_metrics(pred, truth, ["a", "b"])
        assert report.per_class["a"].precision == 1.0  # no false positives
        assert report.per_class["a"].recall == 0.5  # failure hurt recall

    def test_absent_class_conventions(self):
        report = compute_metrics(["a", "a"], ["a", "a"], ["a", "zero"])
        assert report.per_class["zero"].precision == 1.0
        assert report.per_class["zero"].recall == 1.0
        # macro runs over classes present in truth only
        assert report.macro_precision == 1.0

    def test_micro_consistency(self):
        truth = ["a", "b", "c", "a", "b"]
        pred = ["a", "c", "c", "b", "b"]
        counts = confusion_counts(pred, truth, ["a", "b", "c"])
        correct = sum(1 for p, t in zip(pred, truth) if p == t)
        assert sum(c["tp"] for c in counts.values()) == correct

    @given(
        st.integers(min_value=1, max_value=200).flatmap(
            lambda n: st.tuples(
                st.lists(
                    st.sampled_from(["a", "b", "c", "d", FAILURE_LABEL]),
                    min_size=n,
                    max_size=n,
                ),
                st.lists(
                    st.sampled_from(["a", "b", "c", "d"]), min_size=n, max_size=n
                ),
            )
        )
    )
    @settings(max_examples=60)
    def test_matches_brute_force_oracle(self, vectors):
        predictions, truth = vectors
        labels = ["a", "b", "c", "d"]
        report = compute_metrics(predictions, truth, labels)
        oracle_per_class, oracle_macro = brute_force_metrics(predictions, truth, labels)
        for label in labels:
            got = report.per_class[label]
            assert math.isclose(got.precision, oracle_per_class[label][0])
            assert math.isclose(got.recall, oracle_per_class[label][1])
            assert math.isclose(got.f1, oracle_per_class[label][2])
        assert math.isclose(report.macro_precision, oracle_macro[0])
        assert math.isclose(report.macro_recall, oracle_macro[1])
        assert math.isclose(report.macro_f1, oracle_macro[2])


def exact_kappa(matrix) -> Fraction:
    """Independent exact-arithmetic evaluation of the kappa formula."""
    n = sum(matrix[0])
    n_items = len(matrix)
    p_bar = Fraction(
        sum(Fraction(sum(v * v for v in row) - n, n * (n - 1)) for row in matrix),
        n_items,
    )
    totals = [sum(row[j] for row in matrix) for j in range(len(matrix[0]))]
    p_exp = sum(Fraction(t, n_items * n) ** 2 for t in totals)
    if p_exp == 1:
        return Fraction(1)
    return (p_bar - p_exp) / (1 - p_exp)


class TestFleissKappa:
    def test_hand_computed_minus_point_two(self):
        # 2 items, 3 raters, 2 categories, votes (3,0) and (2,1)
        assert abs(fleiss_kappa([[3, 0], [2, 1]]) - (-0.2)) < 1e-9

    def test_all_runs_identical_is_exactly_one(self):
        matrix = [[5, 0, 0], [0, 5, 0], [5, 0, 0], [0, 0, 5]]
        assert fleiss_kappa(matrix) == 1.0

    def test_single_category_everywhere_is_one_by_convention(self):
        assert fleiss_kappa([[5], [5], [5]]) == 1.0
        assert fleiss_kappa([[3, 0], [3, 0]]) == 1.0

    def test_row_sum_inconsistency_is_an_error(self):
        with pytest.raises(EvaluationError):
            fleiss_kappa([[3, 0], [2, 2]])

    def test_needs_two_raters(self):
        with pytest.raises(EvaluationError):
            fleiss_kappa([[1, 0]])

    def test_invariant_under_item_and_category_permutation(self):
        matrix = [[3, 1, 0], [1, 2, 1], [0, 0, 4], [2, 2, 0]]
        reference = fleiss_kappa(matrix)
        assert fleiss_kappa(list(reversed(matrix))) == pytest.approx(reference)
        permuted = [[row[2], row[0], row[1]] for row in matrix]
        assert fleiss_kappa(permuted) == pytest.approx(reference)

    @given(
        st.lists(
            st.lists(st.integers(min_value=0, max_value=4), min_size=3, max_size=3),
            min_size=1,
            max_size=30,
        ).map(lambda rows: [row for row in rows if sum(row) > 0])
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_exact_arithmetic_and_statsmodels(self, rows):
        # normalize rows to a constant rater count of 4
        matrix = []
        for row in rows:
            total = sum(row)
            scaled = row[:]
            while total < 4:
                scaled[total % 3] += 1
                total += 1
            while total > 4:
                for j in range(3):
                    if scaled[j] > 0 and total > 4:
                        scaled[j] -= 1
                        total -= 1
            matrix.append(scaled)
        if not matrix:
            return
        ours = fleiss_kappa(matrix)
        exact = exact_kappa(matrix)
        assert ours == pytest.approx(float(exact), abs=1e-12)
        if exact != 1:
            assert ours == pytest.approx(sm_fleiss_kappa(matrix), abs=1e-9)

    def test_build_rating_matrix(self):
        runs = [["a", "b"], ["a", "b"], ["a", "a"]]
        matrix = build_rating_matrix(runs, ["a", "b"])
        assert matrix == [[3, 0], [1, 2]]

    def test_rating_rows_sum_to_run_count(self):
        runs = [["a", "b", "a"]] * 5
        matrix = build_rating_matrix(runs, ["a", "b"])
        assert all(sum(row) == 5 for row in matrix)


def prediction(classification, reaction) -> CasePrediction:
    return CasePrediction(classification, reaction)


class TestAlertBookkeeping:
    def test_triples_from_small_dataset(self, small_catalog):
        from heliot.pipeline.generate import CaseStratum, generate_patient_dataset

        strata = [
            CaseStratum(C.NO_DOCUMENTED_REACTIONS, R.NONE, 2),
            CaseStratum(C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE, R.LIFE_THREATENING, 3),
            CaseStratum(
                C.DIRECT_EXCIPIENT_REACTIVITY, R.NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED, 1
            ),
        ]
        dataset = generate_patient_dataset(strata, small_catalog, seed=1)
        predictions = [prediction(c.classification, c.reaction_type) for c in dataset]
        report = alert_report(predictions, dataset)
        assert report.truth.as_tuple() == (2, 3, 1)
        assert report.system.as_tuple() == (2, 3, 1)
        assert report.baseline.as_tuple() == (2, 4, 0)
        assert report.baseline.non_interruptive == 0

    def test_failures_count_as_interruptive(self, small_catalog):
        from heliot.pipeline.generate import CaseStratum, generate_patient_dataset

        strata = [CaseStratum(C.NO_DOCUMENTED_REACTIONS, R.NONE, 2)]
        dataset = generate_patient_dataset(strata, small_catalog, seed=1)
        predictions = [
            prediction(C.NO_DOCUMENTED_REACTIONS, R.NONE),
            CasePrediction(FAILURE_LABEL, FAILURE_LABEL, "boom"),
        ]
        report = alert_report(predictions, dataset)
        assert report.system.as_tuple() == (1, 1, 0)
        assert report.system.total == len(dataset)

    def test_empty_dataset(self):
        report = alert_report([], [])
        assert report.truth.as_tuple() == (0, 0, 0)

    def test_interruptive_reduction_direct_arithmetic(self):
        system = AlertCounts(396, 455, 149)
        baseline = AlertCounts(41, 959, 0)
        assert interruptive_reduction(system, baseline, 1000) == pytest.approx(0.504)

    def test_identical_triples_reduce_zero(self):
        triple = AlertCounts(1, 2, 3)
        assert interruptive_reduction(triple, triple, 6) == 0.0

    def test_full_reduction(self):
        assert (
            interruptive_reduction(AlertCounts(10, 0, 0), AlertCounts(0, 10, 0), 10)
            == 1.0
        )

    def test_inconsistent_totals_rejected(self):
        with pytest.raises(EvaluationError):
            interruptive_reduction(AlertCounts(1, 0, 0), AlertCounts(0, 5, 0), 5)


@pytest.fixture(scope="module")
def tiny_world():
    """Catalog, dataset, store, and engine over a 12-case dataset."""
    from heliot.drugstore import DrugStore
    from heliot.engine import DecisionEngine
    from heliot.pipeline.generate import (
        CaseStratum,
        generate_drug_catalog,
        generate_patient_dataset,
    )

    catalog = generate_drug_catalog(seed=13)[:200]
    strata = [
        CaseStratum(C.NO_DOCUMENTED_REACTIONS, R.NONE, 3),
        CaseStratum(C.DIRECT_ACTIVE_INGREDIENT_REACTIVITY, R.LIFE_THREATENING, 3),
        CaseStratum(
            C.DRUG_CLASS_CROSS_REACTIVITY_WITHOUT_TOLERANCE,
            R.NON_LIFE_THREATENING_NON_IMMUNE_MEDIATED,
            3,
        ),
        CaseStratum(C.DRUG_CLASS_CROSS_REACTIVITY_WITH_TOLERANCE, R.NONE, 3),
    ]
    dataset = generate_patient_dataset(strata, catalog, seed=13)
    store = DrugStore(":memory:", cache_capacity=512)
    store.put_many(catalog)
    engine = DecisionEngine(store, RuleBasedBackend())
    yield dataset, engine
    engine.close()
    store.close()


class TestRunBatchAndEvaluate:
    def test_run_batch_records_every_case_per_run(self, tiny_world):
        dataset, engine = tiny_world
        batch = run_batch(dataset, engine, runs=3)
        assert len(batch.runs) == 3
        assert all(len(run) == len(dataset) for run in batch.runs)
        assert len(batch.latencies) == 3 * len(dataset)
        assert all(latency >= 0 for latency in batch.latencies)

    def test_engine_errors_become_failure_labels(self, tiny_world):
        dataset, engine = tiny_world
        broken = dataset[0]
        clone = type(broken)(
            patient_id=broken.patient_id,
            drug_code="does-not-exist",
            drug_name=broken.drug_name,
            clinical_note=broken.clinical_note,
            classification=broken.classification,
            alert_type=broken.alert_type,
            reaction_type=broken.reaction_type,
            prescribed_atc=broken.prescribed_atc,
        )
        batch = run_batch([clone], engine, runs=1)
        assert batch.runs[0][0].failed
        assert batch.runs[0][0].classification == FAILURE_LABEL

    def test_evaluate_perfect_run(self, tiny_world):
        dataset, engine = tiny_world
        report = evaluate(dataset, engine, runs=2)
        assert report.classification.macro_precision == 1.0
        assert report.reaction.macro_f1 == 1.0
        assert report.fleiss_kappa == 1.0
        assert report.reaction_fleiss_kappa == 1.0
        assert report.alerts.truth.as_tuple() == report.alerts.system.as_tuple()
        assert report.case_count == len(dataset)
        assert report.run_count == 2

    def test_runs_must_be_positive(self, tiny_world):
        dataset, engine = tiny_world
        with pytest.raises(EvaluationError):
            run_batch(dataset, engine, runs=0)


class TestErrorPlanCsv:
    def test_round_trip(self, tmp_path):
        plan = {
            "P0001": ForcedOutcome(
                classification=C.CHEMICAL_CROSS_REACTIVITY_TO_EXCIPIENTS
            ),
            "P0002": ForcedOutcome(reaction=R.LIFE_THREATENING),
        }
        path = tmp_path / "plan.csv"
        save_error_plan(plan, path)
        loaded = load_error_plan(path)
        assert loaded == plan

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "plan.csv"
        path.write_text("Who,What\n")
        with pytest.raises(EvaluationError):
            load_error_plan(path)

    def test_unknown_label(self, tmp_path):
        path = tmp_path / "plan.csv"
        path.write_text(
            "Patient_ID,Forced_classification,Forced_reaction\nP1,NOT A LABEL,\n"
        )
        with pytest.raises(EvaluationError, match="line 2"):
            load_error_plan(path)


class TestWriteReport:
    def test_json_reruns_byte_identical(self, tiny_world, tmp_path):
        dataset, engine = tiny_world
        report = evaluate(dataset, engine, runs=1)
        first, second = tmp_path / "r1.json", tmp_path / "r2.json"
        write_report(report, first, "json")
        write_report(report, second, "json")
        assert first.read_bytes() == second.read_bytes()
        payload = json.loads(first.read_text())
        assert payload["alerts"]["baseline"]["non_interruptive"] == 0
        assert "macro_precision" in payload["classification"]

    def test_csv_and_markdown_forms(self, tiny_world, tmp_path):
        dataset, engine = tiny_world
        report = evaluate(dataset, engine, runs=1)
        write_report(report, tmp_path / "r.csv", "csv")
        write_report(report, tmp_path / "r.md", "markdown")
        assert (tmp_path / "r.csv").read_text().startswith("section,name,metric,value")
        assert "# Evaluation report" in (tmp_path / "r.md").read_text()

    def test_unknown_format(self, tiny_world, tmp_path):
        dataset, engine = tiny_world
        report = evaluate(dataset, engine, runs=1)
        with pytest.raises(EvaluationError):
            write_report(report, tmp_path / "r.x", "xml")

    def test_report_dict_label_names(self, tiny_world):
        dataset, engine = tiny_world
        payload = report_to_dict(evaluate(dataset, engine, runs=1))
        assert "NO DOCUMENTED REACTIONS OR INTOLERANCES" in payload["classification"]["per_class"]
        assert "Life-threatening" in payload["reaction"]["per_class"]
