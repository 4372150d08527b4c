"""Evaluation harness: repeated batch runs, P/R/F1, Fleiss' kappa, alert counts.

Engine failures are recorded under a distinguished label and count against
recall of the true class; they are never dropped. Metric computation is
deterministic and single-threaded.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Mapping, Optional, Sequence, Union

from .domain import (
    AlertType,
    ClassificationCategory,
    LabelError,
    ReactionType,
    derive_alert,
)
from .engine import AssessmentError, AssessmentRequest, DecisionEngine, DrugNotFoundError, baseline_assess
from .llm.gateway import ForcedOutcome
from .pipeline.generate import SyntheticCase

FAILURE_LABEL = "ENGINE_FAILURE"

ERROR_PLAN_HEADER = ["Patient_ID", "Forced_classification", "Forced_reaction"]


class EvaluationError(ValueError):
    pass


# --- per-class metrics ----------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    case_count: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[Hashable, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float


def confusion_counts(
    predictions: Sequence[Hashable],
    truth: Sequence[Hashable],
    labels: Sequence[Hashable],
) -> dict[Hashable, dict[str, int]]:
    """True/false positive and false negative counts per label."""
    if len(predictions) != len(truth):
        raise EvaluationError(
            f"prediction/truth length mismatch: {len(predictions)} vs {len(truth)}"
        )
    counts = {label: {"tp": 0, "fp": 0, "fn": 0} for label in labels}
    for predicted, actual in zip(predictions, truth):
        if predicted == actual:
            counts[actual]["tp"] += 1
        else:
            if actual in counts:
                counts[actual]["fn"] += 1
            # Failure predictions are not a class: they inflate FN only.
            if predicted in counts:
                counts[predicted]["fp"] += 1
    return counts


def compute_metrics(
    predictions: Sequence[Hashable],
    truth: Sequence[Hashable],
    labels: Sequence[Hashable],
) -> MetricsReport:
    """Per-class precision/recall/F1 plus macro averages.

    A class with no predicted instances has precision 1 when it also has no
    true instances, else 0 (and symmetrically for recall); macro averages run
    over the classes present in truth.
    """
    counts = confusion_counts(predictions, truth, labels)
    per_class: dict[Hashable, ClassMetrics] = {}
    truth_counts = {label: 0 for label in labels}
    for actual in truth:
        if actual in truth_counts:
            truth_counts[actual] += 1

    for label in labels:
        tp, fp, fn = (counts[label][k] for k in ("tp", "fp", "fn"))
        predicted_total = tp + fp
        true_total = tp + fn
        if predicted_total:
            precision = tp / predicted_total
        else:
            precision = 1.0 if true_total == 0 else 0.0
        if true_total:
            recall = tp / true_total
        else:
            recall = 1.0 if predicted_total == 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision, recall, f1, truth_counts[label])

    present = [label for label in labels if truth_counts[label] > 0]
    if present:
        macro_p = sum(per_class[l].precision for l in present) / len(present)
        macro_r = sum(per_class[l].recall for l in present) / len(present)
        macro_f1 = sum(per_class[l].f1 for l in present) / len(present)
    else:
        macro_p = macro_r = macro_f1 = 0.0
    return MetricsReport(per_class, macro_p, macro_r, macro_f1)


# --- Fleiss' kappa ----------------------------------------------------------------


def fleiss_kappa(ratings: Sequence[Sequence[int]]) -> float:
    """Fleiss' kappa over an items x categories matrix of label counts.

    Every row must sum to the same number of raters (runs). When expected
    agreement is 1 (a single category used everywhere), returns 1.0 by
    convention.
    """
    if not ratings:
        raise EvaluationError("rating matrix must have at least one item")
    n_raters = sum(ratings[0])
    if n_raters < 2:
        raise EvaluationError("Fleiss' kappa needs at least two raters")
    n_items = len(ratings)
    n_categories = len(ratings[0])
    totals = [0] * n_categories
    agreement_sum = 0.0
    for row in ratings:
        if len(row) != n_categories:
            raise EvaluationError("rating matrix rows must have equal length")
        if sum(row) != n_raters:
            raise EvaluationError(
                f"rating matrix row sums are inconsistent: {sum(row)} != {n_raters}"
            )
        agreement_sum += (sum(v * v for v in row) - n_raters) / (
            n_raters * (n_raters - 1)
        )
        for j, value in enumerate(row):
            totals[j] += value
    p_bar = agreement_sum / n_items
    proportions = [t / (n_items * n_raters) for t in totals]
    p_expected = sum(p * p for p in proportions)
    if p_expected >= 1.0:
        return 1.0
    return (p_bar - p_expected) / (1.0 - p_expected)


def build_rating_matrix(
    runs: Sequence[Sequence[Hashable]], labels: Sequence[Hashable]
) -> list[list[int]]:
    """Per-item counts of label assignments across runs."""
    if not runs:
        raise EvaluationError("need at least one run")
    n_items = len(runs[0])
    if any(len(run) != n_items for run in runs):
        raise EvaluationError("runs must have equal length")
    index = {label: i for i, label in enumerate(labels)}
    matrix = [[0] * len(labels) for _ in range(n_items)]
    for run in runs:
        for item, label in enumerate(run):
            if label not in index:
                raise EvaluationError(f"label {label!r} missing from category list")
            matrix[item][index[label]] += 1
    return matrix


# --- batch runs --------------------------------------------------------------------


@dataclass(frozen=True)
class CasePrediction:
    classification: Union[ClassificationCategory, str]
    reaction: Union[ReactionType, str]
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class BatchRunResult:
    runs: list[list[CasePrediction]]
    latencies: list[float]  # seconds, one per (run, case)

    @property
    def mean_latency(self) -> float:
        return sum(self.latencies) / len(self.latencies) if self.latencies else 0.0


def run_batch(
    dataset: Sequence[SyntheticCase],
    engine: DecisionEngine,
    runs: int = 5,
) -> BatchRunResult:
    """Assess every case `runs` times, recording predictions and latency."""
    if runs < 1:
        raise EvaluationError("runs must be >= 1")
    all_runs: list[list[CasePrediction]] = []
    latencies: list[float] = []
    for _ in range(runs):
        predictions: list[CasePrediction] = []
        for case in dataset:
            started = time.perf_counter()
            try:
                assessment = engine.assess_complete(
                    AssessmentRequest(
                        drug_code=case.drug_code, current_note=case.clinical_note
                    )
                )
                prediction = CasePrediction(
                    assessment.classification, assessment.reaction
                )
            except (AssessmentError, DrugNotFoundError, ValueError) as exc:
                prediction = CasePrediction(FAILURE_LABEL, FAILURE_LABEL, str(exc))
            latencies.append(time.perf_counter() - started)
            predictions.append(prediction)
        all_runs.append(predictions)
    return BatchRunResult(all_runs, latencies)


# --- alert bookkeeping ---------------------------------------------------------------


@dataclass(frozen=True)
class AlertCounts:
    none: int
    interruptive: int
    non_interruptive: int

    @property
    def total(self) -> int:
        return self.none + self.interruptive + self.non_interruptive

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.none, self.interruptive, self.non_interruptive)


def _tally(alerts: Sequence[AlertType]) -> AlertCounts:
    return AlertCounts(
        none=sum(1 for a in alerts if a is AlertType.NONE),
        interruptive=sum(1 for a in alerts if a is AlertType.INTERRUPTIVE),
        non_interruptive=sum(1 for a in alerts if a is AlertType.NON_INTERRUPTIVE),
    )


@dataclass(frozen=True)
class AlertReport:
    truth: AlertCounts
    system: AlertCounts
    baseline: AlertCounts


def alert_report(
    predictions: Sequence[CasePrediction], dataset: Sequence[SyntheticCase]
) -> AlertReport:
    """Alert triples for ground truth, the system, and the traditional baseline.

    Failed predictions derive as Interruptive (fail-safe) so the triples
    always sum to the dataset size.
    """
    if len(predictions) != len(dataset):
        raise EvaluationError("predictions and dataset must be the same length")
    system_alerts = []
    for prediction in predictions:
        if prediction.failed:
            system_alerts.append(AlertType.INTERRUPTIVE)
        else:
            system_alerts.append(
                derive_alert(prediction.classification, prediction.reaction)
            )
    return AlertReport(
        truth=_tally([case.alert_type for case in dataset]),
        system=_tally(system_alerts),
        baseline=_tally([baseline_assess(case.classification) for case in dataset]),
    )


def interruptive_reduction(
    system: AlertCounts, baseline: AlertCounts, total: int
) -> float:
    """Fraction of cases whose interruptive alert the system avoids."""
    if system.total != total or baseline.total != total:
        raise EvaluationError("alert triples must sum to the dataset size")
    if total == 0:
        return 0.0
    return (baseline.interruptive - system.interruptive) / total


# --- full report -----------------------------------------------------------------------


@dataclass
class EvaluationReport:
    classification: MetricsReport
    reaction: MetricsReport
    alerts: AlertReport
    fleiss_kappa: float
    reaction_fleiss_kappa: float
    interruptive_reduction: float
    mean_latency_seconds: float
    run_count: int
    case_count: int


def evaluate(
    dataset: Sequence[SyntheticCase],
    engine: DecisionEngine,
    runs: int = 5,
) -> EvaluationReport:
    """Batch-run the engine and assemble the full evaluation report.

    Per-run metrics are averaged (identical runs average to themselves);
    kappa is computed across runs; alert triples come from the first run.
    """
    batch = run_batch(dataset, engine, runs)

    class_labels = list(ClassificationCategory) + [FAILURE_LABEL]
    reaction_labels = list(ReactionType) + [FAILURE_LABEL]
    truth_classes = [case.classification for case in dataset]
    truth_reactions = [case.reaction_type for case in dataset]

    class_reports = []
    reaction_reports = []
    for predictions in batch.runs:
        class_reports.append(
            compute_metrics(
                [p.classification for p in predictions], truth_classes, class_labels
            )
        )
        reaction_reports.append(
            compute_metrics(
                [p.reaction for p in predictions], truth_reactions, reaction_labels
            )
        )

    classification = _average_reports(class_reports, class_labels)
    reaction = _average_reports(reaction_reports, reaction_labels)

    kappa = fleiss_kappa(
        build_rating_matrix(
            [[p.classification for p in run] for run in batch.runs], class_labels
        )
    ) if runs >= 2 else 1.0
    reaction_kappa = fleiss_kappa(
        build_rating_matrix(
            [[p.reaction for p in run] for run in batch.runs], reaction_labels
        )
    ) if runs >= 2 else 1.0

    alerts = alert_report(batch.runs[0], dataset)
    reduction = interruptive_reduction(alerts.system, alerts.baseline, len(dataset))
    return EvaluationReport(
        classification=classification,
        reaction=reaction,
        alerts=alerts,
        fleiss_kappa=kappa,
        reaction_fleiss_kappa=reaction_kappa,
        interruptive_reduction=reduction,
        mean_latency_seconds=batch.mean_latency,
        run_count=runs,
        case_count=len(dataset),
    )


def _average_reports(
    reports: Sequence[MetricsReport], labels: Sequence[Hashable]
) -> MetricsReport:
    n = len(reports)
    per_class = {}
    for label in labels:
        per_class[label] = ClassMetrics(
            precision=sum(r.per_class[label].precision for r in reports) / n,
            recall=sum(r.per_class[label].recall for r in reports) / n,
            f1=sum(r.per_class[label].f1 for r in reports) / n,
            case_count=reports[0].per_class[label].case_count,
        )
    return MetricsReport(
        per_class,
        sum(r.macro_precision for r in reports) / n,
        sum(r.macro_recall for r in reports) / n,
        sum(r.macro_f1 for r in reports) / n,
    )


# --- error plan -------------------------------------------------------------------------


def load_error_plan(path: Union[str, Path]) -> dict[str, ForcedOutcome]:
    """Load the error-injection plan CSV for the rule-based backend."""
    plan: dict[str, ForcedOutcome] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ERROR_PLAN_HEADER:
            raise EvaluationError(
                f"error plan header must be {ERROR_PLAN_HEADER}, got {header}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise EvaluationError(f"error plan line {line_no}: need 3 columns")
            patient_id, forced_class, forced_reaction = row
            try:
                plan[patient_id] = ForcedOutcome(
                    classification=(
                        ClassificationCategory.parse(forced_class)
                        if forced_class.strip()
                        else None
                    ),
                    reaction=(
                        ReactionType.parse(forced_reaction)
                        if forced_reaction.strip()
                        else None
                    ),
                )
            except LabelError as exc:
                raise EvaluationError(f"error plan line {line_no}: {exc}") from exc
    return plan


def save_error_plan(
    plan: Mapping[str, ForcedOutcome], path: Union[str, Path]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(ERROR_PLAN_HEADER)
        for patient_id, forced in plan.items():
            writer.writerow(
                [
                    patient_id,
                    forced.classification.display if forced.classification else "",
                    forced.reaction.display if forced.reaction else "",
                ]
            )


# --- serialization ------------------------------------------------------------------------


def _label_name(label: Hashable) -> str:
    return label.display if hasattr(label, "display") else str(label)


def report_to_dict(report: EvaluationReport) -> dict:
    """Stable, JSON-serializable view of the report."""

    def metrics_dict(metrics: MetricsReport) -> dict:
        return {
            "per_class": {
                _label_name(label): {
                    "precision": cm.precision,
                    "recall": cm.recall,
                    "f1": cm.f1,
                    "cases": cm.case_count,
                }
                for label, cm in metrics.per_class.items()
            },
            "macro_precision": metrics.macro_precision,
            "macro_recall": metrics.macro_recall,
            "macro_f1": metrics.macro_f1,
        }

    def counts_dict(counts: AlertCounts) -> dict:
        return {
            "none": counts.none,
            "interruptive": counts.interruptive,
            "non_interruptive": counts.non_interruptive,
        }

    return {
        "classification": metrics_dict(report.classification),
        "reaction": metrics_dict(report.reaction),
        "alerts": {
            "truth": counts_dict(report.alerts.truth),
            "system": counts_dict(report.alerts.system),
            "baseline": counts_dict(report.alerts.baseline),
        },
        "fleiss_kappa": report.fleiss_kappa,
        "reaction_fleiss_kappa": report.reaction_fleiss_kappa,
        "interruptive_reduction": report.interruptive_reduction,
        "mean_latency_seconds": report.mean_latency_seconds,
        "run_count": report.run_count,
        "case_count": report.case_count,
    }


def write_report(
    report: EvaluationReport, path: Union[str, Path], fmt: str = "json"
) -> None:
    """Write the report with stable field ordering; reruns are byte-identical
    up to the measured latency field."""
    data = report_to_dict(report)
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", "utf-8")
    elif fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["section", "name", "metric", "value"])
            for section in ("classification", "reaction"):
                for label in sorted(data[section]["per_class"]):
                    for metric, value in sorted(
                        data[section]["per_class"][label].items()
                    ):
                        writer.writerow([section, label, metric, value])
                for metric in ("macro_precision", "macro_recall", "macro_f1"):
                    writer.writerow([section, "macro", metric, data[section][metric]])
            for who in ("truth", "system", "baseline"):
                for metric, value in sorted(data["alerts"][who].items()):
                    writer.writerow(["alerts", who, metric, value])
            for key in (
                "fleiss_kappa",
                "reaction_fleiss_kappa",
                "interruptive_reduction",
                "mean_latency_seconds",
                "run_count",
                "case_count",
            ):
                writer.writerow(["summary", "", key, data[key]])
    elif fmt == "markdown":
        lines = ["# Evaluation report", ""]
        for section in ("classification", "reaction"):
            lines.append(f"## {section.capitalize()} metrics")
            lines.append("")
            lines.append("| Class | Precision | Recall | F1 | Cases |")
            lines.append("| --- | --- | --- | --- | --- |")
            for label in sorted(data[section]["per_class"]):
                cm = data[section]["per_class"][label]
                lines.append(
                    f"| {label} | {cm['precision']:.4f} | {cm['recall']:.4f} "
                    f"| {cm['f1']:.4f} | {cm['cases']} |"
                )
            lines.append(
                f"| **Macro** | {data[section]['macro_precision']:.4f} "
                f"| {data[section]['macro_recall']:.4f} "
                f"| {data[section]['macro_f1']:.4f} | {data['case_count']} |"
            )
            lines.append("")
        lines.append("## Alerts")
        lines.append("")
        lines.append("| Source | None | Interruptive | Non-interruptive |")
        lines.append("| --- | --- | --- | --- |")
        for who in ("truth", "system", "baseline"):
            counts = data["alerts"][who]
            lines.append(
                f"| {who} | {counts['none']} | {counts['interruptive']} "
                f"| {counts['non_interruptive']} |"
            )
        lines.append("")
        lines.append(f"- Fleiss' kappa (classification): {data['fleiss_kappa']}")
        lines.append(f"- Fleiss' kappa (reaction): {data['reaction_fleiss_kappa']}")
        lines.append(f"- Interruptive reduction: {data['interruptive_reduction']}")
        lines.append(f"- Mean latency (s): {data['mean_latency_seconds']}")
        lines.append(f"- Runs: {data['run_count']}")
        path.write_text("\n".join(lines) + "\n", "utf-8")
    else:
        raise EvaluationError(f"unknown report format {fmt!r}")
