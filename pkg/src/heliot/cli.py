"""Command-line entry points: ingestion, generators, evaluation, and serving."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import config
from .drugstore import DrugStore
from .engine import DecisionEngine
from .evaluation import evaluate, load_error_plan, write_report
from .llm.gateway import RemoteChatBackend, RuleBasedBackend, ScriptedChatBackend
from .patients import PatientStore
from .pipeline.generate import (
    DEFAULT_CASE_STRATA,
    DEFAULT_DRUG_DISTRIBUTION,
    export_dataset_csv,
    generate_drug_catalog,
    generate_patient_dataset,
    import_dataset_csv,
)
from .pipeline.ingest import (
    export_catalog_csv,
    ingest_leaflet_csv,
    ingest_synonyms_csv,
    read_leaflet_csv,
    write_synonyms_csv,
)
from .synonyms import IngredientEntry, IngredientKind, PubChemClient


@click.group()
def main() -> None:
    """Decision support toolkit: data pipeline, evaluation, and API server."""


@main.command("ingest-leaflets")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--drug-db", default=None, help="Drug store path (default from env).")
def ingest_leaflets_cmd(csv_path: str, drug_db: str | None) -> None:
    """Load a processed leaflet CSV into the drug store."""
    store = DrugStore(drug_db or config.drug_db_path())
    result = ingest_leaflet_csv(csv_path, store)
    for diagnostic in result.row_errors:
        click.echo(f"skipped: {diagnostic}", err=True)
    click.echo(f"stored {result.stored} drug records")
    store.close()


@main.command("ingest-synonyms")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
def ingest_synonyms_cmd(csv_path: str) -> None:
    """Validate and load an ingredient synonyms CSV."""
    index = ingest_synonyms_csv(csv_path)
    click.echo(f"loaded {len(index)} ingredient entries")


@main.command("fetch-synonyms")
@click.argument("names_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, help="Output CSV (default: stdout).")
@click.option(
    "--kind",
    type=click.Choice(["active", "inactive"]),
    default="active",
    show_default=True,
)
@click.option("--base-url", default=None, help="Override the synonym service URL.")
def fetch_synonyms_cmd(
    names_file: str, out_path: str | None, kind: str, base_url: str | None
) -> None:
    """Fetch remote synonyms for one English ingredient name per input line."""
    client = PubChemClient(**({"base_url": base_url} if base_url else {}))
    entries = []
    for line in Path(names_file).read_text(encoding="utf-8").splitlines():
        name = line.strip()
        if not name:
            continue
        synonyms = client.fetch_synonyms(name)
        entries.append(
            IngredientEntry(
                ingredient=name,
                english_name=name,
                synonyms=tuple(synonyms),
                kind=IngredientKind(kind),
            )
        )
        click.echo(f"{name}: {len(synonyms)} synonyms", err=True)
    if out_path:
        write_synonyms_csv(entries, out_path)
        click.echo(f"wrote {len(entries)} entries to {out_path}")
    else:
        for entry in entries:
            click.echo(f"{entry.english_name},{'#'.join(entry.synonyms)}")


@main.command("generate-catalog")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def generate_catalog_cmd(seed: int, out_path: str) -> None:
    """Generate the synthetic drug catalog in the leaflet CSV schema."""
    records = generate_drug_catalog(DEFAULT_DRUG_DISTRIBUTION, seed=seed)
    export_catalog_csv(records, out_path)
    click.echo(f"wrote {len(records)} drug records to {out_path}")


@main.command("generate-patients")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--catalog", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def generate_patients_cmd(seed: int, catalog: str, out_path: str) -> None:
    """Generate the stratified synthetic patient dataset."""
    records, errors = read_leaflet_csv(catalog)
    for diagnostic in errors:
        click.echo(f"catalog: {diagnostic}", err=True)
    cases = generate_patient_dataset(DEFAULT_CASE_STRATA, records, seed=seed)
    export_dataset_csv(cases, out_path)
    click.echo(f"wrote {len(cases)} cases to {out_path}")


def _build_backend(backend: str, error_plan_path: str | None, fixtures: str | None):
    if backend == "rule":
        plan = load_error_plan(error_plan_path) if error_plan_path else None
        return RuleBasedBackend(error_plan=plan)
    if backend == "scripted":
        if not fixtures:
            raise click.UsageError("--fixtures is required for the scripted backend")
        return ScriptedChatBackend(fixtures)
    base_url = config.llm_base_url()
    if not base_url:
        raise click.UsageError(
            f"{config.ENV_LLM_BASE_URL} must be set for the remote backend"
        )
    return RemoteChatBackend(
        base_url, api_key=config.llm_api_key(), model=config.llm_model()
    )


@main.command("evaluate")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--backend",
    type=click.Choice(["rule", "scripted", "remote"]),
    default="rule",
    show_default=True,
)
@click.option("--runs", type=int, default=5, show_default=True)
@click.option("--error-plan", "error_plan_path", default=None, type=click.Path(exists=True))
@click.option("--fixtures", default=None, type=click.Path(exists=True))
@click.option("--catalog", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--drug-db", default=None, help="Existing drug store path.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["json", "csv", "markdown"]),
    default="json",
    show_default=True,
)
def evaluate_cmd(
    dataset: str,
    backend: str,
    runs: int,
    error_plan_path: str | None,
    fixtures: str | None,
    catalog: str | None,
    drug_db: str | None,
    out_path: str,
    fmt: str,
) -> None:
    """Batch-run the engine over a dataset and write the metrics report."""
    cases = import_dataset_csv(dataset)
    if catalog:
        store = DrugStore(":memory:")
        records, _ = read_leaflet_csv(catalog)
        store.put_many(records)
    else:
        store = DrugStore(drug_db or config.drug_db_path())
    chat_backend = _build_backend(backend, error_plan_path, fixtures)
    engine = DecisionEngine(store, chat_backend)
    try:
        report = evaluate(cases, engine, runs=runs)
    finally:
        engine.close()
        store.close()
    write_report(report, out_path, fmt)
    click.echo(
        f"macro P/R/F1 = {report.classification.macro_precision:.4f}/"
        f"{report.classification.macro_recall:.4f}/"
        f"{report.classification.macro_f1:.4f}; "
        f"kappa = {report.fleiss_kappa:.4f}; "
        f"alerts truth/system/baseline = {report.alerts.truth.as_tuple()}/"
        f"{report.alerts.system.as_tuple()}/{report.alerts.baseline.as_tuple()}; "
        f"mean latency = {report.mean_latency_seconds * 1000:.1f} ms"
    )
    click.echo(f"report written to {out_path}")


@main.command("serve")
@click.option("--bind", default=None, help="host:port (default from env).")
@click.option(
    "--backend",
    type=click.Choice(["rule", "scripted", "remote"]),
    default="rule",
    show_default=True,
)
@click.option("--fixtures", default=None, type=click.Path(exists=True))
@click.option("--drug-db", default=None)
@click.option("--patient-db", default=None)
@click.option("--catalog", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--synonyms", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False))
def serve_cmd(
    bind: str | None,
    backend: str,
    fixtures: str | None,
    drug_db: str | None,
    patient_db: str | None,
    catalog: str | None,
    synonyms: str | None,
    ui_dir: str | None,
) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app

    if catalog:
        store = DrugStore(":memory:")
        records, _ = read_leaflet_csv(catalog)
        store.put_many(records)
    else:
        store = DrugStore(drug_db or config.drug_db_path())
    patients = PatientStore(patient_db or config.patient_db_path())
    index = ingest_synonyms_csv(synonyms) if synonyms else None
    chat_backend = _build_backend(backend, None, fixtures)
    engine = DecisionEngine(store, chat_backend, synonyms=index, patients=patients)
    app = create_app(
        engine,
        store,
        patients,
        backend_kind=backend,
        api_token=config.api_token(),
        ui_dir=ui_dir,
    )
    host, _, port = (bind or config.bind_addr()).partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    sys.exit(main())
