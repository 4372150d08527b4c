"""HTTP facade: streamed assessments, patient notes, drug lookup, batch jobs.

Assessments stream as server-sent events: zero or more `chunk` events followed
by exactly one `final` (the assessment JSON) or one `error` event. A backend
that fails before producing any chunk yields a plain 502 instead.
"""

from __future__ import annotations

import csv
import io
import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Optional

from fastapi import Depends, FastAPI, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .domain import Assessment
from .engine import (
    AssessmentError,
    AssessmentRequest,
    DecisionEngine,
    DrugNotFoundError,
    ResponseParseError,
)
from .drugstore import DrugRecord, DrugStore
from .patients import ClinicalNote, NoteError, NoteSource, PatientStore
from .pipeline.generate import DatasetFormatError, SyntheticCase, read_dataset_csv

RESULTS_CSV_HEADER = [
    "Patient_ID",
    "Drug_code",
    "Predicted_classification",
    "Predicted_reaction_type",
    "Predicted_alert_type",
    "Status",
]


class AssessmentBody(BaseModel):
    drug_code: str
    patient_id: Optional[str] = None
    clinical_note: Optional[str] = None
    language_hint: Optional[str] = None


class NoteBody(BaseModel):
    text: str
    source: str = "api"


def sse_event(event: str, data: str) -> str:
    """Encode one SSE event; multi-line data becomes multiple data: lines."""
    payload = "".join(f"data: {line}\n" for line in data.split("\n"))
    return f"event: {event}\n{payload}\n"


def assessment_to_dict(assessment: Assessment) -> dict:
    return {
        "analysis": assessment.analysis,
        "classification": assessment.classification.display,
        "reaction_type": assessment.reaction.display,
        "alert_type": assessment.alert.display,
        "consistency_flags": list(assessment.consistency_flags),
        "raw_response": assessment.raw_response,
    }


def record_to_dict(record: DrugRecord) -> dict:
    return {
        "drug_code": record.drug_code,
        "drug_name": record.drug_name,
        "drug_form": record.drug_form,
        "atc_code": record.atc_code,
        "composition": record.composition,
        "excipients": record.excipients,
        "contraindications": record.contraindications,
        "drug_interactions": record.drug_interactions,
        "side_effects": record.side_effects,
        "incompatibilities": record.incompatibilities,
    }


class BatchJob:
    """In-process batch job over an uploaded dataset."""

    def __init__(self, job_id: str, total: int):
        self.job_id = job_id
        self.state = "queued"
        self.completed = 0
        self.total = total
        self.rows: list[list[str]] = []
        self.error: Optional[str] = None
        self.lock = threading.Lock()

    def to_dict(self) -> dict:
        with self.lock:
            return {
                "job_id": self.job_id,
                "state": self.state,
                "completed": self.completed,
                "total": self.total,
                "result_location": (
                    f"/api/batches/{self.job_id}/results.csv"
                    if self.state == "done"
                    else None
                ),
                "error": self.error,
            }


def create_app(
    engine: DecisionEngine,
    drugs: DrugStore,
    patients: PatientStore,
    backend_kind: str = "rule",
    api_token: Optional[str] = None,
    batch_workers: int = 4,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="HELIOT decision support API", openapi_url="/api/openapi.json")
    jobs: dict[str, BatchJob] = {}
    jobs_lock = threading.Lock()
    pool = ThreadPoolExecutor(max_workers=batch_workers, thread_name_prefix="heliot-batch")

    def require_token(request: Request) -> None:
        if api_token is None:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {api_token}":
            raise HTTPException(status_code=401, detail="missing or invalid token")

    guarded = [Depends(require_token)]

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "status": "ok",
            "backendKind": backend_kind,
            "drugCount": drugs.count(),
        }

    # -- assessments ---------------------------------------------------------

    @app.post("/api/assessments", dependencies=guarded)
    def create_assessment(body: AssessmentBody):
        note = body.clinical_note or ""
        if not note.strip() and not body.patient_id:
            raise HTTPException(
                status_code=422,
                detail="either clinical_note or patient_id is required",
            )
        try:
            request = AssessmentRequest(
                drug_code=body.drug_code,
                patient_id=body.patient_id,
                current_note=note,
                language_hint=body.language_hint,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            stream = engine.assess(request)
        except DrugNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (AssessmentError, NoteError) as exc:
            raise HTTPException(status_code=502, detail=str(exc))

        iterator = iter(stream)
        try:
            first_chunk = next(iterator)
        except StopIteration:
            first_chunk = None
        except ResponseParseError as exc:
            return StreamingResponse(
                iter([sse_event("error", f"unparseable backend response: {exc}")]),
                media_type="text/event-stream",
            )
        except AssessmentError as exc:
            # Nothing streamed yet: report the backend failure as a plain 502.
            raise HTTPException(status_code=502, detail=str(exc))

        def event_stream() -> Iterator[str]:
            try:
                if first_chunk is not None:
                    yield sse_event("chunk", first_chunk.delta_text)
                    for chunk in iterator:
                        yield sse_event("chunk", chunk.delta_text)
                yield sse_event(
                    "final", json.dumps(assessment_to_dict(stream.final))
                )
            except ResponseParseError as exc:
                yield sse_event("error", f"unparseable backend response: {exc}")
            except AssessmentError as exc:
                yield sse_event("error", str(exc))

        return StreamingResponse(event_stream(), media_type="text/event-stream")

    # -- patient notes ---------------------------------------------------------

    @app.post("/api/patients/{patient_id}/notes", status_code=201, dependencies=guarded)
    def add_note(patient_id: str, body: NoteBody) -> dict:
        try:
            note = ClinicalNote(
                patient_id=patient_id,
                timestamp=datetime.now(timezone.utc),
                text=body.text,
                source=NoteSource(body.source),
            )
            patients.append(note)
        except (NoteError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "patient_id": note.patient_id,
            "timestamp": note.timestamp.isoformat(),
            "source": note.source.value,
            "text": note.text,
        }

    @app.get("/api/patients/{patient_id}/history", dependencies=guarded)
    def get_history(patient_id: str) -> dict:
        history = patients.get_history(patient_id)
        return {
            "patient_id": patient_id,
            "notes": [
                {
                    "timestamp": note.timestamp.isoformat(),
                    "source": note.source.value,
                    "text": note.text,
                }
                for note in history.notes
            ],
        }

    # -- drug lookup -------------------------------------------------------------

    @app.get("/api/drugs/{drug_code}", dependencies=guarded)
    def get_drug(drug_code: str) -> dict:
        record = drugs.get(drug_code)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown drug code {drug_code}")
        return record_to_dict(record)

    @app.get("/api/drugs", dependencies=guarded)
    def query_drugs(atc_prefix: str = "") -> dict:
        if not atc_prefix:
            raise HTTPException(status_code=422, detail="atc_prefix is required")
        return {"drugs": [record_to_dict(r) for r in drugs.query_by_atc_prefix(atc_prefix)]}

    # -- batch jobs -----------------------------------------------------------------

    def run_job(job: BatchJob, cases: list[SyntheticCase]) -> None:
        with job.lock:
            job.state = "running"
        try:
            for case in cases:
                try:
                    assessment = engine.assess_complete(
                        AssessmentRequest(
                            drug_code=case.drug_code,
                            current_note=case.clinical_note,
                        )
                    )
                    row = [
                        case.patient_id,
                        case.drug_code,
                        assessment.classification.display,
                        assessment.reaction.display,
                        assessment.alert.display,
                        "ok",
                    ]
                except (AssessmentError, DrugNotFoundError, ValueError) as exc:
                    row = [case.patient_id, case.drug_code, "", "", "", f"error: {exc}"]
                with job.lock:
                    job.rows.append(row)
                    job.completed += 1
            with job.lock:
                job.state = "done"
        except Exception as exc:  # failed job, not failed case
            with job.lock:
                job.state = "failed"
                job.error = str(exc)

    @app.post("/api/batches", status_code=202, dependencies=guarded)
    def create_batch(file: UploadFile) -> dict:
        text = file.file.read().decode("utf-8")
        try:
            cases = read_dataset_csv(io.StringIO(text))
        except DatasetFormatError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        job = BatchJob(uuid.uuid4().hex, total=len(cases))
        with jobs_lock:
            jobs[job.job_id] = job
        pool.submit(run_job, job, cases)
        return job.to_dict()

    def find_job(job_id: str) -> BatchJob:
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown batch job {job_id}")
        return job

    @app.get("/api/batches/{job_id}", dependencies=guarded)
    def get_batch(job_id: str) -> dict:
        return find_job(job_id).to_dict()

    @app.get("/api/batches/{job_id}/results.csv", dependencies=guarded)
    def get_batch_results(job_id: str) -> PlainTextResponse:
        job = find_job(job_id)
        with job.lock:
            if job.state != "done":
                raise HTTPException(
                    status_code=404, detail=f"job {job_id} is {job.state}, not done"
                )
            rows = list(job.rows)
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(RESULTS_CSV_HEADER)
        writer.writerows(rows)
        return PlainTextResponse(buffer.getvalue(), media_type="text/csv")

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

        @app.get("/")
        def index() -> JSONResponse:
            return JSONResponse({"ui": "/ui/", "openapi": "/api/openapi.json"})

    return app
