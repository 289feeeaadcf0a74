"""HTTP face of the workbench.

Request handlers only validate, enqueue jobs, and stream stored artifacts;
they never compute embeddings or projections inline.  Binary matrix
responses use the documented magic + uint64 n + uint64 d + float64 LE
layout.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..errors import ChecksumMismatch, NotFound, TsLatentError, ValidationError
from . import Workbench


class GenerateDataset(BaseModel):
    kind: str = Field(description="s1 | s2 | s3 | mtoy, or 'upload'")
    config: dict = Field(default_factory=dict)
    name: str | None = None
    csv_text: str | None = None


class JobSubmission(BaseModel):
    kind: str
    params: dict = Field(default_factory=dict)


class Selection(BaseModel):
    point_indices: list[int]


def create_app(workbench: Workbench, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tslatent workbench", version="0.1.0")
    app.state.workbench = workbench

    @app.exception_handler(TsLatentError)
    async def _package_error(request: Request, exc: TsLatentError):
        if isinstance(exc, NotFound):
            status = 404
        elif isinstance(exc, ValidationError):
            status = 422
        elif isinstance(exc, ChecksumMismatch):
            status = 500
        else:
            status = 400
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.get("/datasets")
    def list_datasets():
        return workbench.list_datasets()

    @app.post("/datasets")
    def create_dataset(body: GenerateDataset):
        if body.kind == "upload":
            if not body.csv_text or not body.name:
                raise ValidationError("upload needs 'name' and 'csv_text'")
            dataset_id = workbench.upload_dataset(body.name, body.csv_text)
        else:
            dataset_id = workbench.generate_dataset(body.kind, body.config)
        return {"id": dataset_id}

    @app.get("/datasets/{dataset_id}/values")
    def dataset_values(
        dataset_id: str,
        start: int | None = Query(None, alias="from"),
        stop: int | None = Query(None, alias="to"),
        bucket: int = 1,
    ):
        """Values (bucketed first, then sliced) so from/to line up with
        embedding provenance computed at the same bucket."""
        return workbench.dataset_values(dataset_id, start, stop, bucket)

    @app.post("/jobs")
    def submit_job(body: JobSubmission):
        run_id = workbench.submit_job(body.kind, body.params)
        return {"run_id": run_id}

    @app.get("/jobs/{run_id}")
    def poll_job(run_id: str):
        return workbench.poll_job(run_id).snapshot()

    @app.get("/runs/{run_id}/manifest")
    def run_manifest(run_id: str):
        return workbench.manifest(run_id)

    @app.get("/runs/{run_id}/embeddings")
    def run_embeddings(run_id: str):
        payload = workbench.embeddings_payload(run_id)
        return Response(content=payload, media_type="application/octet-stream")

    @app.get("/runs/{run_id}/projection")
    def run_projection(
        run_id: str,
        method: str = "pca",
        perplexity: float = 30.0,
        iterations: int = 1000,
        pca_dims: int = 50,
        seed: int = 0,
    ):
        projection_run = workbench.find_projection(
            run_id,
            method,
            {"perplexity": perplexity, "iterations": iterations, "pca_dims": pca_dims, "seed": seed},
        )
        payload, sidecar = workbench.projection_payload(projection_run)
        headers = {
            "X-Projection-Run": projection_run,
            "X-Projection-Meta": json.dumps(sidecar),
        }
        return Response(content=payload, media_type="application/octet-stream", headers=headers)

    @app.post("/runs/{run_id}/selection")
    def run_selection(run_id: str, body: Selection):
        return workbench.get_selection(run_id, body.point_indices)

    @app.get("/sweeps/{run_id}/table")
    def sweep_table(run_id: str):
        return Response(content=workbench.sweep_table(run_id), media_type="text/csv")

    @app.get("/sweeps/{run_id}/report")
    def sweep_report(run_id: str):
        return workbench.sweep_report(run_id)

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
