"""Operational shell: one facade the HTTP service and the CLI both call.

All heavy computation (fine-tuning, sweeps, embedding extraction,
projection) goes through the job queue and materializes artifacts in the
store; read methods only deserialize stored artifacts.
"""

from __future__ import annotations

import dataclasses
import json
import time
from pathlib import Path

import numpy as np

from ..analysis import (
    SWEEP_COLUMNS,
    SweepGrid,
    SweepResult,
    correlation_matrix,
    export_parallel_coordinates,
    f_scores,
    permutation_importance,
    run_sweep,
    select_epoch_budget,
)
from ..core import (
    TimeSeries,
    WindowSpec,
    downsample_mean,
    load_series_csv,
    slice_windows,
    window_values,
)
from ..encoder import (
    EncoderModel,
    embed_windows,
    init_model,
    load_checkpoint_bytes,
    preset_config,
    save_checkpoint_bytes,
)
from ..errors import IndexOutOfRange, NotFound, ValidationError
from ..finetune import FinetuneConfig, finetune, select_window_lengths
from ..projection import (
    PROJECTION_METHODS,
    EmbeddingMatrix,
    ProjectionParams,
    project_pipeline,
)
from ..synth import SynthConfig, generate
from . import formats
from .jobs import Job, JobManager
from .store import Store, sha256_bytes

EMBED_CHUNK = 256


class Workbench:
    def __init__(self, store_dir: str | Path, workers: int = 2):
        self.store = Store(store_dir)
        self.store.recover_interrupted()
        self.jobs = JobManager(self.store, workers=workers)

    def close(self) -> None:
        self.jobs.shutdown()

    # ------------------------------------------------------------- datasets

    def generate_dataset(self, kind: str, overrides: dict | None = None) -> str:
        """Create a synthetic dataset; content-addressed, so regenerating an
        identical config reuses the stored copy."""
        overrides = dict(overrides or {})
        known = {f.name for f in dataclasses.fields(SynthConfig)}
        unknown = set(overrides) - known
        if unknown:
            raise ValidationError(f"unknown generator options {sorted(unknown)}")
        for key in ("segment_periods", "segment_amplitudes", "anomaly_positions",
                    "channel_periods"):
            if key in overrides and overrides[key] is not None:
                overrides[key] = tuple(overrides[key])
        if "subsequence_anomalies" in overrides and overrides["subsequence_anomalies"] is not None:
            overrides["subsequence_anomalies"] = tuple(
                tuple(x) for x in overrides["subsequence_anomalies"]
            )
        cfg = SynthConfig(**overrides)
        ts, truth = generate(kind, cfg)
        return self.store.put_dataset(ts, truth, kind=kind, config=dataclasses.asdict(cfg))

    def upload_dataset(self, name: str, csv_text: str) -> str:
        tmp = self.store.root / f".upload-{name}.csv"
        tmp.write_text(csv_text, encoding="utf-8")
        try:
            ts = load_series_csv(tmp, name=name)
        finally:
            tmp.unlink(missing_ok=True)
        return self.store.put_dataset(ts, None, kind="uploaded", config=None)

    def list_datasets(self) -> list[dict]:
        return self.store.list_datasets()

    def dataset_values(
        self, dataset_id: str, start: int | None = None, stop: int | None = None, bucket: int = 1
    ) -> dict:
        """Values for the series strip; ``start``/``stop`` index the bucketed
        series so they line up with embedding provenance at the same bucket."""
        ts, _truth, meta = self.store.get_dataset(dataset_id)
        if bucket < 1:
            raise ValidationError("bucket must be >= 1")
        if bucket > 1:
            ts = downsample_mean(ts, bucket)
        start = 0 if start is None else max(0, int(start))
        stop = ts.length if stop is None else min(ts.length, int(stop))
        if start > stop:
            raise ValidationError(f"start {start} > stop {stop}")
        return {
            "dataset_id": dataset_id,
            "bucket": bucket,
            "start": start,
            "stop": stop,
            "length": ts.length,
            "channel_names": list(ts.channel_names),
            "values": ts.values[start:stop].tolist(),
            "annotations": meta.get("annotations"),
        }

    # ----------------------------------------------------------------- jobs

    def submit_job(self, kind: str, params: dict) -> str:
        params = dict(params)
        validator = getattr(self, f"_validate_{kind}", None)
        if validator is None:
            raise ValidationError(f"unknown job kind {kind!r}")
        validator(params)
        run_id, config_hash = self.store.next_run_id(kind, params)
        self.store.create_run(run_id, kind, params, config_hash)
        body = getattr(self, f"_job_{kind}")
        self.jobs.submit(run_id, kind, params, lambda report: body(run_id, params, report))
        return run_id

    def poll_job(self, run_id: str) -> Job:
        return self.jobs.poll(run_id)

    def wait_job(self, run_id: str, timeout: float | None = None) -> Job:
        return self.jobs.wait(run_id, timeout)

    # ------------------------------------------------------ job validation

    def _require_dataset(self, params: dict) -> None:
        dataset_id = params.get("dataset_id")
        if not dataset_id:
            raise ValidationError("dataset_id is required")
        self.store.get_dataset(dataset_id)  # NotFound if absent

    def _validate_finetune(self, params: dict) -> None:
        self._require_dataset(params)
        preset_config(params.get("preset", "small"))
        self._finetune_config(params, patch_len=None)  # field validation only

    def _finetune_config(self, params: dict, patch_len: int | None) -> FinetuneConfig | None:
        fields = dict(
            training_percent=params.get("training_percent", 0.15),
            valid_percent=params.get("valid_percent", 0.3),
            mask_percent=params.get("mask_percent", 0.25),
            mix_windows=params.get("mix_windows", True),
            epochs=params.get("epochs", 20),
            batch_size=params.get("batch_size", 32),
            learning_rate=params.get("learning_rate", 1e-3),
            seed=params.get("seed", 0),
        )
        lengths = params.get("window_lengths")
        if lengths is None and patch_len is None:
            FinetuneConfig(window_lengths=(17,), **fields)  # validate shared fields
            return None
        if lengths is None:
            ts, _, _ = self.store.get_dataset(params["dataset_id"])
            train_region = int(fields["training_percent"] * ts.length)
            valid_region = int(fields["valid_percent"] * ts.length)
            lengths = select_window_lengths(
                ts,
                int(params.get("n_windows", 1)),
                patch_len,
                base_window=int(params.get("base_window", 17)),
                max_size=max(2, min(train_region, valid_region, ts.length // 2)),
            )
        return FinetuneConfig(window_lengths=tuple(int(w) for w in lengths), **fields)

    def _validate_embed(self, params: dict) -> None:
        self._require_dataset(params)
        if params.get("model_run"):
            manifest = self.store.read_manifest(params["model_run"])
            if manifest["kind"] not in ("finetune", "embed"):
                raise ValidationError(f"run {params['model_run']!r} carries no model checkpoint")
        else:
            preset_config(params.get("preset", "small"))
        if int(params.get("window", 54)) < 1 or int(params.get("stride", 2)) < 1:
            raise ValidationError("window and stride must be positive")
        if int(params.get("bucket", 1)) < 1:
            raise ValidationError("bucket must be >= 1")

    def _validate_project(self, params: dict) -> None:
        embed_run = params.get("embed_run")
        if not embed_run:
            raise ValidationError("embed_run is required")
        manifest = self.store.read_manifest(embed_run)
        if manifest["kind"] != "embed":
            raise ValidationError(f"run {embed_run!r} is not an embedding run")
        method = params.get("method", "pca")
        if method not in PROJECTION_METHODS:
            raise ValidationError(f"unknown method {method!r}; choose from {PROJECTION_METHODS}")
        self._projection_params(params)

    @staticmethod
    def _projection_params(params: dict) -> ProjectionParams:
        return ProjectionParams(
            perplexity=float(params.get("perplexity", 30.0)),
            iterations=int(params.get("iterations", 1000)),
            pca_dims=int(params.get("pca_dims", 50)),
            seed=int(params.get("seed", 0)),
            learning_rate=float(params.get("learning_rate", 200.0)),
        )

    def _validate_sweep(self, params: dict) -> None:
        self._require_dataset(params)
        preset_config(params.get("preset", "small"))
        self._sweep_grid(params)

    @staticmethod
    def _sweep_grid(params: dict) -> SweepGrid:
        return SweepGrid(
            epochs=int(params.get("epochs", 20)),
            dataset_percents=tuple(params.get("dataset_percents", (0.15, 0.2, 0.3))),
            mask_percents=tuple(params.get("mask_percents", (0.25, 0.5, 0.75))),
            n_windows_options=tuple(params.get("n_windows_options", (1, 5))),
            valid_percent=float(params.get("valid_percent", 0.3)),
            base_window=int(params.get("base_window", 17)),
        )

    # ------------------------------------------------------------ job bodies

    def _job_finetune(self, run_id: str, params: dict, report) -> None:
        started = time.monotonic()
        ts, _truth, _meta = self.store.get_dataset(params["dataset_id"])
        enc_cfg = preset_config(params.get("preset", "small"), seed=int(params.get("seed", 0)))
        cfg = self._finetune_config(params, patch_len=enc_cfg.patch_len)
        model = init_model(enc_cfg)
        best, record = finetune(model, ts, cfg, progress=report)
        wall_time = record.wall_time_seconds
        record.wall_time_seconds = 0.0  # reproducible manifests; see timing.json
        self.store.materialize(
            run_id,
            {
                "checkpoint.bin": save_checkpoint_bytes(best),
                "losses.csv": formats.encode_loss_curves(record),
            },
            record=record.to_dict(),
            timing={"wall_time_seconds": wall_time, "total_seconds": time.monotonic() - started},
        )

    def _resolve_model(self, params: dict) -> EncoderModel:
        if params.get("model_run"):
            return load_checkpoint_bytes(self.store.read_artifact(params["model_run"], "checkpoint.bin"))
        return init_model(
            preset_config(params.get("preset", "small"), seed=int(params.get("model_seed", 0)))
        )

    def _job_embed(self, run_id: str, params: dict, report) -> None:
        started = time.monotonic()
        model = self._resolve_model(params)
        checkpoint = save_checkpoint_bytes(model)
        ts, _truth, _meta = self.store.get_dataset(params["dataset_id"])
        bucket = int(params.get("bucket", 1))
        if bucket > 1:
            ts = downsample_mean(ts, bucket)
        spec = WindowSpec(int(params.get("window", 54)), int(params.get("stride", 2)))
        slices = slice_windows(ts, spec)
        rows = []
        for lo in range(0, len(slices), EMBED_CHUNK):
            chunk = slices[lo : lo + EMBED_CHUNK]
            windows = np.stack([window_values(ts, s) for s in chunk])
            rows.append(embed_windows(model, windows))
            report((lo + len(chunk)) / len(slices))
        matrix = np.concatenate(rows, axis=0)
        self.store.materialize(
            run_id,
            {
                "checkpoint.bin": checkpoint,
                "embeddings.bin": formats.encode_matrix(formats.EMBEDDINGS_MAGIC, matrix),
                "provenance.json": formats.encode_provenance(
                    slices, params["dataset_id"], sha256_bytes(checkpoint)[:16],
                    spec.length, spec.stride, bucket
                ),
            },
            record={"n_windows": len(slices), "dim": int(matrix.shape[1])},
            timing={"total_seconds": time.monotonic() - started},
        )

    def _job_project(self, run_id: str, params: dict, report) -> None:
        started = time.monotonic()
        embed_run = params["embed_run"]
        E = self.embeddings(embed_run)
        report(0.1)
        method = params.get("method", "pca")
        proj_params = self._projection_params(params)
        projection = project_pipeline(E, method, proj_params)
        report(0.95)
        sidecar = {
            "embed_run": embed_run,
            "method": method,
            "params": proj_params.to_dict(),
            "source_checksum": self.store.read_manifest(embed_run)["artifacts"]["embeddings.bin"],
            "n_points": int(projection.coords.shape[0]),
        }
        self.store.materialize(
            run_id,
            {
                "projection.bin": formats.encode_matrix(formats.PROJECTION_MAGIC, projection.coords),
                "projection.json": formats.jsonsafe_bytes(sidecar),
            },
            record={"kl_final": projection.kl_history[-1] if projection.kl_history else None},
            timing={"total_seconds": time.monotonic() - started},
        )

    def _job_sweep(self, run_id: str, params: dict, report) -> None:
        started = time.monotonic()
        ts, _truth, _meta = self.store.get_dataset(params["dataset_id"])
        grid = self._sweep_grid(params)
        enc_cfg = preset_config(params.get("preset", "small"))
        result = run_sweep(
            ts,
            grid,
            enc_cfg,
            master_seed=int(params.get("master_seed", 0)),
            batch_size=int(params.get("batch_size", 32)),
            learning_rate=float(params.get("learning_rate", 1e-3)),
            progress=report,
        )
        report_doc = build_report(result, grid, int(params.get("master_seed", 0)))
        records = [r.to_dict() if r is not None else None for r in result.records]
        self.store.materialize(
            run_id,
            {
                "sweep_table.csv": formats.encode_sweep_table(SWEEP_COLUMNS, result.rows),
                "records.json": formats.jsonsafe_bytes(records),
                "report.json": formats.jsonsafe_bytes(report_doc),
            },
            record={
                "n_cells": len(result.rows),
                "n_failed": result.n_failed,
                "best_improvement": report_doc.get("best_improvement"),
            },
            timing={"total_seconds": time.monotonic() - started},
        )

    # -------------------------------------------------------------- readers

    def manifest(self, run_id: str) -> dict:
        return self.store.read_manifest(run_id)

    def embeddings_payload(self, run_id: str) -> bytes:
        return self.store.read_artifact(run_id, "embeddings.bin")

    def embeddings(self, run_id: str) -> EmbeddingMatrix:
        rows = formats.decode_matrix(formats.EMBEDDINGS_MAGIC, self.embeddings_payload(run_id))
        doc = formats.decode_provenance(self.store.read_artifact(run_id, "provenance.json"))
        return EmbeddingMatrix(rows, doc["slices"], model_ref=doc["model_ref"])

    def find_projection(self, embed_run: str, method: str, params: dict) -> str:
        """Newest done projection run matching the source and parameters."""
        wanted = self._projection_params(params).to_dict()
        matches = []
        for manifest in self.store.list_runs("project"):
            if manifest["status"] != "done" or manifest["params"].get("embed_run") != embed_run:
                continue
            if manifest["params"].get("method", "pca") != method:
                continue
            have = self._projection_params(manifest["params"]).to_dict()
            if method == "pca" or have == wanted:
                matches.append(manifest["run_id"])
        if not matches:
            raise NotFound(
                f"no stored {method} projection for run {embed_run!r}; submit a project job first"
            )
        return matches[-1]

    def projection_payload(self, projection_run: str) -> tuple[bytes, dict]:
        payload = self.store.read_artifact(projection_run, "projection.bin")
        sidecar = json.loads(self.store.read_artifact(projection_run, "projection.json"))
        return payload, sidecar

    def get_selection(self, run_id: str, point_indices: list[int]) -> list[dict]:
        """Provenance and raw (bucketed) samples behind selected embedding
        rows: the payload for linked brushing."""
        manifest = self.store.read_manifest(run_id)
        if manifest["kind"] != "embed":
            raise ValidationError(f"run {run_id!r} is not an embedding run")
        doc = formats.decode_provenance(self.store.read_artifact(run_id, "provenance.json"))
        slices = doc["slices"]
        ts, _truth, _meta = self.store.get_dataset(doc["dataset_id"])
        if doc["bucket"] > 1:
            ts = downsample_mean(ts, doc["bucket"])
        out = []
        for index in point_indices:
            if not 0 <= index < len(slices):
                raise IndexOutOfRange(f"point {index} outside [0, {len(slices)})")
            sl = slices[index]
            out.append(
                {
                    "index": int(index),
                    "start": sl.start,
                    "length": sl.length,
                    "source": sl.source,
                    "values": window_values(ts, sl).tolist(),
                }
            )
        return out

    def sweep_table(self, run_id: str) -> bytes:
        return self.store.read_artifact(run_id, "sweep_table.csv")

    def sweep_report(self, run_id: str) -> dict:
        return json.loads(self.store.read_artifact(run_id, "report.json"))


def build_report(result: SweepResult, grid: SweepGrid, master_seed: int) -> dict:
    """Analysis document over the successful sweep rows."""
    table = result.table()
    n = table.shape[0]
    doc: dict = {
        "columns": list(SWEEP_COLUMNS),
        "grid": dataclasses.asdict(grid),
        "master_seed": master_seed,
        "n_cells": len(result.rows),
        "n_failed": result.n_failed,
        "rows": [formats.jsonsafe(r.values()) for r in result.rows],
        "failed_cells": [
            {"index": i, "error": r.error} for i, r in enumerate(result.rows) if r.failed
        ],
        "best_improvement": float(table[:, SWEEP_COLUMNS.index("improvement")].max()) if n else None,
        "correlation": None,
        "f_scores": None,
        "permutation_importance": None,
        "epoch_budget": None,
        "parallel_coordinates": None,
    }
    best_epochs = [int(r.best_epoch) for r in result.rows if not r.failed]
    if best_epochs:
        doc["epoch_budget"] = select_epoch_budget(best_epochs)
    if n >= 3:
        doc["correlation"] = formats.jsonsafe(correlation_matrix(table))
        scores = f_scores(table)
        doc["f_scores"] = {
            "features": list(scores.features),
            "f_values": formats.jsonsafe(scores.f_values),
            "percents": formats.jsonsafe(scores.percents),
            "infinite": formats.jsonsafe(scores.infinite),
        }
        names, cols = export_parallel_coordinates(table, min(10, n))
        doc["parallel_coordinates"] = {"columns": list(names), "rows": formats.jsonsafe(cols)}
    if n >= 6:
        names, raw, pct = permutation_importance(table)
        doc["permutation_importance"] = {
            "features": list(names),
            "raw": formats.jsonsafe(raw),
            "percents": formats.jsonsafe(pct),
        }
    return doc
