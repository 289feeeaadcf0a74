"""Durable run/dataset store.

Datasets are content-addressed by their generation config (or uploaded
bytes).  Runs get an id derived from (kind, params, code version) plus a
per-store submission counter, so identical submissions yield distinct run
ids while reruns of a whole pipeline in a fresh store reproduce the same id
sequence.  Every artifact is checksummed in the run manifest and verified on
read; artifacts are materialized with write-to-temp-then-rename so a reader
never sees a half-written run.

Wall-clock metadata lives in a separate ``timing.json`` that is deliberately
not checksummed: it is the one artifact that cannot be reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import shutil
import threading
from pathlib import Path

from .. import __version__
from ..core import TimeSeries, load_series_csv, save_series_csv
from ..errors import ChecksumMismatch, NotFound, ValidationError
from ..synth import GroundTruth, load_annotations, save_annotations

MANIFEST = "manifest.json"
TIMING = "timing.json"
UNCHECKSUMMED = {MANIFEST, TIMING}

JOB_KINDS = ("finetune", "sweep", "embed", "project")
STATUSES = ("pending", "running", "done", "failed")


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "runs").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    # ------------------------------------------------------------------ ids

    def next_run_id(self, kind: str, params: dict) -> tuple[str, str]:
        """Reserve a run id: hash of (kind, params, code version, counter).

        The counter makes identical submissions distinct; the returned
        config hash (counter-free) is what audits reproducibility.
        """
        config_hash = sha256_bytes(
            canonical_json({"kind": kind, "params": params, "code": __version__}).encode()
        )[:16]
        with self._lock:
            counter_path = self.root / "counter"
            counter = int(counter_path.read_text()) if counter_path.exists() else 0
            counter_path.write_text(str(counter + 1))
        run_id = f"{kind}-{sha256_bytes(f'{config_hash}:{counter}'.encode())[:12]}"
        return run_id, config_hash

    # ------------------------------------------------------------- datasets

    def put_dataset(
        self,
        ts: TimeSeries,
        truth: GroundTruth | None = None,
        kind: str = "uploaded",
        config: dict | None = None,
    ) -> str:
        payload = canonical_json(
            {"kind": kind, "config": config, "values": sha256_bytes(ts.values.tobytes()),
             "name": ts.name}
        )
        dataset_id = f"ds-{sha256_bytes(payload.encode())[:12]}"
        target = self.root / "datasets" / dataset_id
        if target.exists():
            return dataset_id
        tmp = self.root / "datasets" / f".tmp-{dataset_id}"
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir(parents=True)
        save_series_csv(ts, tmp / "series.csv")
        if truth is not None:
            save_annotations(truth, tmp / "annotations.json")
        meta = {
            "id": dataset_id,
            "name": ts.name,
            "kind": kind,
            "config": config,
            "length": ts.length,
            "channels": list(ts.channel_names),
            "sample_period": ts.sample_period,
            "annotations": truth.to_dict() if truth is not None else None,
        }
        _atomic_write(tmp / "meta.json", json.dumps(meta, indent=2).encode())
        os.replace(tmp, target)
        return dataset_id

    def get_dataset(self, dataset_id: str) -> tuple[TimeSeries, GroundTruth | None, dict]:
        target = self.root / "datasets" / dataset_id
        if not target.exists():
            raise NotFound(f"dataset {dataset_id!r}")
        meta = json.loads((target / "meta.json").read_text())
        ts = load_series_csv(target / "series.csv", name=meta["name"])
        truth = None
        if (target / "annotations.json").exists():
            truth = load_annotations(target / "annotations.json")
        return ts, truth, meta

    def list_datasets(self) -> list[dict]:
        out = []
        for path in sorted((self.root / "datasets").iterdir()):
            if path.name.startswith(".") or not (path / "meta.json").exists():
                continue
            out.append(json.loads((path / "meta.json").read_text()))
        return out

    # ----------------------------------------------------------------- runs

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def create_run(self, run_id: str, kind: str, params: dict, config_hash: str) -> None:
        if kind not in JOB_KINDS:
            raise ValidationError(f"unknown job kind {kind!r}; choose from {JOB_KINDS}")
        target = self.run_dir(run_id)
        if target.exists():
            raise ValidationError(f"run {run_id!r} already exists")
        target.mkdir(parents=True)
        manifest = {
            "run_id": run_id,
            "kind": kind,
            "params": params,
            "config_hash": config_hash,
            "status": "pending",
            "error": None,
            "record": None,
            "artifacts": {},
        }
        _atomic_write(target / MANIFEST, json.dumps(manifest, indent=2).encode())

    def read_manifest(self, run_id: str) -> dict:
        path = self.run_dir(run_id) / MANIFEST
        if not path.exists():
            raise NotFound(f"run {run_id!r}")
        return json.loads(path.read_text())

    def update_manifest(self, run_id: str, **fields) -> dict:
        manifest = self.read_manifest(run_id)
        old_status = manifest["status"]
        manifest.update(fields)
        new_status = manifest["status"]
        if STATUSES.index(new_status) < STATUSES.index(old_status):
            raise ValidationError(f"status cannot move {old_status} -> {new_status}")
        _atomic_write(self.run_dir(run_id) / MANIFEST, json.dumps(manifest, indent=2).encode())
        return manifest

    def materialize(self, run_id: str, artifacts: dict[str, bytes], record: dict | None = None,
                    timing: dict | None = None) -> dict:
        """Atomically attach artifacts to a run and mark it done.

        Files land under temp names first; the manifest (status, checksums)
        is the last write, so a run is never visible half-finished.
        """
        target = self.run_dir(run_id)
        if not target.exists():
            raise NotFound(f"run {run_id!r}")
        checksums = {}
        for name, data in artifacts.items():
            if name in UNCHECKSUMMED:
                raise ValidationError(f"{name} is reserved")
            _atomic_write(target / name, data)
            checksums[name] = sha256_bytes(data)
        if timing is not None:
            _atomic_write(target / TIMING, json.dumps(timing, indent=2).encode())
        return self.update_manifest(
            run_id, status="done", artifacts=checksums, record=record
        )

    def mark_failed(self, run_id: str, error: str) -> None:
        self.update_manifest(run_id, status="failed", error=error)

    def read_artifact(self, run_id: str, name: str) -> bytes:
        manifest = self.read_manifest(run_id)
        if name not in manifest["artifacts"]:
            raise NotFound(f"run {run_id!r} has no artifact {name!r}")
        path = self.run_dir(run_id) / name
        if not path.exists():
            raise NotFound(f"artifact file {name!r} missing for run {run_id!r}")
        data = path.read_bytes()
        if sha256_bytes(data) != manifest["artifacts"][name]:
            raise ChecksumMismatch(f"artifact {name!r} of run {run_id!r} failed verification")
        return data

    def list_runs(self, kind: str | None = None) -> list[dict]:
        out = []
        runs = self.root / "runs"
        for path in sorted(runs.iterdir()):
            if path.name.startswith(".") or not (path / MANIFEST).exists():
                continue
            manifest = json.loads((path / MANIFEST).read_text())
            if kind is None or manifest["kind"] == kind:
                out.append(manifest)
        return out

    def recover_interrupted(self) -> list[str]:
        """Mark runs left pending/running by a dead process as failed."""
        recovered = []
        for manifest in self.list_runs():
            if manifest["status"] in ("pending", "running"):
                self.mark_failed(manifest["run_id"], "interrupted: process exited mid-job")
                recovered.append(manifest["run_id"])
        return recovered
