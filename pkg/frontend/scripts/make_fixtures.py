#!/usr/bin/env python3
"""Capture real workbench HTTP payloads as frontend test fixtures.

Runs the full pipeline (generate S2 -> zero-shot embed -> fine-tune ->
fine-tuned embed -> PCA projections) against an in-process service and saves
the literal response bytes, so the frontend tests decode exactly what the
wire carries.  Rerun after changing any payload format:

    python3 scripts/make_fixtures.py
"""

import json
import shutil
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from tslatent.workbench import Workbench
from tslatent.workbench.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

DATASET_CONFIG = {
    "total_length": 2000,
    "noise_std": 0.05,
    "seed": 7,
    "anomaly_positions": (500, 1500),
}
WINDOW, STRIDE = 16, 4


def wait(client, run_id, timeout=300):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        job = client.get(f"/jobs/{run_id}").json()
        if job["status"] == "done":
            return
        if job["status"] == "failed":
            sys.exit(f"job {run_id} failed: {job['error']}")
        time.sleep(0.05)
    sys.exit(f"job {run_id} timed out")


def main():
    FIXTURES.mkdir(exist_ok=True)
    tmp = tempfile.mkdtemp(prefix="tslatent-fixtures-")
    wb = Workbench(tmp, workers=2)
    client = TestClient(create_app(wb))

    dataset_id = client.post(
        "/datasets", json={"kind": "s2", "config": DATASET_CONFIG}
    ).json()["id"]
    datasets = client.get("/datasets").json()
    (FIXTURES / "s2_dataset.json").write_text(
        json.dumps(next(d for d in datasets if d["id"] == dataset_id), indent=2)
    )
    values = client.get(f"/datasets/{dataset_id}/values").json()
    (FIXTURES / "s2_values.json").write_text(json.dumps(values))

    def embed(params):
        run_id = client.post("/jobs", json={"kind": "embed", "params": params}).json()["run_id"]
        wait(client, run_id)
        return run_id

    def project(embed_run):
        run_id = client.post(
            "/jobs", json={"kind": "project", "params": {"embed_run": embed_run, "method": "pca"}}
        ).json()["run_id"]
        wait(client, run_id)

    zero_run = embed(
        {"dataset_id": dataset_id, "preset": "tiny", "model_seed": 3,
         "window": WINDOW, "stride": STRIDE}
    )
    train_run = client.post(
        "/jobs",
        json={
            "kind": "finetune",
            "params": {
                "dataset_id": dataset_id, "preset": "tiny", "epochs": 2,
                "window_lengths": [WINDOW], "training_percent": 0.3,
                "valid_percent": 0.3, "seed": 3,
            },
        },
    ).json()["run_id"]
    wait(client, train_run)
    tuned_run = embed(
        {"dataset_id": dataset_id, "model_run": train_run, "window": WINDOW, "stride": STRIDE}
    )

    for name, run_id in (("zero", zero_run), ("tuned", tuned_run)):
        project(run_id)
        (FIXTURES / f"{name}_manifest.json").write_bytes(
            client.get(f"/runs/{run_id}/manifest").content
        )
        (FIXTURES / f"{name}_embeddings.bin").write_bytes(
            client.get(f"/runs/{run_id}/embeddings").content
        )
        response = client.get(f"/runs/{run_id}/projection?method=pca")
        (FIXTURES / f"{name}_projection.bin").write_bytes(response.content)
        (FIXTURES / f"{name}_projection_meta.json").write_text(
            response.headers["X-Projection-Meta"]
        )

    selection = client.post(
        f"/runs/{zero_run}/selection", json={"point_indices": [0, 100, 250]}
    ).json()
    (FIXTURES / "selection_sample.json").write_text(json.dumps(selection))

    wb.close()
    shutil.rmtree(tmp)
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
