"""In-process job queue: heavy computation never runs on a request path.

Each job owns one run directory.  A worker thread executes the job body,
which writes artifacts through Store.materialize (atomic); any package error
marks the run failed instead of crashing the service.
"""

from __future__ import annotations

import threading
import traceback
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import NotFound, TsLatentError
from .store import Store


@dataclass
class Job:
    run_id: str
    kind: str
    params: dict
    status: str = "pending"
    progress: float = 0.0
    error: str | None = None

    def snapshot(self) -> dict:
        return {
            "run_id": self.run_id,
            "kind": self.kind,
            "params": self.params,
            "status": self.status,
            "progress": self.progress,
            "error": self.error,
        }


class JobManager:
    def __init__(self, store: Store, workers: int = 2):
        self.store = store
        self._executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="job")
        self._jobs: dict[str, Job] = {}
        self._futures: dict[str, Future] = {}
        self._lock = threading.Lock()

    def submit(self, run_id: str, kind: str, params: dict, body) -> Job:
        """``body(progress_callback)`` runs on a worker; it must materialize
        the run's artifacts itself and may raise package errors."""
        job = Job(run_id, kind, params)
        with self._lock:
            if run_id in self._jobs:
                raise TsLatentError(f"job for run {run_id!r} already exists")
            self._jobs[run_id] = job
        future = self._executor.submit(self._run, job, body)
        with self._lock:
            self._futures[run_id] = future
        return job

    def _run(self, job: Job, body) -> None:
        def report(fraction: float) -> None:
            # progress is monotone even if a body reports out of order
            job.progress = max(job.progress, min(float(fraction), 1.0))

        job.status = "running"
        self.store.update_manifest(job.run_id, status="running")
        try:
            body(report)
        except TsLatentError as exc:
            job.status = "failed"
            job.error = f"{type(exc).__name__}: {exc}"
            self.store.mark_failed(job.run_id, job.error)
            return
        except Exception as exc:  # defensive: bugs must not crash the pool
            job.status = "failed"
            job.error = f"internal error: {exc}\n{traceback.format_exc()}"
            self.store.mark_failed(job.run_id, job.error)
            return
        job.progress = 1.0
        job.status = "done"

    def poll(self, run_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(run_id)
        if job is not None:
            return job
        # not submitted in this process: reconstruct a view from the store
        manifest = self.store.read_manifest(run_id)
        return Job(
            run_id=run_id,
            kind=manifest["kind"],
            params=manifest["params"],
            status=manifest["status"],
            progress=1.0 if manifest["status"] == "done" else 0.0,
            error=manifest["error"],
        )

    def wait(self, run_id: str, timeout: float | None = None) -> Job:
        with self._lock:
            future = self._futures.get(run_id)
        if future is None:
            raise NotFound(f"no pending job for run {run_id!r}")
        future.result(timeout=timeout)
        return self.poll(run_id)

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)
