"""FIFO simulation job queue with cooperative cancellation.

Jobs run on a fixed pool of runner threads (the concurrent-job limit); each
running simulation additionally parallelizes over spins inside the engine.
State transitions follow queued -> running -> {done, failed, cancelled} and
queued -> cancelled; progress only ever increases.
"""

from __future__ import annotations

import queue
import threading
import time
import uuid
from dataclasses import dataclass, field

from mrseq import engine, model
from mrseq.phantom import Phantom
from mrseq.pipeline import run_pipeline
from mrseq.service.store import Store

__all__ = ["Job", "JobManager", "QueueFullError"]

_TERMINAL = ("done", "failed", "cancelled")


class QueueFullError(Exception):
    pass


@dataclass
class Job:
    id: str
    owner: str
    doc: model.SequenceDoc
    phantom: Phantom
    phantom_name: str
    config: engine.SimConfig
    state: str = "queued"
    progress: float = 0.0
    submitted_at: float = field(default_factory=time.time)
    started_at: float | None = None
    finished_at: float | None = None
    result_item: str | None = None
    error: str | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "state": self.state,
            "progress": self.progress,
            "submitted_at": self.submitted_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "result_item": self.result_item,
            "error": self.error,
        }


class JobManager:
    def __init__(self, store: Store, max_jobs: int = 2, queue_cap: int = 16):
        self._store = store
        self._queue: queue.Queue[Job] = queue.Queue(maxsize=max(1, queue_cap))
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._runners = [
            threading.Thread(target=self._runner, name=f"sim-runner-{i}", daemon=True)
            for i in range(max(1, max_jobs))
        ]
        for t in self._runners:
            t.start()

    def submit(self, owner: str, doc: model.SequenceDoc, phantom: Phantom,
               phantom_name: str, config: engine.SimConfig) -> Job:
        job = Job(uuid.uuid4().hex, owner, doc, phantom, phantom_name, config)
        with self._lock:
            self._jobs[job.id] = job
        try:
            self._queue.put_nowait(job)
        except queue.Full:
            with self._lock:
                del self._jobs[job.id]
            raise QueueFullError("job queue is full") from None
        self._store.record_job(job.snapshot())
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def status(self, job: Job) -> dict:
        """Lock-consistent snapshot for the status endpoint."""
        with self._lock:
            return job.snapshot()

    def cancel(self, job: Job) -> None:
        """Request cancellation; idempotent, also fine on finished jobs."""
        with self._lock:
            if job.state == "queued":
                self._finish(job, "cancelled")
                return
        job.cancel_event.set()

    def _set_progress(self, job: Job, fraction: float) -> None:
        with self._lock:
            job.progress = max(job.progress, min(1.0, fraction))

    def _finish(self, job: Job, state: str, **fields) -> None:
        # progress before state: a concurrent poller must never observe
        # "done" with progress still below 1
        if state == "done":
            job.progress = 1.0
        job.finished_at = time.time()
        for key, value in fields.items():
            setattr(job, key, value)
        job.state = state
        self._store.record_job(job.snapshot())

    def _runner(self) -> None:
        while True:
            job = self._queue.get()
            with self._lock:
                if job.state != "queued":  # cancelled while waiting
                    continue
                job.state = "running"
                job.started_at = time.time()
            self._store.record_job(job.snapshot())
            try:
                data = run_pipeline(
                    job.doc, job.phantom, job.config, job.phantom_name,
                    progress=lambda f, j=job: self._set_progress(j, f),
                    cancel=job.cancel_event,
                )
            except engine.SimCancelled:
                with self._lock:
                    self._finish(job, "cancelled")
                continue
            except Exception as e:  # surfaced through the status endpoint
                with self._lock:
                    self._finish(job, "failed", error=f"{type(e).__name__}: {e}")
                continue
            item = self._store.create_item(
                job.owner, "result", f"simulation {job.id[:8]}", data)
            with self._lock:
                self._finish(job, "done", result_item=item["id"])
