"""HTTP job service for the browser studio.

JSON wire format; images travel as base64-encoded binary pixmaps (P5/P6),
converted to and from canvas pixels on the client side.  Jobs are queued
FIFO into a bounded worker pool; job state lives in memory (optionally
written through to a run directory) and is reproducible from manifests.

Endpoints:
  POST /api/jobs                submit a generation job
  GET  /api/jobs/{id}           job snapshot (progress or results)
  GET  /api/jobs/{id}/samples/{k}   one result image
  GET  /api/models              model registry
"""
from __future__ import annotations

import base64
import binascii
import contextlib
import json
import os
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import tensorio
from .denoise import AnalyticGmmDenoiser
from .lowpass import KERNELS
from .metrics import lowfreq_error, pairwise_diversity
from .neural import load_checkpoint
from .sampler import IlvrConfig, sample_ilvr
from .schedule import make_linear_schedule


class JobRequest(BaseModel):
    model: str
    reference: str  # base64 P5/P6 pixmap
    factor: int
    kernel: str = "box"
    stop_step: int = 0
    count: int = 1
    seed: Optional[int] = None


@dataclass
class Job:
    id: str
    request: JobRequest
    reference: np.ndarray
    seed: int
    state: str = "queued"  # queued -> running -> done | failed
    progress: dict = field(default_factory=dict)
    results: Optional[dict] = None
    error: Optional[str] = None

    def snapshot(self) -> dict:
        doc = {
            "id": self.id,
            "state": self.state,
            "progress": self.progress,
            "config": {
                "model": self.request.model,
                "factor": self.request.factor,
                "kernel": self.request.kernel,
                "stop_step": self.request.stop_step,
                "count": self.request.count,
                "seed": self.seed,
            },
        }
        if self.state == "done":
            doc["results"] = self.results
        if self.state == "failed":
            doc["error"] = self.error
        return doc


@dataclass
class ModelEntry:
    id: str
    kind: str  # analytic | neural
    path: Path
    model: object

    @property
    def data_shape(self) -> tuple[int, ...]:
        return tuple(self.model.data_shape)


def _scan_models(model_dir: Path) -> dict[str, ModelEntry]:
    entries: dict[str, ModelEntry] = {}
    for path in sorted(model_dir.glob("*.json")):
        mix = tensorio.load_mixture(path)
        entries[path.stem] = ModelEntry(path.stem, "analytic", path, AnalyticGmmDenoiser(mix))
    for path in sorted(model_dir.glob("*.ckpt")):
        entries[path.stem] = ModelEntry(path.stem, "neural", path, load_checkpoint(path))
    return entries


class JobStore:
    """Synchronized registry with monotonic ids."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, Job] = {}
        self._counter = 0

    def create(self, request: JobRequest, reference: np.ndarray, seed: int) -> Job:
        with self._lock:
            self._counter += 1
            job = Job(id=f"job-{self._counter:06d}", request=request, reference=reference, seed=seed)
            self._jobs[job.id] = job
            return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)


def create_app(
    model_dir,
    run_dir=None,
    T: int = 200,
    sigma_mode: str = "posterior",
    workers: int = 0,
    studio_dir=None,
) -> FastAPI:
    model_dir = Path(model_dir)
    if not model_dir.is_dir():
        raise ValueError(f"model directory not found: {model_dir}")
    models = _scan_models(model_dir)
    sched = make_linear_schedule(T, sigma_mode=sigma_mode)
    store = JobStore()
    tasks: queue.Queue = queue.Queue()
    n_workers = workers or min(4, os.cpu_count() or 1)
    run_path = Path(run_dir) if run_dir else None

    def execute(job: Job) -> None:
        job.state = "running"
        entry = models[job.request.model]
        cfg = IlvrConfig(
            reference=job.reference,
            factor=job.request.factor,
            kernel=job.request.kernel,
            stop_step=job.request.stop_step,
            seed=job.seed,
            count=job.request.count,
        )

        def on_step(sample_idx: int, t: int) -> None:
            # atomic snapshot: replace the dict, never mutate in place
            job.progress = {"sample": sample_idx, "t": t, "count": cfg.count}

        samples, _ = sample_ilvr(entry.model, sched, cfg, on_step=on_step)
        images = [base64.b64encode(tensorio.encode_pixmap(x)).decode("ascii") for x in samples]
        errors = [
            lowfreq_error(x, job.reference, cfg.factor, cfg.kernel) for x in samples
        ]
        job.results = {
            "samples": images,
            "lowfreq_error": errors,
            "diversity": pairwise_diversity(samples) if len(samples) >= 2 else 0.0,
        }
        job.progress = {"sample": cfg.count - 1, "t": 0, "count": cfg.count}
        job.state = "done"
        if run_path is not None:
            _write_through(job)

    def _write_through(job: Job) -> None:
        jd = run_path / job.id
        jd.mkdir(parents=True, exist_ok=True)
        for k, b64 in enumerate(job.results["samples"]):
            (jd / f"sample_{k:03d}.pgm").write_bytes(base64.b64decode(b64))
        (jd / "manifest.json").write_text(json.dumps(job.snapshot(), indent=1))

    def worker_loop() -> None:
        while True:
            job = tasks.get()
            if job is None:
                return
            try:
                execute(job)
            except Exception as exc:  # job isolation: failures land in the job record
                job.error = str(exc)
                job.state = "failed"

    threads: list[threading.Thread] = []

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        for _ in range(n_workers):
            th = threading.Thread(target=worker_loop, daemon=True)
            th.start()
            threads.append(th)
        yield
        for _ in threads:
            tasks.put(None)
        for th in threads:
            th.join(timeout=5)
        threads.clear()

    app = FastAPI(title="ilvrlab studio service", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/models")
    def list_models():
        return [
            {
                "id": e.id,
                "kind": e.kind,
                "shape": list(e.data_shape),
                "T": sched.T,
                "max_factor": min(e.data_shape[-2:]) if len(e.data_shape) == 3 else 1,
            }
            for e in models.values()
        ]

    @app.post("/api/jobs")
    def submit_job(req: JobRequest):
        entry = models.get(req.model)
        if entry is None:
            raise HTTPException(404, f"unknown model {req.model!r}")
        if req.factor < 1:
            raise HTTPException(400, "factor must be >= 1")
        if req.kernel not in KERNELS:
            raise HTTPException(400, f"kernel must be one of {KERNELS}")
        if not 0 <= req.stop_step < sched.T:
            raise HTTPException(400, f"stop_step must lie in [0, {sched.T})")
        if req.count < 1:
            raise HTTPException(400, "count must be >= 1")
        try:
            reference = tensorio.decode_pixmap(base64.b64decode(req.reference, validate=True))
        except (binascii.Error, tensorio.TensorIOError) as exc:
            raise HTTPException(400, f"bad reference image: {exc}") from exc
        if reference.shape != entry.data_shape:
            raise HTTPException(
                400,
                f"reference shape {list(reference.shape)} does not match model "
                f"shape {list(entry.data_shape)}",
            )
        if req.kernel == "box" and req.factor > 1 and (
            reference.shape[1] % req.factor or reference.shape[2] % req.factor
        ):
            raise HTTPException(400, "box kernel needs the factor to divide H and W")
        seed = req.seed if req.seed is not None else int(time.time_ns() % 2**63)
        job = store.create(req, reference, seed)
        tasks.put(job)
        return {"id": job.id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        return job.snapshot()

    @app.get("/api/jobs/{job_id}/samples/{k}")
    def get_sample(job_id: str, k: int):
        job = store.get(job_id)
        if job is None:
            raise HTTPException(404, f"unknown job {job_id!r}")
        if job.state != "done" or not 0 <= k < len(job.results["samples"]):
            raise HTTPException(404, f"sample {k} not available for {job_id}")
        return {"image": job.results["samples"][k]}

    if studio_dir and Path(studio_dir).is_dir():
        app.mount("/", StaticFiles(directory=studio_dir, html=True), name="studio")

    return app
