"""Competition backend: accept declarative submissions, score them with
server-side training + the official evaluation protocol, keep a leaderboard,
and stream live training frames as newline-delimited JSON.

Submissions are configs (plus optional pre-trained weights), never code, so
scoring is a pure function of (payload, published seed): any two servers
running the same protocol agree on every score.
"""
from __future__ import annotations

import hashlib
import json
import math
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from ..dqn import (AgentConfig, ConfigError, DqnPolicy, agent_config_json_schema,
                   train)
from ..harness import evaluate
from ..neural import QNetwork, network_from_dict
from ..rng import derive_seed
from ..sim.world import VEHICLE_COUNT, World, WorldConfig
from . import store as store_mod
from .store import SubmissionStore

FRAME_RATE = 20.0  # wall-clock frames/s pushed to stream consumers
_TRAIN_SEED_STREAM = 1001  # train seed = derive_seed(base_seed, this)
_MAX_NAME_LEN = 120


@dataclass
class ServiceConfig:
    data_dir: str = "arena-data"
    runs: int = 100
    steps_per_run: int = 10_000
    base_seed: int = 1729
    worker_count: int = 2
    max_parameter_count: int = 1_000_000
    max_training_steps: int = 1_000_000
    max_body_bytes: int = 64 << 20
    eval_workers: int = 1
    world: WorldConfig = field(default_factory=WorldConfig)

    def to_json(self) -> dict:
        doc = {k: v for k, v in self.__dict__.items() if k != "world"}
        doc["world"] = self.world.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ServiceConfig":
        doc = dict(doc)
        world = doc.pop("world", None)
        cfg = cls(**doc)
        if world is not None:
            cfg.world = WorldConfig.from_json(world)
        return cfg


class SubmissionError(Exception):
    """Rejection with an HTTP status and a dotted field path."""

    def __init__(self, status: int, path: str, message: str):
        super().__init__(message)
        self.status = status
        self.path = path
        self.message = message


class _Cancelled(Exception):
    pass


# ---------------------------------------------------------------------------
# Live frame fan-out

class FrameHub:
    """Single-slot latest-frame buffer: the producer overwrites, readers poll.

    Overwrite-on-publish is the drop-oldest policy -- a slow reader simply
    misses frames, and the producer never blocks on anyone.
    """

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._frame: dict | None = None
        self._seq = 0
        self._consumers = 0
        self.closed = False

    @property
    def consumers(self) -> int:
        return self._consumers

    def publish(self, frame: dict) -> None:
        with self._cond:
            self._frame = frame
            self._seq += 1
            self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self.closed = True
            self._cond.notify_all()

    def add_consumer(self) -> None:
        with self._cond:
            self._consumers += 1

    def remove_consumer(self) -> None:
        with self._cond:
            self._consumers -= 1

    def next_frame(self, after_seq: int, timeout: float) -> tuple[int, dict] | None:
        """Newest frame with seq > after_seq, or None on timeout/close."""
        with self._cond:
            if self._seq <= after_seq and not self.closed:
                self._cond.wait(timeout)
            if self._seq > after_seq and self._frame is not None:
                return self._seq, self._frame
            return None


class FrameSink:
    """Training progress tap feeding a FrameHub.

    Cheap when nobody is watching: without consumers it only checks the
    stop flag.  With consumers it builds at most FRAME_RATE frames per
    wall-clock second no matter how fast the simulation runs.
    """

    def __init__(self, hub: FrameHub, stop: threading.Event,
                 deadline: float | None = None):
        self.hub = hub
        self.stop = stop
        self.deadline = deadline
        self._next_emit = 0.0

    def emit(self, world: World, outcome, learner, smoothed) -> None:
        if self.stop.is_set():
            raise _Cancelled
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise TimeoutError("training wall-clock budget exhausted")
        if self.hub.consumers == 0:
            return
        now = time.monotonic()
        if now < self._next_emit:
            return
        self._next_emit = now + 1.0 / FRAME_RATE
        frame = world.frame_dict(outcome, include_grid=True)
        frame["training"] = {
            "step": learner.step,
            "epsilon": learner.epsilon(),
            "smoothed_reward": smoothed,
            "loss": learner.last_loss,
        }
        self.hub.publish(frame)


# ---------------------------------------------------------------------------
# Payload validation

def _ensure_finite(node, path: str) -> None:
    if isinstance(node, float) and not math.isfinite(node):
        raise SubmissionError(400, path, "non-finite numbers are not allowed")
    if isinstance(node, dict):
        for k, v in node.items():
            _ensure_finite(v, f"{path}.{k}" if path else str(k))
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _ensure_finite(v, f"{path}[{i}]")


def _fingerprint(display_name: str, config: dict, checkpoint: dict | None) -> str:
    blob = json.dumps([display_name, config, checkpoint], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def spec_parameter_count(cfg: AgentConfig) -> int:
    """Weight + bias count from the layer shapes alone (no allocation, so
    absurd requested sizes are rejected before they cost memory)."""
    dims = [n for n, _ in cfg.layer_spec()]
    return sum((dims[i - 1] + 1) * dims[i] for i in range(1, len(dims)))


# ---------------------------------------------------------------------------
# Service

class ArenaService:
    """Store + worker pool + frame hubs behind the HTTP app."""

    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self.store = SubmissionStore(cfg.data_dir)
        self.store.recover()
        self._hubs: dict[str, FrameHub] = {}
        self._hubs_lock = threading.Lock()
        self._stop = threading.Event()
        self._wake = threading.Condition()
        self._workers: list[threading.Thread] = []
        self.max_train_seconds: float | None = None

    # -- lifecycle ---------------------------------------------------------

    def start_workers(self) -> None:
        self._stop.clear()
        for i in range(self.cfg.worker_count):
            t = threading.Thread(target=self._worker_loop,
                                 name=f"arena-worker-{i}", daemon=True)
            t.start()
            self._workers.append(t)

    def stop(self) -> None:
        self._stop.set()
        with self._wake:
            self._wake.notify_all()
        for t in self._workers:
            t.join(timeout=30.0)
        self._workers = []
        with self._hubs_lock:
            for hub in self._hubs.values():
                hub.close()
            self._hubs.clear()

    # -- submission intake -------------------------------------------------

    def submit(self, payload) -> tuple[dict, bool]:
        """Validate and enqueue; returns (record, created)."""
        if not isinstance(payload, dict):
            raise SubmissionError(400, "", "body must be a JSON object")
        known = {"display_name", "config", "checkpoint", "idempotency_key"}
        for key in payload:
            if key not in known:
                raise SubmissionError(400, str(key), "unknown field")
        _ensure_finite(payload, "")

        display_name = payload.get("display_name", "anonymous")
        if not isinstance(display_name, str) or not display_name:
            raise SubmissionError(400, "display_name",
                                  "must be a non-empty string")
        if len(display_name) > _MAX_NAME_LEN:
            raise SubmissionError(400, "display_name",
                                  f"longer than {_MAX_NAME_LEN} characters")

        raw_config = payload.get("config")
        if raw_config is None:
            raise SubmissionError(400, "config", "missing required field")
        try:
            cfg = AgentConfig.from_json(raw_config)
        except ConfigError as e:
            raise SubmissionError(400, e.path, e.reason) from e

        params = spec_parameter_count(cfg)
        if params > self.cfg.max_parameter_count:
            raise SubmissionError(
                400, "limits.max_parameter_count",
                f"network has {params} parameters; the limit "
                f"max_parameter_count is {self.cfg.max_parameter_count}")
        if cfg.learning_steps_total > self.cfg.max_training_steps:
            raise SubmissionError(
                400, "limits.max_training_steps",
                f"learning_steps_total {cfg.learning_steps_total} exceeds the "
                f"limit max_training_steps {self.cfg.max_training_steps}")

        checkpoint = payload.get("checkpoint")
        if checkpoint is not None:
            net = self._load_checkpoint(checkpoint)
            if net.spec != cfg.layer_spec():
                raise SubmissionError(400, "checkpoint",
                                      "layer shapes do not match the config")

        key = payload.get("idempotency_key")
        if key is not None:
            if not isinstance(key, str) or not key or len(key) > _MAX_NAME_LEN:
                raise SubmissionError(400, "idempotency_key",
                                      "must be a short non-empty string")
            fp = _fingerprint(display_name, raw_config, checkpoint)
            existing = self.store.find_by_key(key)
            if existing is not None:
                if existing["fingerprint"] != fp:
                    raise SubmissionError(
                        409, "idempotency_key",
                        "key already used with a different payload")
                return existing, False
        else:
            fp = None

        rec = self.store.create(display_name, raw_config, checkpoint,
                                params, key, fp)
        with self._wake:
            self._wake.notify_all()
        return rec, True

    @staticmethod
    def _load_checkpoint(checkpoint) -> QNetwork:
        if not isinstance(checkpoint, dict):
            raise SubmissionError(400, "checkpoint", "must be a JSON object")
        try:
            return network_from_dict(checkpoint)
        except Exception as e:
            raise SubmissionError(400, "checkpoint",
                                  f"not a readable checkpoint: {e}") from e

    # -- leaderboard -------------------------------------------------------

    def leaderboard(self, limit: int) -> list[dict]:
        rows = sorted(self.store.scored_records(),
                      key=lambda r: (-r["score"], r["submitted_at"], r["seq"]))
        entries = []
        for row in rows[:limit]:
            better = sum(1 for r in rows if r["score"] > row["score"])
            entries.append({
                "rank": 1 + better,
                "id": row["id"],
                "display_name": row["display_name"],
                "score": row["score"],
                "parameter_count": row["parameter_count"],
                "submitted_at": row["submitted_at"],
            })
        return entries

    def meta(self) -> dict:
        return {
            "service": "gridway-arena",
            "official_protocol": {
                "runs": self.cfg.runs,
                "steps_per_run": self.cfg.steps_per_run,
                "base_seed": self.cfg.base_seed,
            },
            "limits": {
                "max_parameter_count": self.cfg.max_parameter_count,
                "max_training_steps": self.cfg.max_training_steps,
            },
            "world": self.cfg.world.to_json(),
            "vehicle_count": VEHICLE_COUNT,
            "frame_rate": FRAME_RATE,
            "config_schema": agent_config_json_schema(),
            "default_config": AgentConfig().to_json(),
        }

    # -- frame hubs --------------------------------------------------------

    def hub(self, sub_id: str) -> FrameHub | None:
        with self._hubs_lock:
            return self._hubs.get(sub_id)

    def _open_hub(self, sub_id: str) -> FrameHub:
        hub = FrameHub()
        with self._hubs_lock:
            self._hubs[sub_id] = hub
        return hub

    def _close_hub(self, sub_id: str) -> None:
        with self._hubs_lock:
            hub = self._hubs.pop(sub_id, None)
        if hub is not None:
            hub.close()

    # -- scoring workers ---------------------------------------------------

    def _worker_loop(self) -> None:
        while not self._stop.is_set():
            rec = self.store.claim_next_queued()
            if rec is None:
                with self._wake:
                    self._wake.wait(timeout=0.2)
                continue
            self._process(rec)

    def _process(self, rec: dict) -> None:
        sub_id = rec["id"]
        try:
            cfg = AgentConfig.from_json(rec["config"])
            if rec["checkpoint"] is not None:
                net = network_from_dict(rec["checkpoint"])
            else:
                net = self._train(sub_id, cfg)
                self.store.update(sub_id, status=store_mod.EVALUATING)
            score = self._score(cfg, net)
            self.store.update(sub_id, status=store_mod.SCORED, score=score,
                              scored_at=store_mod.utc_now_iso())
        except _Cancelled:
            self.store.requeue(sub_id)
        except Exception as e:  # noqa: BLE001 - failures become diagnostics
            self.store.update(sub_id, status=store_mod.FAILED,
                              error=f"{type(e).__name__}: {e}")

    def _train(self, sub_id: str, cfg: AgentConfig) -> QNetwork:
        frames = cfg.learning_steps_total * self.cfg.world.default_decision_period
        hub = self._open_hub(sub_id)
        deadline = (time.monotonic() + self.max_train_seconds
                    if self.max_train_seconds is not None else None)
        sink = FrameSink(hub, self._stop, deadline)
        try:
            report, net = train(cfg, self.cfg.world, frames,
                                derive_seed(self.cfg.base_seed, _TRAIN_SEED_STREAM),
                                progress=sink)
        finally:
            self._close_hub(sub_id)
        if report.diverged_at is not None:
            raise RuntimeError(f"training diverged at step {report.diverged_at}")
        return net

    def _score(self, cfg: AgentConfig, net: QNetwork) -> float:
        report = evaluate(DqnPolicy(cfg, net), self.cfg.world, self.cfg.runs,
                          self.cfg.steps_per_run, self.cfg.base_seed,
                          workers=self.cfg.eval_workers)
        return report.median_score


# ---------------------------------------------------------------------------
# HTTP layer

def public_view(rec: dict) -> dict:
    return {
        "id": rec["id"],
        "display_name": rec["display_name"],
        "status": rec["status"],
        "score": rec["score"],
        "error": rec["error"],
        "config": rec["config"],
        "has_checkpoint": rec["checkpoint"] is not None,
        "parameter_count": rec["parameter_count"],
        "submitted_at": rec["submitted_at"],
        "scored_at": rec["scored_at"],
    }


def create_app(service: ArenaService):
    """FastAPI app over an ArenaService.

    Bodies are parsed and validated by hand rather than by framework
    models: rejections need exact dotted field paths, and no input --
    however malformed -- may raise past the handler.
    """
    app = FastAPI(title="gridway arena", docs_url=None, redoc_url=None)
    app.state.service = service
    # The web client is served as static files from whatever origin is handy,
    # so the API answers cross-origin reads/submits.  There is no auth to leak.
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["GET", "POST"], allow_headers=["*"])

    def error_json(status: int, path: str, message: str) -> JSONResponse:
        return JSONResponse({"error": {"path": path, "message": message}},
                            status_code=status)

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception):
        return error_json(500, "", "internal error")

    @app.post("/submissions")
    async def post_submission(request: Request):
        body = await request.body()
        if len(body) > service.cfg.max_body_bytes:
            return error_json(413, "", "body too large")
        try:
            payload = json.loads(body)
        except Exception:
            return error_json(400, "", "body is not valid JSON")
        try:
            rec, created = service.submit(payload)
        except SubmissionError as e:
            return error_json(e.status, e.path, e.message)
        return JSONResponse({"id": rec["id"], "status": rec["status"]},
                            status_code=201 if created else 200)

    @app.get("/submissions/{sub_id}")
    async def get_submission(sub_id: str):
        rec = service.store.get(sub_id)
        if rec is None:
            return error_json(404, "id", "unknown submission")
        return JSONResponse(public_view(rec))

    @app.get("/leaderboard")
    async def get_leaderboard(request: Request):
        raw = request.query_params.get("limit", "50")
        try:
            limit = int(raw)
        except ValueError:
            return error_json(400, "limit", "must be an integer")
        if not 1 <= limit <= 1000:
            return error_json(400, "limit", "must be between 1 and 1000")
        return JSONResponse({"entries": service.leaderboard(limit)})

    @app.get("/meta")
    async def get_meta():
        return JSONResponse(service.meta())

    @app.get("/sessions/{sub_id}/frames")
    async def get_frames(sub_id: str):
        hub = service.hub(sub_id)
        if hub is None:
            return error_json(404, "id", "no live session for this submission")

        def stream():
            hub.add_consumer()
            last_seq = 0
            try:
                while True:
                    item = hub.next_frame(last_seq, timeout=0.5)
                    if item is None:
                        if hub.closed:
                            return
                        continue
                    last_seq, frame = item
                    yield json.dumps(frame) + "\n"
            finally:
                hub.remove_consumer()

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    return app


def run_server(cfg: ServiceConfig, host: str = "127.0.0.1",
               port: int = 8000) -> None:  # pragma: no cover - process entry
    import uvicorn

    service = ArenaService(cfg)
    service.start_workers()
    app = create_app(service)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        service.stop()
