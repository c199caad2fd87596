"""Flat-directory submission store: one JSON file per submission.

All mutations go through a single lock and land on disk via tmp-file +
atomic rename, so a crash can lose at most the in-flight write, never
corrupt a record.  The directory is the source of truth: a fresh store
pointed at the same path sees everything the previous process persisted.
"""
from __future__ import annotations

import json
import os
import re
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path

QUEUED = "queued"
TRAINING = "training"
EVALUATING = "evaluating"
SCORED = "scored"
FAILED = "failed"

_ORDER = {QUEUED: 0, TRAINING: 1, EVALUATING: 2, SCORED: 3}
_ID_RE = re.compile(r"^[0-9a-f]{32}$")


class StoreError(Exception):
    pass


def new_submission_id() -> str:
    return uuid.uuid4().hex


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


class SubmissionStore:
    """Persistent queue + archive of submissions."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.dir = self.root / "submissions"
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        for path in sorted(self.dir.glob("*.json")):
            with open(path) as f:
                rec = json.load(f)
            self._records[rec["id"]] = rec
        seqs = [r["seq"] for r in self._records.values()]
        self._next_seq = max(seqs, default=0) + 1

    # -- internal ----------------------------------------------------------

    def _write(self, rec: dict) -> None:
        """Atomic persist; caller holds the lock."""
        path = self.dir / f"{rec['id']}.json"
        tmp = self.dir / f".{rec['id']}.tmp"
        with open(tmp, "w") as f:
            json.dump(rec, f, allow_nan=False)
        os.replace(tmp, path)

    # -- writes ------------------------------------------------------------

    def create(self, display_name: str, config: dict, checkpoint: dict | None,
               parameter_count: int, idempotency_key: str | None,
               fingerprint: str | None) -> dict:
        with self._lock:
            rec = {
                "id": new_submission_id(),
                "seq": self._next_seq,
                "display_name": display_name,
                "config": config,
                "checkpoint": checkpoint,
                "parameter_count": parameter_count,
                "idempotency_key": idempotency_key,
                "fingerprint": fingerprint,
                "status": QUEUED,
                "score": None,
                "error": None,
                "submitted_at": utc_now_iso(),
                "scored_at": None,
            }
            self._next_seq += 1
            self._records[rec["id"]] = rec
            self._write(rec)
            return dict(rec)

    def update(self, sub_id: str, **fields) -> dict:
        """Forward-only status moves; anything else is a store bug."""
        with self._lock:
            rec = self._records.get(sub_id)
            if rec is None:
                raise StoreError(f"no submission {sub_id}")
            status = fields.get("status")
            if status is not None and status != rec["status"]:
                if status == FAILED:
                    if rec["status"] in (SCORED, FAILED):
                        raise StoreError(f"cannot fail a {rec['status']} submission")
                elif _ORDER.get(status, -1) <= _ORDER.get(rec["status"], 99):
                    raise StoreError(
                        f"illegal transition {rec['status']} -> {status}")
            rec.update(fields)
            self._write(rec)
            return dict(rec)

    def claim_next_queued(self) -> dict | None:
        """Pop the oldest queued submission, persisting its in-flight status
        before the lock is released -- two workers can never claim the same
        record."""
        with self._lock:
            queued = [r for r in self._records.values() if r["status"] == QUEUED]
            if not queued:
                return None
            rec = min(queued, key=lambda r: r["seq"])
            rec["status"] = EVALUATING if rec["checkpoint"] is not None else TRAINING
            self._write(rec)
            return dict(rec)

    def requeue(self, sub_id: str) -> None:
        """Put an in-flight record back in the queue (crash/stop recovery);
        bypasses the forward-only rule on purpose."""
        with self._lock:
            rec = self._records.get(sub_id)
            if rec is None or rec["status"] not in (TRAINING, EVALUATING):
                return
            rec["status"] = QUEUED
            self._write(rec)

    def recover(self) -> list[str]:
        """Re-queue whatever was mid-flight when the last process died."""
        requeued = []
        with self._lock:
            for rec in self._records.values():
                if rec["status"] in (TRAINING, EVALUATING):
                    rec["status"] = QUEUED
                    self._write(rec)
                    requeued.append(rec["id"])
        return requeued

    # -- reads -------------------------------------------------------------

    def get(self, sub_id: str) -> dict | None:
        if not _ID_RE.match(sub_id or ""):
            return None
        with self._lock:
            rec = self._records.get(sub_id)
            return dict(rec) if rec is not None else None

    def find_by_key(self, idempotency_key: str) -> dict | None:
        with self._lock:
            for rec in self._records.values():
                if rec["idempotency_key"] == idempotency_key:
                    return dict(rec)
            return None

    def list_records(self) -> list[dict]:
        with self._lock:
            return [dict(r) for r in sorted(self._records.values(),
                                            key=lambda r: r["seq"])]

    def scored_records(self) -> list[dict]:
        return [r for r in self.list_records() if r["status"] == SCORED]
