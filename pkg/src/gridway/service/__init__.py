"""Competition service: submission store, scoring workers, HTTP API."""
from .app import (ArenaService, FrameHub, FrameSink, ServiceConfig,
                  SubmissionError, create_app, run_server, spec_parameter_count)
from .store import (EVALUATING, FAILED, QUEUED, SCORED, TRAINING,
                    SubmissionStore)

__all__ = [
    "ArenaService", "FrameHub", "FrameSink", "ServiceConfig",
    "SubmissionError", "create_app", "run_server", "spec_parameter_count",
    "SubmissionStore", "QUEUED", "TRAINING", "EVALUATING", "SCORED", "FAILED",
]
