import { describe, expect, it } from "vitest";
import { ApiError, ArenaClient } from "../src/api";
import { FrameBuffer } from "../src/frames";
import { isTerminal, pollToCompletion, StreamState, watchSession } from "../src/session";
import { FrameEvent, SubmissionStatus, SubmissionView } from "../src/types";

const noSleep = async () => {};

function view(status: SubmissionStatus, extra: Partial<SubmissionView> = {}): SubmissionView {
  return {
    id: "s1",
    display_name: "t",
    status,
    score: status === "scored" ? 71.5 : null,
    error: status === "failed" ? "TrainingError: diverged" : null,
    config: {},
    has_checkpoint: false,
    parameter_count: 100,
    submitted_at: "2026-01-01T00:00:00Z",
    scored_at: null,
    ...extra,
  };
}

function frame(t: number): FrameEvent {
  return { t, vehicles: [] };
}

// Minimal stand-in for ArenaClient: scripted status sequence plus scripted
// stream attempts.
function stubClient(
  statuses: SubmissionStatus[],
  streams: (() => AsyncGenerator<FrameEvent>)[] = [],
): ArenaClient {
  let statusAt = 0;
  let streamAt = 0;
  return {
    async getSubmission() {
      const status = statuses[Math.min(statusAt, statuses.length - 1)];
      statusAt++;
      return view(status);
    },
    frames() {
      const make = streams[Math.min(streamAt, streams.length - 1)];
      streamAt++;
      return make();
    },
  } as unknown as ArenaClient;
}

describe("pollToCompletion", () => {
  it("reports every transition through to scored", async () => {
    const client = stubClient(["queued", "training", "training", "evaluating", "scored"]);
    const seen: SubmissionStatus[] = [];
    const final = await pollToCompletion(client, "s1", {
      sleep: noSleep,
      onUpdate: (v) => seen.push(v.status),
    });
    expect(final.status).toBe("scored");
    expect(final.score).toBe(71.5);
    expect(seen).toEqual(["queued", "training", "training", "evaluating", "scored"]);
  });

  it("stops on failure and carries the reason verbatim", async () => {
    const client = stubClient(["queued", "failed"]);
    const final = await pollToCompletion(client, "s1", { sleep: noSleep });
    expect(final.status).toBe("failed");
    expect(final.error).toBe("TrainingError: diverged");
  });

  it("knows which statuses are terminal", () => {
    expect(isTerminal("scored")).toBe(true);
    expect(isTerminal("failed")).toBe(true);
    expect(isTerminal("training")).toBe(false);
  });
});

describe("watchSession", () => {
  it("retries a not-yet-open session, then streams until the end", async () => {
    async function* notOpen(): AsyncGenerator<FrameEvent> {
      throw new ApiError(404, "id", "no live session for this submission");
    }
    async function* live(): AsyncGenerator<FrameEvent> {
      yield frame(1);
      yield frame(2);
    }
    // status per poll: queued (404 attempt), training (live), scored (stop)
    const client = stubClient(["queued", "training", "scored"], [notOpen, live]);
    const buf = new FrameBuffer();
    const states: StreamState[] = [];
    await watchSession(client, "s1", buf, {
      sleep: noSleep,
      onState: (s) => states.push(s),
    });
    expect(buf.received).toBe(2);
    expect(states).toEqual(["connecting", "connecting", "live", "ended"]);
  });

  it("announces a drop and reconnects while training continues", async () => {
    async function* first(): AsyncGenerator<FrameEvent> {
      yield frame(1);
      throw new Error("connection reset");
    }
    async function* second(): AsyncGenerator<FrameEvent> {
      yield frame(2);
      yield frame(3);
    }
    const client = stubClient(["training", "training", "scored"], [first, second]);
    const buf = new FrameBuffer();
    const states: StreamState[] = [];
    await watchSession(client, "s1", buf, {
      sleep: noSleep,
      onState: (s) => states.push(s),
    });
    expect(states).toEqual(["connecting", "live", "lost", "live", "ended"]);
    expect(buf.received).toBe(3);
  });

  it("returns immediately for an already-finished submission", async () => {
    const client = stubClient(["scored"]);
    const states: StreamState[] = [];
    await watchSession(client, "s1", new FrameBuffer(), {
      sleep: noSleep,
      onState: (s) => states.push(s),
    });
    expect(states).toEqual(["ended"]);
  });
});
