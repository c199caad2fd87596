// Submission lifecycle: POST the draft, poll status transitions until the
// service lands on scored/failed, and keep the live stream attached while
// training runs (reconnecting with a visible status when it drops).

import { ArenaClient } from "./api";
import { FrameBuffer } from "./frames";
import { SubmissionStatus, SubmissionView } from "./types";

const ACTIVE: SubmissionStatus[] = ["queued", "training", "evaluating"];

export function isTerminal(status: SubmissionStatus): boolean {
  return !ACTIVE.includes(status);
}

export type SleepFn = (ms: number) => Promise<void>;

const realSleep: SleepFn = (ms) => new Promise((r) => setTimeout(r, ms));

export interface PollOptions {
  intervalMs?: number;
  sleep?: SleepFn;
  onUpdate?: (view: SubmissionView) => void;
}

// Poll a submission until it reaches a terminal status.  Every fetched view
// is reported through onUpdate, so the caller sees queued -> training ->
// evaluating -> scored in order (repeats included; the caller de-duplicates
// if it cares).
export async function pollToCompletion(
  client: ArenaClient,
  id: string,
  opts: PollOptions = {},
): Promise<SubmissionView> {
  const interval = opts.intervalMs ?? 500;
  const sleep = opts.sleep ?? realSleep;
  for (;;) {
    const view = await client.getSubmission(id);
    opts.onUpdate?.(view);
    if (isTerminal(view.status)) return view;
    await sleep(interval);
  }
}

export type StreamState = "connecting" | "live" | "lost" | "ended";

export interface WatchOptions {
  retryMs?: number;
  sleep?: SleepFn;
  onState?: (state: StreamState) => void;
  signal?: AbortSignal;
}

// Feed live frames into the buffer for as long as the submission is active.
// The frames endpoint 404s until training opens the session and again after
// it closes, so both 404 and a dropped stream mean "check status, retry".
export async function watchSession(
  client: ArenaClient,
  id: string,
  buffer: FrameBuffer,
  opts: WatchOptions = {},
): Promise<void> {
  const retry = opts.retryMs ?? 1000;
  const sleep = opts.sleep ?? realSleep;
  let wasLive = false;
  for (;;) {
    if (opts.signal?.aborted) return;
    const view = await client.getSubmission(id);
    if (isTerminal(view.status)) {
      opts.onState?.("ended");
      return;
    }
    opts.onState?.(wasLive ? "lost" : "connecting");
    try {
      let live = false;
      for await (const frame of client.frames(id, opts.signal)) {
        if (!live) {
          live = true;
          wasLive = true;
          opts.onState?.("live");
        }
        buffer.offer(frame);
      }
    } catch {
      // 404 before the session opens, or a dropped connection: retry below.
    }
    await sleep(retry);
  }
}
