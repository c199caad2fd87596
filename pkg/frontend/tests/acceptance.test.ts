// End-to-end acceptance against a real service process:
//
//  1. a config edited through the form model, submitted, and scored comes
//     back byte-identical from GET /submissions/{id};
//  2. the live view renders >= 15 fps from the 20 fps training stream.
//
// Needs the Python package installed (`gridway` on PATH).  The server-side
// half of "without blocking training throughput" is covered by
// benchmarks/bench_backends.py, which measures the training loop with and
// without a live viewer attached.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ArenaClient } from "../src/api";
import { canonicalDoc } from "../src/config";
import { EditorModel } from "../src/editor";
import { FpsMeter, FrameBuffer, renderTick } from "../src/frames";
import { pollToCompletion } from "../src/session";
import { FrameEvent, SubmissionStatus } from "../src/types";

const PORT = 18731;
const BASE = `http://127.0.0.1:${PORT}`;

let child: ChildProcess | null = null;
let dir = "";
let serverLog = "";
const client = new ArenaClient(BASE);

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

async function waitForServer(deadlineMs: number): Promise<void> {
  const limit = Date.now() + deadlineMs;
  for (;;) {
    try {
      const meta = await client.meta();
      expect(meta.service).toBe("gridway-arena");
      return;
    } catch {
      if (Date.now() > limit) {
        throw new Error(`service did not come up on ${BASE}\n${serverLog}`);
      }
      await sleep(250);
    }
  }
}

beforeAll(async () => {
  dir = mkdtempSync(join(tmpdir(), "arena-ui-"));
  const cfgPath = join(dir, "service.json");
  writeFileSync(
    cfgPath,
    JSON.stringify({
      port: PORT,
      service: {
        data_dir: join(dir, "data"),
        runs: 3,
        steps_per_run: 400,
        base_seed: 99,
        worker_count: 1,
      },
    }),
  );
  child = spawn("gridway", ["serve", "--config", cfgPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  child.stdout?.on("data", (d) => (serverLog += d));
  child.stderr?.on("data", (d) => (serverLog += d));
  await waitForServer(60_000);
});

afterAll(async () => {
  if (child) {
    child.kill("SIGTERM");
    await new Promise((r) => {
      child!.on("exit", r);
      setTimeout(r, 5000);
    });
  }
  if (dir) rmSync(dir, { recursive: true, force: true });
});

describe("config round-trip through the service", () => {
  it("returns the submitted config byte-identical after scoring", async () => {
    // Edit a draft the way the form does, field by field.
    const model = new EditorModel();
    model.setField("lanesSide", "2");
    model.setField("patchesAhead", "10");
    model.setField("gamma", "0.85");
    model.setField("experience_size", "500");
    model.setField("start_learning_threshold", "80");
    model.setField("learning_steps_total", "150");
    model.setField("learning_steps_burning", "40");
    model.removeLayer(1);
    model.setLayer(0, { neurons: "16" });
    const result = model.validate();
    expect(result.ok).toBe(true);
    if (!result.ok) return;

    const sent = canonicalDoc(result.config);
    const sentBytes = JSON.stringify(sent);
    const reply = await client.submit({ display_name: "round-trip", config: sent });
    expect(reply.created).toBe(true);

    const seen: SubmissionStatus[] = [];
    const final = await pollToCompletion(client, reply.id, {
      intervalMs: 300,
      onUpdate: (v) => {
        if (seen[seen.length - 1] !== v.status) seen.push(v.status);
      },
    });
    expect(final.status).toBe("scored");
    expect(final.score).toBeGreaterThan(60);
    expect(final.score).toBeLessThanOrEqual(80);
    // transitions arrive in lifecycle order
    const order = ["queued", "training", "evaluating", "scored"];
    expect([...seen].sort((a, b) => order.indexOf(a) - order.indexOf(b))).toEqual(seen);

    // THE round-trip check: the view's config serializes to the exact bytes
    // the form submitted.
    const view = await client.getSubmission(reply.id);
    expect(JSON.stringify(view.config)).toBe(sentBytes);

    // ... and the scored entry is on the board at a real rank.
    const rows = await client.leaderboard(100);
    const mine = rows.find((r) => r.id === reply.id);
    expect(mine).toBeDefined();
    expect(mine!.score).toBe(final.score);
    expect(mine!.rank).toBeGreaterThanOrEqual(1);
  }, 90_000);
});

describe("live view on the training stream", () => {
  it("renders at 15+ fps without dropping behind", async () => {
    // Enough steps that training outlives the measurement window comfortably.
    const model = new EditorModel();
    model.setField("learning_steps_total", "20000");
    model.setField("learning_steps_burning", "1000");
    const result = model.validate();
    expect(result.ok).toBe(true);
    if (!result.ok) return;

    const reply = await client.submit({
      display_name: "live-view",
      config: canonicalDoc(result.config),
    });

    // The frames endpoint 404s until the worker opens the session.
    const abort = new AbortController();
    let stream: AsyncGenerator<FrameEvent> | null = null;
    const limit = Date.now() + 30_000;
    while (stream === null) {
      try {
        const candidate = client.frames(reply.id, abort.signal);
        const first = await candidate.next();
        if (!first.done) {
          stream = candidate;
          break;
        }
      } catch {
        // not open yet
      }
      if (Date.now() > limit) throw new Error(`no live session\n${serverLog}`);
      await sleep(150);
    }

    // Pump arrivals into the latest-frame buffer exactly like the page does.
    const buffer = new FrameBuffer();
    let pumpDone = false;
    const pump = (async () => {
      try {
        for await (const frame of stream!) {
          expect(frame.vehicles.length).toBe(20);
          expect(frame.grid!.length).toBe(7);
          expect(frame.grid![0].length).toBe(70);
          expect(frame.training!.step).toBeGreaterThanOrEqual(0);
          buffer.offer(frame);
        }
      } catch {
        // aborted below
      } finally {
        pumpDone = true;
      }
    })();

    // Paint loop at ~60 Hz against wall time.
    const meter = new FpsMeter();
    let draws = 0;
    let lastT = -1;
    let lastStep = -1;
    const draw = (f: FrameEvent) => {
      expect(f.t).toBeGreaterThan(lastT); // rendered time is monotone
      lastT = f.t;
      expect(f.training!.step).toBeGreaterThanOrEqual(lastStep);
      lastStep = f.training!.step;
      draws++;
    };

    // Wait for the first paint, then measure a 1.5 s window.
    const startLimit = Date.now() + 10_000;
    while (draws === 0 && Date.now() < startLimit && !pumpDone) {
      renderTick(buffer, draw, meter);
      await sleep(8);
    }
    expect(draws).toBeGreaterThan(0);
    draws = 0;
    const t0 = performance.now();
    let elapsed = 0;
    for (;;) {
      renderTick(buffer, draw, meter);
      elapsed = performance.now() - t0;
      if (elapsed >= 1500 || pumpDone) break;
      await sleep(8);
    }
    abort.abort();
    await pump;

    const fps = (draws * 1000) / elapsed;
    expect(fps).toBeGreaterThanOrEqual(15);
    expect(buffer.received).toBeGreaterThanOrEqual(draws); // never invents frames
  }, 90_000);
});
