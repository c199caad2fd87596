// Typed client for the arena service.  All simulation state lives behind
// these five endpoints; the UI holds no other backend.

import { ndjsonObjects } from "./ndjson";
import { FrameEvent, LeaderboardEntry, Meta, SubmissionView } from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly path: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface SubmitPayload {
  display_name?: string;
  config: Record<string, unknown>;
  checkpoint?: Record<string, unknown>;
  idempotency_key?: string;
}

export interface SubmitReply {
  id: string;
  status: string;
  created: boolean;
}

type FetchFn = typeof fetch;

async function rejectWith(res: Response): Promise<never> {
  let path = "";
  let message = `HTTP ${res.status}`;
  try {
    const doc = await res.json();
    if (doc && doc.error) {
      path = String(doc.error.path ?? "");
      message = String(doc.error.message ?? message);
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(res.status, path, message);
}

export class ArenaClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchFn = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async submit(payload: SubmitPayload): Promise<SubmitReply> {
    const res = await this.fetchFn(this.url("/submissions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!res.ok) await rejectWith(res);
    const doc = await res.json();
    return { id: doc.id, status: doc.status, created: res.status === 201 };
  }

  async getSubmission(id: string): Promise<SubmissionView> {
    const res = await this.fetchFn(this.url(`/submissions/${encodeURIComponent(id)}`));
    if (!res.ok) await rejectWith(res);
    return (await res.json()) as SubmissionView;
  }

  async leaderboard(limit = 50): Promise<LeaderboardEntry[]> {
    const res = await this.fetchFn(this.url(`/leaderboard?limit=${limit}`));
    if (!res.ok) await rejectWith(res);
    const doc = await res.json();
    return doc.entries as LeaderboardEntry[];
  }

  async meta(): Promise<Meta> {
    const res = await this.fetchFn(this.url("/meta"));
    if (!res.ok) await rejectWith(res);
    return (await res.json()) as Meta;
  }

  // Persistent NDJSON stream of live training frames.  Ends when the server
  // closes the session; throws ApiError(404) when no session is live yet.
  async *frames(id: string, signal?: AbortSignal): AsyncGenerator<FrameEvent> {
    const res = await this.fetchFn(
      this.url(`/sessions/${encodeURIComponent(id)}/frames`),
      { signal },
    );
    if (!res.ok) await rejectWith(res);
    if (!res.body) throw new ApiError(0, "", "response has no body stream");
    yield* ndjsonObjects<FrameEvent>(res.body);
  }
}
