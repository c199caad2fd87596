// Rendering is decoupled from message arrival: the stream writer drops each
// frame into a single latest slot, and the paint loop pulls whatever is
// newest on its own clock.  A slow tab never backs up the socket, and a
// burst of frames costs one repaint.

import { FrameEvent } from "./types";

export class FrameBuffer {
  private latest: FrameEvent | null = null;
  private lastT = -1;
  received = 0;
  dropped = 0; // stale or out-of-order arrivals

  // Accept only frames that move time forward; the stream promises monotone t.
  offer(frame: FrameEvent): boolean {
    if (frame.t <= this.lastT) {
      this.dropped++;
      return false;
    }
    this.lastT = frame.t;
    this.latest = frame;
    this.received++;
    return true;
  }

  // The newest unconsumed frame, or null if nothing fresh since last take.
  take(): FrameEvent | null {
    const f = this.latest;
    this.latest = null;
    return f;
  }
}

export class FpsMeter {
  private stamps: number[] = [];

  constructor(private readonly now: () => number = () => performance.now()) {}

  tick(): void {
    const t = this.now();
    this.stamps.push(t);
    const cutoff = t - 2000;
    while (this.stamps.length && this.stamps[0] < cutoff) this.stamps.shift();
  }

  // Events per second over the trailing window (default one second).
  fps(windowMs = 1000): number {
    const t = this.now();
    const n = this.stamps.filter((s) => s >= t - windowMs).length;
    return (n * 1000) / windowMs;
  }
}

// One paint-loop step: draw the newest frame if there is one.  Returns the
// frame it drew so callers can update side panels, or null on an idle tick.
export function renderTick(
  buffer: FrameBuffer,
  draw: (frame: FrameEvent) => void,
  meter?: FpsMeter,
): FrameEvent | null {
  const frame = buffer.take();
  if (frame === null) return null;
  draw(frame);
  meter?.tick();
  return frame;
}
