"""Step-throughput comparison of the simulation backends, plus the cost of
leaving a frame sink attached to training when nobody is watching.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--frames N] [--train-steps N]
"""
import argparse
import time

import numpy as np

from gridway.dqn import AgentConfig, ProgressSink, train
from gridway.service import FrameHub, FrameSink
from gridway.sim.backend import available_backends
from gridway.sim.world import WorldConfig, new_world

import threading


def bench_step(backend: str, frames: int) -> float:
    world = new_world(WorldConfig(), seed=7, backend=backend)
    red_sum = np.zeros(1)
    world.step_block(1000, red_sum)  # warm up
    t0 = time.perf_counter()
    world.step_block(frames, red_sum)
    return frames / (time.perf_counter() - t0)


def bench_train(steps: int, sink: ProgressSink | None) -> float:
    cfg = AgentConfig.from_json({
        "lanesSide": 1, "patchesAhead": 8, "patchesBehind": 2,
        "layers": [{"num_neurons": 16, "activation": "relu"}],
        "experience_size": 2000, "start_learning_threshold": 100,
        "learning_steps_burning": 100,
        "learning_steps_total": max(200, steps // 4),
    })
    t0 = time.perf_counter()
    train(cfg, WorldConfig(), steps, seed=0, progress=sink)
    return steps / (time.perf_counter() - t0)


def bench_train_watched(steps: int) -> tuple[float, int]:
    """Training rate with one consumer draining the 20 fps frame stream."""
    hub = FrameHub()
    seen = [0]

    def drain():
        hub.add_consumer()
        last = 0
        try:
            while True:
                item = hub.next_frame(last, timeout=0.2)
                if item is None:
                    if hub.closed:
                        return
                    continue
                last = item[0]
                seen[0] += 1
        finally:
            hub.remove_consumer()

    watcher = threading.Thread(target=drain)
    watcher.start()
    try:
        rate = bench_train(steps, FrameSink(hub, threading.Event(), None))
    finally:
        hub.close()
        watcher.join()
    return rate, seen[0]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=200_000,
                    help="frames per stepping measurement")
    ap.add_argument("--train-steps", type=int, default=40_000,
                    help="frames per training measurement")
    args = ap.parse_args()

    print(f"{'backend':<10} {'frames/s':>12}")
    rates = {}
    for backend in available_backends():
        # the python core is ~2 orders slower; keep its sample proportionate
        frames = args.frames if backend == "compiled" else args.frames // 20
        rates[backend] = bench_step(backend, frames)
        print(f"{backend:<10} {rates[backend]:>12,.0f}")
    if "compiled" in rates and "python" in rates:
        print(f"speedup: {rates['compiled'] / rates['python']:.1f}x")

    bench_train(4000, None)  # warm up allocators before timing
    bare = bench_train(args.train_steps, None)
    hub = FrameHub()
    idle = bench_train(args.train_steps,
                       FrameSink(hub, threading.Event(), None))
    hub.close()
    watched, frames_seen = bench_train_watched(args.train_steps)
    print(f"\ntraining frames/s:")
    print(f"  block path, no sink   {bare:>10,.0f}")
    print(f"  sink, no viewers      {idle:>10,.0f}  "
          f"({100 * (bare - idle) / bare:+.1f}% vs block path)")
    print(f"  sink, live viewer     {watched:>10,.0f}  "
          f"({100 * (idle - watched) / idle:+.1f}% vs idle sink, "
          f"{frames_seen} frames streamed)")


if __name__ == "__main__":
    main()
