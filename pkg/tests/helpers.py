"""Shared builders for synthetic world states used across test modules."""
from __future__ import annotations

import random

from gridway.sim.backend import core_class

from oracles import bodies_intersect

AMBIENT = 2


def make_core(backend: str, n: int, seed: int = 0):
    core = core_class(backend)(n)
    core.seed(seed)
    return core


def place(core, i: int, x: float, y: float, speed_max: float = 80.0,
          factor: float = 1.0, lane: int | None = None, kind: int = AMBIENT,
          period: int = 4) -> None:
    if lane is None:
        lane = min(6, max(0, int(round(x / 20.0))))
    core.set_vehicle(i, kind, x, y, speed_max, factor, lane, period)


def random_small_world(rng: random.Random, backend: str,
                       allow_straddle: bool = True):
    """2-8 vehicles at random non-overlapping poses with random speeds.

    Returns (core, straddling) where straddling flags vehicles placed
    mid-lane-change (their x is not a lane multiple).
    """
    for _ in range(50):
        n = rng.randint(2, 8)
        placed: list[tuple[float, float]] = []
        ok = True
        for _ in range(n):
            for _ in range(200):
                if allow_straddle and rng.random() < 0.25:
                    x = rng.uniform(0.0, 120.0)
                else:
                    x = 20.0 * rng.randrange(7)
                y = rng.uniform(0.0, 660.0)
                if all(not bodies_intersect(x, y, px, py) for px, py in placed):
                    placed.append((x, y))
                    break
            else:
                ok = False
                break
        if not ok:
            continue
        core = make_core(backend, n, seed=rng.getrandbits(60))
        straddling = []
        for i, (x, y) in enumerate(placed):
            place(core, i, x, y,
                  speed_max=rng.uniform(40.0, 80.0),
                  factor=rng.uniform(0.3, 1.0))
            if x != 20.0 * round(x / 20.0):
                straddling.append(i)
        return core, straddling
    raise RuntimeError("could not place a random world")
