"""Highway world: configuration, vehicles, and the stepping facade.

The world is a 7-lane, 140x700 px highway observed from the red ego car,
whose nose is pinned at y = 175.  20 vehicles share the road: the ego,
optional red clones driven by the competitor's network, and white
ambient cars cruising at a fixed speed with occasional random lane
changes.  A safety layer caps speeds behind a leader and blocks unsafe
lane changes, so collisions cannot happen.

All randomness flows through the world's own seeded generator, so a
(seed, action trace) pair replays to a bit-identical trajectory on
either backend.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import IO, Iterable

import numpy as np

from . import _core_py as _ref
from .backend import core_class, default_backend

LANES = _ref.LANES
LANE_W = _ref.LANE_W
LENGTH = _ref.LENGTH
CELL = _ref.CELL
ROWS = _ref.ROWS
BODY_W = _ref.BODY_W
BODY_L = _ref.BODY_L
EGO_Y = _ref.EGO_Y

VEHICLE_COUNT = 20

EGO_SPEED_MPH = 80.0
AMBIENT_SPEED_MPH = 65.0

_PLACEMENT_TRIES = 4000


class Action(IntEnum):
    NOOP = 0
    ACCELERATE = 1
    DECELERATE = 2
    LANE_LEFT = 3
    LANE_RIGHT = 4


class Kind(IntEnum):
    EGO = 0
    CLONE = 1
    AMBIENT = 2


class PlacementError(RuntimeError):
    """Raised when rejection sampling cannot seat all 20 vehicles."""


@dataclass
class WorldConfig:
    """Tunable world parameters; geometry is fixed at 7 lanes x 700 px."""

    lane_count: int = 7
    highway_length: float = 700.0
    lane_width: float = 20.0
    mph_to_px_per_frame: float = 0.2
    default_decision_period: int = 4
    speed_delta_per_action: float = 1.0
    ambient_lane_change_prob: float = 0.02
    ambient_respawn_speed_range: tuple[float, float] = (60.0, 70.0)
    agent_clone_count: int = 0

    def validate(self) -> None:
        if self.lane_count != LANES or self.highway_length != LENGTH or self.lane_width != LANE_W:
            raise ValueError("geometry is fixed at 7 lanes of 20 px over 700 px")
        if self.mph_to_px_per_frame <= 0:
            raise ValueError("mph_to_px_per_frame must be positive")
        if self.default_decision_period < 1:
            raise ValueError("default_decision_period must be >= 1")
        if self.speed_delta_per_action <= 0:
            raise ValueError("speed_delta_per_action must be positive")
        if not 0.0 <= self.ambient_lane_change_prob <= 1.0:
            raise ValueError("ambient_lane_change_prob must be in [0, 1]")
        lo, hi = self.ambient_respawn_speed_range
        if not 0.0 < lo <= hi:
            raise ValueError("ambient_respawn_speed_range must be 0 < lo <= hi")
        if not 0 <= self.agent_clone_count <= VEHICLE_COUNT - 1:
            raise ValueError("agent_clone_count must leave room for the ego")

    def to_json(self) -> dict:
        return {
            "lane_count": self.lane_count,
            "highway_length": self.highway_length,
            "lane_width": self.lane_width,
            "mph_to_px_per_frame": self.mph_to_px_per_frame,
            "default_decision_period": self.default_decision_period,
            "speed_delta_per_action": self.speed_delta_per_action,
            "ambient_lane_change_prob": self.ambient_lane_change_prob,
            "ambient_respawn_speed_range": list(self.ambient_respawn_speed_range),
            "agent_clone_count": self.agent_clone_count,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WorldConfig":
        kwargs = dict(doc)
        if "ambient_respawn_speed_range" in kwargs:
            kwargs["ambient_respawn_speed_range"] = tuple(kwargs["ambient_respawn_speed_range"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


@dataclass
class Vehicle:
    """Read-only snapshot of one vehicle."""

    id: int
    kind: Kind
    x: float
    y: float
    speed_max: float
    speed_factor: float
    target_lane: int
    decision_period: int
    speed: float

    @property
    def effective_speed(self) -> float:
        return self.speed_max * self.speed_factor


@dataclass
class StepOutcome:
    t: int
    ego_speed_mph: float
    red_speeds_mph: tuple[float, ...]
    respawned_ids: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "ego_speed_mph": self.ego_speed_mph,
            "red_speeds_mph": list(self.red_speeds_mph),
            "respawned_ids": list(self.respawned_ids),
        }


class World:
    """Facade over a backend core; create via new_world()."""

    def __init__(self, config: WorldConfig, core, ego_id: int = 0):
        self.config = config
        self.core = core
        self.ego_id = ego_id

    # ------------------------------------------------------------- stepping

    @property
    def frame(self) -> int:
        return self.core.frame

    @property
    def decision_period(self) -> int:
        return self.config.default_decision_period

    @property
    def is_decision_frame(self) -> bool:
        return self.core.frame % self.config.default_decision_period == 0

    def apply_action(self, vehicle_id: int, action: Action) -> None:
        self.core.apply_action(vehicle_id, int(action))

    def ambient_policy(self, vehicle_id: int) -> Action:
        return Action(self.core.ambient_policy(vehicle_id))

    def decide_ambient(self) -> None:
        self.core.decide_ambient()

    def step(self) -> StepOutcome:
        t = self.core.frame
        ego_speed, red_speeds, respawned = self.core.step()
        return StepOutcome(t, ego_speed, tuple(red_speeds), tuple(respawned))

    def step_block(self, frames: int, red_sum: np.ndarray, check: bool = False) -> int:
        """Equivalent to frames x (decide_ambient(); step()), accumulating
        each red car's per-frame effective speed into red_sum (id order).
        With check, returns the OR of every frame's validate() flags."""
        return self.core.step_block(frames, red_sum, 1 if check else 0)

    # -------------------------------------------------------------- queries

    def d_long(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("d_long requires two distinct vehicles")
        return self.core.d_long(i, j)

    def safety_speed(self, i: int) -> float:
        return self.core.safety_speed(i)

    def lane_change_permitted(self, i: int, direction: str) -> bool:
        if direction not in ("left", "right"):
            raise ValueError("direction must be 'left' or 'right'")
        return bool(self.core.lane_change_permitted(i, -1 if direction == "left" else 1))

    def vehicles(self) -> list[Vehicle]:
        c = self.core
        kind, x, y = c.kind, c.x, c.y
        smax, sfac = c.speed_max, c.speed_factor
        lane, period, speed = c.target_lane, c.period, c.speed
        return [
            Vehicle(i, Kind(kind[i]), x[i], y[i], smax[i], sfac[i], lane[i], period[i], speed[i])
            for i in range(c.n)
        ]

    def red_ids(self) -> list[int]:
        kind = self.core.kind
        return [i for i in range(self.core.n) if kind[i] != int(Kind.AMBIENT)]

    def validate(self) -> int:
        return self.core.validate()

    def copy(self) -> "World":
        twin = World(self.config, core_class(backend_of(self))(self.core.n), self.ego_id)
        twin.core.k_px = self.core.k_px
        twin.core.speed_delta = self.core.speed_delta
        twin.core.lane_change_prob = self.core.lane_change_prob
        twin.core.respawn_lo = self.core.respawn_lo
        twin.core.respawn_hi = self.core.respawn_hi
        twin.core.ego = self.core.ego
        twin.core.set_state(self.core.get_state())
        return twin

    # ------------------------------------------------------------ exporting

    def frame_dict(self, outcome: StepOutcome | None = None, include_grid: bool = False) -> dict:
        doc: dict = {
            "t": self.core.frame,
            "vehicles": [
                {
                    "id": v.id,
                    "kind": v.kind.name.lower(),
                    "x": v.x,
                    "y": v.y,
                    "speed": v.speed,
                    "target_lane": v.target_lane,
                }
                for v in self.vehicles()
            ],
        }
        if outcome is not None:
            doc["outcome"] = outcome.to_json()
        if include_grid:
            self.core.refresh_speeds()
            grid = np.zeros((LANES, ROWS))
            self.core.fill_grid(grid)
            doc["grid"] = grid.tolist()
        return doc


def backend_of(world: World) -> str:
    return world.core.BACKEND


def _zone_conflict(y_i: float, y_j: float) -> bool:
    """Would a vehicle at y_j (adjacent lane) sit in the blocking zone of a
    decider at y_i?  Mirrors the 6-ahead/4-abreast/1-behind cell rule."""
    nr = int(math.floor(y_i / CELL))
    r0, r1 = _ref.body_rows(y_j)
    return r1 >= nr - 6 and r0 <= nr + 4


def new_world(config: WorldConfig, seed: int, backend: str | None = None) -> World:
    """Seat 20 vehicles by rejection sampling so nobody starts inside
    anybody's safety range: reds (ego + clones) at 80 mph, ambient at 65."""
    config.validate()
    cls = core_class(backend)
    core = cls(VEHICLE_COUNT)
    core.k_px = config.mph_to_px_per_frame
    core.speed_delta = config.speed_delta_per_action
    core.lane_change_prob = config.ambient_lane_change_prob
    core.respawn_lo, core.respawn_hi = config.ambient_respawn_speed_range
    core.ego = 0
    core.seed(seed)

    period = config.default_decision_period
    clones = config.agent_clone_count
    core.set_vehicle(0, int(Kind.EGO), 3 * LANE_W, EGO_Y, EGO_SPEED_MPH, 1.0, 3, period)
    placed: list[tuple[int, float]] = [(3, EGO_Y)]  # (lane, nose y)

    for i in range(1, VEHICLE_COUNT):
        is_clone = i <= clones
        speed = EGO_SPEED_MPH if is_clone else AMBIENT_SPEED_MPH
        for _ in range(_PLACEMENT_TRIES):
            lane = core.rng_below(LANES)
            ypos = core.rng_uniform() * (LENGTH - BODY_L)
            ok = True
            for lane_j, y_j in placed:
                gap = abs(ypos - y_j)
                if lane == lane_j:
                    # stay out of the longitudinal safety range (4.5 cells
                    # nose-to-nose) with a little slack
                    if gap < 46.0:
                        ok = False
                        break
                elif abs(lane - lane_j) == 1:
                    if _zone_conflict(ypos, y_j) or _zone_conflict(y_j, ypos):
                        ok = False
                        break
            if ok:
                kind = Kind.CLONE if is_clone else Kind.AMBIENT
                core.set_vehicle(i, int(kind), LANE_W * lane, ypos,
                                 EGO_SPEED_MPH, speed / EGO_SPEED_MPH, lane, period)
                placed.append((lane, ypos))
                break
        else:
            raise PlacementError(f"could not place vehicle {i} after {_PLACEMENT_TRIES} tries")

    core.refresh_speeds()
    return World(config, core)


def write_frames(stream: IO[str], frames: Iterable[dict]) -> None:
    """Newline-delimited JSON frame feed."""
    for doc in frames:
        stream.write(json.dumps(doc))
        stream.write("\n")
