"""Occupancy grid and agent input assembly.

The 7x70 grid discretizes the highway into 20x10 px cells; an occupied
cell carries the occupant's current (post-safety) speed, empty cells are
zero.  The agent's input is a window of that grid around its own nose --
lanes_side columns to each side, patches_ahead rows up, patches_behind
rows down -- normalized by 80 mph, optionally concatenated with the
previous temporal_window (slice, action) pairs.

Cells beyond the road edge read as the wall sentinel -1.0; rows beyond
the 700 px band read as empty road (0.0).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .sim.world import CELL, LANES, ROWS, World

WALL_SENTINEL = -1.0
SPEED_NORM = 80.0
ACTION_COUNT = 5


@dataclass
class SensorConfig:
    lanes_side: int = 3
    patches_ahead: int = 24
    patches_behind: int = 6
    temporal_window: int = 0

    def validate(self) -> None:
        if self.lanes_side < 0 or 2 * self.lanes_side + 1 > LANES:
            raise ValueError("lanes_side must keep the window within 7 lanes")
        if self.patches_ahead < 1:
            raise ValueError("patches_ahead must be >= 1")
        if self.patches_behind < 0:
            raise ValueError("patches_behind must be >= 0")
        if self.patches_ahead + self.patches_behind > ROWS:
            raise ValueError("window taller than the 70-row grid")
        if self.temporal_window < 0:
            raise ValueError("temporal_window must be >= 0")

    @property
    def slice_size(self) -> int:
        return (2 * self.lanes_side + 1) * (self.patches_ahead + self.patches_behind)


@dataclass
class OccupancyGrid:
    cells: np.ndarray  # (7, 70) float64, mph
    frame: int


def build_grid(world: World) -> OccupancyGrid:
    """Rasterize every vehicle body onto the 7x70 grid."""
    world.core.refresh_speeds()
    cells = np.zeros((LANES, ROWS))
    world.core.fill_grid(cells)
    return OccupancyGrid(cells, world.frame)


def slice_state(grid: OccupancyGrid, world: World, sensor: SensorConfig,
                vehicle_id: int | None = None) -> np.ndarray:
    """Normalized sensor window, rows (farthest ahead first) outer,
    columns left-to-right inner."""
    sensor.validate()
    i = world.ego_id if vehicle_id is None else vehicle_id
    cc = world.core.nearest_lane(i)
    nr = int(np.floor(world.core.pos_y(i) / CELL))
    out = np.empty(sensor.slice_size)
    idx = 0
    for r in range(nr - sensor.patches_ahead, nr + sensor.patches_behind):
        for c in range(cc - sensor.lanes_side, cc + sensor.lanes_side + 1):
            if c < 0 or c >= LANES:
                out[idx] = WALL_SENTINEL
            elif r < 0 or r >= ROWS:
                out[idx] = 0.0
            else:
                out[idx] = grid.cells[c, r] / SPEED_NORM
            idx += 1
    return out


def input_size(sensor: SensorConfig, action_count: int = ACTION_COUNT) -> int:
    """Slice for now plus (slice, one-hot action) per remembered step."""
    s = sensor.slice_size
    w = sensor.temporal_window
    return s * (w + 1) + action_count * w


class HistoryRing:
    """Most-recent-first ring of past (slice, action) pairs."""

    def __init__(self, sensor: SensorConfig):
        self.sensor = sensor
        self._past: deque[tuple[np.ndarray, int]] = deque(maxlen=max(sensor.temporal_window, 1))

    def push(self, observation: np.ndarray, action: int) -> None:
        """Record what the agent just saw and did; only the current-slice
        prefix of the observation is kept (the rest is older history)."""
        prefix = np.array(observation[:self.sensor.slice_size])
        self._past.appendleft((prefix, action))

    def clear(self) -> None:
        self._past.clear()

    def entries(self) -> list[tuple[np.ndarray, int]]:
        return list(self._past)


def assemble_input(history: HistoryRing, current_slice: np.ndarray, sensor: SensorConfig,
                   action_count: int = ACTION_COUNT) -> np.ndarray:
    """[current, slice_{t-1}, onehot(a_{t-1}), ..., slice_{t-W}, onehot(a_{t-W})],
    zero-padded where history is shorter than the window."""
    w = sensor.temporal_window
    s = sensor.slice_size
    out = np.zeros(input_size(sensor, action_count))
    out[:s] = current_slice
    past = history.entries()
    pos = s
    for k in range(w):
        if k < len(past):
            past_slice, past_action = past[k]
            out[pos:pos + s] = past_slice
            out[pos + s + past_action] = 1.0
        pos += s + action_count
    return out


def observe(world: World, sensor: SensorConfig, history: HistoryRing,
            vehicle_id: int | None = None) -> np.ndarray:
    """Hot-path observation: slice via the backend kernel, then assemble."""
    i = world.ego_id if vehicle_id is None else vehicle_id
    world.core.refresh_speeds()
    current = np.empty(sensor.slice_size)
    world.core.fill_slice(i, sensor.lanes_side, sensor.patches_ahead,
                          sensor.patches_behind, current)
    if sensor.temporal_window == 0:
        return current
    return assemble_input(history, current, sensor)
