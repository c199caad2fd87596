"""Pure-Python simulation core.

Reference implementation of the highway world's hot loop.  The compiled
twin in _core_cy.pyx mirrors every operation here in the same order so
that both backends produce bit-identical trajectories; any change to the
step logic must be made to both files.

Coordinates: x grows to the right (lane L occupies [20L, 20L+20)), y
grows toward "behind" the ego, so a vehicle ahead of another has the
smaller y.  A body is 20 px wide by 40 px long and hangs behind its nose
at (x, y).  The ego's nose is pinned at y = 175; everything else moves
relative to it.
"""

from __future__ import annotations

import math

# kind codes
EGO = 0
CLONE = 1
AMBIENT = 2

# action codes
NOOP = 0
ACCELERATE = 1
DECELERATE = 2
LANE_LEFT = 3
LANE_RIGHT = 4

LANES = 7
LANE_W = 20.0
LENGTH = 700.0
CELL = 10.0
ROWS = 70
BODY_W = 20.0
BODY_L = 40.0
EGO_Y = 175.0

# safety band: follow the leader at |d - 4| < 0.5 cells, half its speed closer
_FOLLOW_HI = 4.5
_FOLLOW_LO = 3.5

# lane-change blocking zone, rows relative to the deciding vehicle's nose row:
# 6 ahead, 4 abreast, 1 behind
_ZONE_AHEAD = 6
_ZONE_BEHIND = 4

_RNG_MASK = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / 9007199254740992.0

_SPAWN_MARGIN = 45.0  # px of clear road demanded around a respawn slot
_RESPAWN_TRIES = 14
_CLAMP_PASSES = 40


def body_cols(x):
    """Inclusive column range covered by a body at x (half-open [x, x+20))."""
    c0 = int(math.floor(x / LANE_W))
    c1 = int(math.ceil((x + BODY_W) / LANE_W)) - 1
    return c0, c1


def body_rows(y):
    """Inclusive row range covered by a body at y (half-open [y, y+40))."""
    r0 = int(math.floor(y / CELL))
    r1 = int(math.ceil((y + BODY_L) / CELL)) - 1
    return r0, r1


class SimCore:
    """Mutable world state plus the per-frame physics kernel."""

    BACKEND = "python"

    def __init__(self, n):
        self.n = n
        self.frame = 0
        self.ego = 0
        self.rng_state = 0
        # world parameters, set by the facade
        self.k_px = 0.2
        self.speed_delta = 1.0
        self.lane_change_prob = 0.02
        self.respawn_lo = 60.0
        self.respawn_hi = 70.0
        # per-vehicle state
        self.kind = [AMBIENT] * n
        self.x = [0.0] * n
        self.y = [0.0] * n
        self.speed_max = [80.0] * n
        self.speed_factor = [1.0] * n
        self.target_lane = [0] * n
        self.steps_left = [0] * n
        self.period = [4] * n
        self.speed = [0.0] * n  # post-safety speed, refreshed each frame

    # ------------------------------------------------------------------ rng

    def seed(self, seed):
        self.rng_state = seed & _RNG_MASK

    def rng_u64(self):
        self.rng_state = (self.rng_state + 0x9E3779B97F4A7C15) & _RNG_MASK
        z = self.rng_state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _RNG_MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _RNG_MASK
        return (z ^ (z >> 31)) & _RNG_MASK

    def rng_uniform(self):
        return (self.rng_u64() >> 11) * _INV_2_53

    def rng_below(self, n):
        return int(self.rng_uniform() * n)

    # ---------------------------------------------------------------- setup

    def set_vehicle(self, i, kind, x, y, speed_max, speed_factor, lane, period):
        self.kind[i] = kind
        self.x[i] = x
        self.y[i] = y
        self.speed_max[i] = speed_max
        self.speed_factor[i] = speed_factor
        self.target_lane[i] = lane
        self.steps_left[i] = 0
        self.period[i] = period
        self.speed[i] = speed_max * speed_factor

    # ------------------------------------------------------------- queries

    def d_long(self, i, j):
        return (self.y[i] - self.y[j]) / CELL

    def _cols_overlap(self, i, j):
        a0, a1 = body_cols(self.x[i])
        b0, b1 = body_cols(self.x[j])
        return a1 >= b0 and b1 >= a0

    def _order_by_y(self):
        """Vehicle indices sorted front (small y) to back, ties by id."""
        order = list(range(self.n))
        order.sort(key=lambda i: (self.y[i], i))
        return order

    def refresh_speeds(self):
        """Recompute post-safety speeds, front to back so chains resolve."""
        y = self.y
        speed = self.speed
        order = self._order_by_y()
        for pos in range(len(order)):
            i = order[pos]
            cmd = self.speed_max[i] * self.speed_factor[i]
            s = cmd
            for pj in range(pos - 1, -1, -1):
                j = order[pj]
                if y[j] < y[i] and self._cols_overlap(i, j):
                    d = (y[i] - y[j]) / CELL
                    if d < _FOLLOW_HI:
                        s = speed[j] if d > _FOLLOW_LO else speed[j] * 0.5
                        if s > cmd:
                            s = cmd
                    break
            speed[i] = s

    def safety_speed(self, i):
        self.refresh_speeds()
        return self.speed[i]

    def lane_change_permitted(self, i, direction):
        """direction -1 = left, +1 = right; checks the 6-ahead/4-abreast/
        1-behind cell zone in the adjacent lane."""
        adj = self.target_lane[i] + direction
        if adj < 0 or adj >= LANES:
            return False
        nr = int(math.floor(self.y[i] / CELL))
        lo = nr - _ZONE_AHEAD
        hi = nr + _ZONE_BEHIND
        for j in range(self.n):
            if j == i:
                continue
            c0, c1 = body_cols(self.x[j])
            if c0 <= adj <= c1:
                r0, r1 = body_rows(self.y[j])
                if r1 >= lo and r0 <= hi:
                    return False
        return True

    # ------------------------------------------------------------- actions

    def apply_action(self, i, action):
        if action == ACCELERATE or action == DECELERATE:
            eff = self.speed_max[i] * self.speed_factor[i]
            eff = eff + self.speed_delta if action == ACCELERATE else eff - self.speed_delta
            if eff < 0.0:
                eff = 0.0
            if eff > self.speed_max[i]:
                eff = self.speed_max[i]
            self.speed_factor[i] = eff / self.speed_max[i]
        elif action == LANE_LEFT or action == LANE_RIGHT:
            direction = -1 if action == LANE_LEFT else 1
            if self.steps_left[i] == 0 and self.lane_change_permitted(i, direction):
                self.target_lane[i] += direction
                self.steps_left[i] = self.period[i]

    def ambient_policy(self, i):
        """Random lane change with the configured probability, else NoOp.
        Consumes one rng draw always, a second when both sides are open."""
        if self.rng_uniform() >= self.lane_change_prob:
            return NOOP
        left_ok = (self.steps_left[i] == 0 and self.target_lane[i] > 0
                   and self.lane_change_permitted(i, -1))
        right_ok = (self.steps_left[i] == 0 and self.target_lane[i] < LANES - 1
                    and self.lane_change_permitted(i, 1))
        if left_ok and right_ok:
            return LANE_LEFT if self.rng_uniform() < 0.5 else LANE_RIGHT
        if left_ok:
            return LANE_LEFT
        if right_ok:
            return LANE_RIGHT
        return NOOP

    def decide_ambient(self):
        """Run the ambient policy for every white car due a decision."""
        for i in range(self.n):
            if self.kind[i] == AMBIENT and self.frame % self.period[i] == 0:
                self.apply_action(i, self.ambient_policy(i))

    # ---------------------------------------------------------------- step

    def _clamp_overlaps(self):
        """Push rear vehicles back to tangency.  The ego never moves, so a
        vehicle overlapping it from ahead is pushed forward instead, and
        forward pushes cascade: a forward-pushed vehicle keeps its ground
        and displaces its own leader rather than bouncing back into the
        ego."""
        x = self.x
        y = self.y
        ego = self.ego
        fwd = [False] * self.n
        for _ in range(_CLAMP_PASSES):
            order = self._order_by_y()
            moved = False
            for pos in range(len(order)):
                i = order[pos]
                for pj in range(pos - 1, -1, -1):
                    j = order[pj]
                    # same expression shape as validate(): y[i] - y[j] can
                    # round to 40.0 while y[i] < y[j] + 40 still holds
                    if y[i] >= y[j] + BODY_L:
                        break
                    if x[i] < x[j] + BODY_W and x[j] < x[i] + BODY_W:
                        if i == ego:
                            y[j] = EGO_Y - BODY_L
                            fwd[j] = True
                        elif fwd[i]:
                            y[j] = y[i] - BODY_L
                            fwd[j] = True
                        else:
                            y[i] = y[j] + BODY_L
                        moved = True
                        break
            if not moved:
                return

    def _spawn_clear(self, lane, spawn_y, skip):
        lo = spawn_y - _SPAWN_MARGIN
        hi = spawn_y + BODY_L + _SPAWN_MARGIN
        for j in range(self.n):
            if j == skip:
                continue
            c0, c1 = body_cols(self.x[j])
            if c0 <= lane <= c1 and self.y[j] < hi and self.y[j] + BODY_L > lo:
                return False
        return True

    def _respawn(self):
        """Wrap vehicles that left the 700 px band.  Ambient cars redraw
        speed once and lane per attempt; clones keep lane and speed."""
        respawned = []
        for i in range(self.n):
            if i == self.ego:
                continue
            if self.y[i] > LENGTH:
                spawn_y = 0.0
            elif self.y[i] + BODY_L < 0.0:
                spawn_y = LENGTH - BODY_L
            else:
                continue
            if self.kind[i] == AMBIENT:
                eff = self.respawn_lo + self.rng_uniform() * (self.respawn_hi - self.respawn_lo)
                for _ in range(_RESPAWN_TRIES):
                    lane = self.rng_below(LANES)
                    if self._spawn_clear(lane, spawn_y, i):
                        self.x[i] = LANE_W * lane
                        self.y[i] = spawn_y
                        self.target_lane[i] = lane
                        self.steps_left[i] = 0
                        self.speed_factor[i] = eff / self.speed_max[i]
                        self.speed[i] = eff
                        respawned.append(i)
                        break
            else:
                lane = self.target_lane[i]
                if self._spawn_clear(lane, spawn_y, i):
                    self.x[i] = LANE_W * lane
                    self.y[i] = spawn_y
                    self.steps_left[i] = 0
                    respawned.append(i)
        return respawned

    def step(self):
        """Advance one frame.  Returns (ego_speed, red_speeds, respawned)
        where the speeds are the post-safety speeds traveled this frame."""
        self.refresh_speeds()
        x = self.x
        y = self.y
        speed = self.speed
        ego_speed = speed[self.ego]
        k = self.k_px
        for i in range(self.n):
            if i != self.ego:
                y[i] = y[i] + (ego_speed - speed[i]) * k
        for i in range(self.n):
            left = self.steps_left[i]
            if left > 0:
                xt = LANE_W * self.target_lane[i]
                x[i] = xt if left == 1 else x[i] + (xt - x[i]) / left
                self.steps_left[i] = left - 1
        self._clamp_overlaps()
        respawned = self._respawn()
        self.frame += 1
        red_speeds = [speed[i] for i in range(self.n) if self.kind[i] != AMBIENT]
        return ego_speed, red_speeds, respawned

    def step_block(self, k, red_sum, check=0):
        """k frames of (ambient decisions; step), adding each red car's
        per-frame speed into red_sum (red cars in id order).  check != 0
        also ORs the per-frame validate() flags into the return value."""
        flags = 0
        for _ in range(k):
            self.decide_ambient()
            _, red_speeds, _ = self.step()
            for idx in range(len(red_speeds)):
                red_sum[idx] += red_speeds[idx]
            if check:
                flags |= self.validate()
        return flags

    # ------------------------------------------------------------ sensing

    def fill_grid(self, out):
        """Write the 7x70 occupancy grid of post-safety speeds into out
        (any (7, 70)-indexable float container).  Later ids win contested
        cells; bodies cannot overlap but may share a boundary cell."""
        for c in range(LANES):
            for r in range(ROWS):
                out[c][r] = 0.0
        for i in range(self.n):
            c0, c1 = body_cols(self.x[i])
            r0, r1 = body_rows(self.y[i])
            if c0 < 0:
                c0 = 0
            if c1 >= LANES:
                c1 = LANES - 1
            if r0 < 0:
                r0 = 0
            if r1 >= ROWS:
                r1 = ROWS - 1
            s = self.speed[i]
            for c in range(c0, c1 + 1):
                for r in range(r0, r1 + 1):
                    out[c][r] = s

    def pos_x(self, i):
        return self.x[i]

    def pos_y(self, i):
        return self.y[i]

    def nearest_lane(self, i):
        return int(math.floor((self.x[i] + BODY_W * 0.5) / LANE_W))

    def fill_slice(self, i, lanes_side, ahead, behind, out):
        """Write the normalized sensor window around vehicle i into the
        flat buffer out, rows (far-ahead first) outer, columns inner.
        Off-road columns read -1.0; rows beyond the grid read 0.0."""
        grid = [[0.0] * ROWS for _ in range(LANES)]
        self.fill_grid(grid)
        cc = self.nearest_lane(i)
        nr = int(math.floor(self.y[i] / CELL))
        idx = 0
        for r in range(nr - ahead, nr + behind):
            for c in range(cc - lanes_side, cc + lanes_side + 1):
                if c < 0 or c >= LANES:
                    out[idx] = -1.0
                elif r < 0 or r >= ROWS:
                    out[idx] = 0.0
                else:
                    out[idx] = grid[c][r] / 80.0
                idx += 1

    # ---------------------------------------------------------- integrity

    def validate(self):
        """Bit flags: 1 = some bodies overlap, 2 = ego nose off 175."""
        flags = 0
        x = self.x
        y = self.y
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if (x[i] < x[j] + BODY_W and x[j] < x[i] + BODY_W
                        and y[i] < y[j] + BODY_L and y[j] < y[i] + BODY_L):
                    flags |= 1
        if y[self.ego] != EGO_Y:
            flags |= 2
        return flags

    # ------------------------------------------------------------- state

    def get_state(self):
        return (
            self.frame,
            self.rng_state,
            list(self.kind),
            list(self.x),
            list(self.y),
            list(self.speed_max),
            list(self.speed_factor),
            list(self.target_lane),
            list(self.steps_left),
            list(self.period),
            list(self.speed),
        )

    def set_state(self, state):
        (self.frame, self.rng_state, kind, x, y, smax, sfac,
         lane, left, period, speed) = state
        self.kind = list(kind)
        self.x = list(x)
        self.y = list(y)
        self.speed_max = list(smax)
        self.speed_factor = list(sfac)
        self.target_lane = list(lane)
        self.steps_left = list(left)
        self.period = list(period)
        self.speed = list(speed)
