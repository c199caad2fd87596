# cython: language_level=3
"""Compiled simulation core.

Operation-for-operation mirror of _core_py.SimCore; see that module for
the semantics.  Both backends must produce bit-identical trajectories,
so every float expression here keeps the same shape and evaluation
order as the Python twin (and the build disables FP contraction).
"""

from libc.math cimport floor, ceil
from libc.stdlib cimport malloc, free

cdef int EGO = 0
cdef int CLONE = 1
cdef int AMBIENT = 2

cdef int NOOP = 0
cdef int ACCELERATE = 1
cdef int DECELERATE = 2
cdef int LANE_LEFT = 3
cdef int LANE_RIGHT = 4

cdef int LANES = 7
cdef double LANE_W = 20.0
cdef double LENGTH = 700.0
cdef double CELL = 10.0
cdef int ROWS = 70
cdef double BODY_W = 20.0
cdef double BODY_L = 40.0
cdef double EGO_Y = 175.0

cdef double FOLLOW_HI = 4.5
cdef double FOLLOW_LO = 3.5
cdef int ZONE_AHEAD = 6
cdef int ZONE_BEHIND = 4

cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double SPAWN_MARGIN = 45.0
cdef int RESPAWN_TRIES = 14
cdef int CLAMP_PASSES = 40


cdef inline int col_lo(double x):
    return <int>floor(x / LANE_W)

cdef inline int col_hi(double x):
    return (<int>ceil((x + BODY_W) / LANE_W)) - 1

cdef inline int row_lo(double y):
    return <int>floor(y / CELL)

cdef inline int row_hi(double y):
    return (<int>ceil((y + BODY_L) / CELL)) - 1


cdef class SimCore:
    """Compiled twin of the pure-Python world core."""

    BACKEND = "compiled"

    cdef public int n
    cdef public long long frame
    cdef public int ego
    cdef unsigned long long _rng
    cdef public double k_px
    cdef public double speed_delta
    cdef public double lane_change_prob
    cdef public double respawn_lo
    cdef public double respawn_hi

    cdef int* _kind
    cdef double* _x
    cdef double* _y
    cdef double* _smax
    cdef double* _sfac
    cdef int* _lane
    cdef int* _left
    cdef int* _period
    cdef double* _speed
    cdef int* _order
    cdef int* _scratch
    cdef int* _fwd
    cdef int _last_spawned

    def __cinit__(self, int n):
        self.n = n
        self.frame = 0
        self.ego = 0
        self._rng = 0
        self.k_px = 0.2
        self.speed_delta = 1.0
        self.lane_change_prob = 0.02
        self.respawn_lo = 60.0
        self.respawn_hi = 70.0
        self._kind = <int*>malloc(n * sizeof(int))
        self._x = <double*>malloc(n * sizeof(double))
        self._y = <double*>malloc(n * sizeof(double))
        self._smax = <double*>malloc(n * sizeof(double))
        self._sfac = <double*>malloc(n * sizeof(double))
        self._lane = <int*>malloc(n * sizeof(int))
        self._left = <int*>malloc(n * sizeof(int))
        self._period = <int*>malloc(n * sizeof(int))
        self._speed = <double*>malloc(n * sizeof(double))
        self._order = <int*>malloc(n * sizeof(int))
        self._scratch = <int*>malloc(n * sizeof(int))
        self._fwd = <int*>malloc(n * sizeof(int))
        self._last_spawned = 0
        cdef int i
        for i in range(n):
            self._kind[i] = AMBIENT
            self._x[i] = 0.0
            self._y[i] = 0.0
            self._smax[i] = 80.0
            self._sfac[i] = 1.0
            self._lane[i] = 0
            self._left[i] = 0
            self._period[i] = 4
            self._speed[i] = 0.0

    def __dealloc__(self):
        free(self._kind)
        free(self._x)
        free(self._y)
        free(self._smax)
        free(self._sfac)
        free(self._lane)
        free(self._left)
        free(self._period)
        free(self._speed)
        free(self._order)
        free(self._scratch)
        free(self._fwd)

    # ------------------------------------------------------------------ rng

    def seed(self, seed):
        self._rng = <unsigned long long>(seed & 0xFFFFFFFFFFFFFFFF)

    cdef inline unsigned long long _next_u64(self):
        self._rng = self._rng + <unsigned long long>0x9E3779B97F4A7C15
        cdef unsigned long long z = self._rng
        z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
        return z ^ (z >> 31)

    cdef inline double _uniform(self):
        return <double>(self._next_u64() >> 11) * INV_2_53

    cdef inline int _below(self, int n):
        return <int>(self._uniform() * n)

    def rng_u64(self):
        return self._next_u64()

    def rng_uniform(self):
        return self._uniform()

    def rng_below(self, int n):
        return self._below(n)

    @property
    def rng_state(self):
        return self._rng

    @rng_state.setter
    def rng_state(self, value):
        self._rng = <unsigned long long>(value & 0xFFFFFFFFFFFFFFFF)

    # ---------------------------------------------------------------- setup

    def set_vehicle(self, int i, int kind, double x, double y,
                    double speed_max, double speed_factor, int lane, int period):
        self._kind[i] = kind
        self._x[i] = x
        self._y[i] = y
        self._smax[i] = speed_max
        self._sfac[i] = speed_factor
        self._lane[i] = lane
        self._left[i] = 0
        self._period[i] = period
        self._speed[i] = speed_max * speed_factor

    # ------------------------------------------------------------- queries

    def d_long(self, int i, int j):
        return (self._y[i] - self._y[j]) / CELL

    cdef inline bint _cols_overlap(self, int i, int j):
        cdef int a0 = col_lo(self._x[i])
        cdef int a1 = col_hi(self._x[i])
        cdef int b0 = col_lo(self._x[j])
        cdef int b1 = col_hi(self._x[j])
        return a1 >= b0 and b1 >= a0

    cdef void _sort_by_y(self):
        """Insertion sort of vehicle ids, ascending (y, id)."""
        cdef int i, j, v
        cdef double yv
        for i in range(self.n):
            self._order[i] = i
        for i in range(1, self.n):
            v = self._order[i]
            yv = self._y[v]
            j = i - 1
            while j >= 0 and (self._y[self._order[j]] > yv or
                              (self._y[self._order[j]] == yv and self._order[j] > v)):
                self._order[j + 1] = self._order[j]
                j -= 1
            self._order[j + 1] = v

    cdef void _refresh(self):
        cdef int pos, pj, i, j
        cdef double cmd, s, d
        self._sort_by_y()
        for pos in range(self.n):
            i = self._order[pos]
            cmd = self._smax[i] * self._sfac[i]
            s = cmd
            pj = pos - 1
            while pj >= 0:
                j = self._order[pj]
                if self._y[j] < self._y[i] and self._cols_overlap(i, j):
                    d = (self._y[i] - self._y[j]) / CELL
                    if d < FOLLOW_HI:
                        s = self._speed[j] if d > FOLLOW_LO else self._speed[j] * 0.5
                        if s > cmd:
                            s = cmd
                    break
                pj -= 1
            self._speed[i] = s

    def refresh_speeds(self):
        self._refresh()

    def safety_speed(self, int i):
        self._refresh()
        return self._speed[i]

    cdef bint _permitted(self, int i, int direction):
        cdef int adj = self._lane[i] + direction
        if adj < 0 or adj >= LANES:
            return False
        cdef int nr = row_lo(self._y[i])
        cdef int lo = nr - ZONE_AHEAD
        cdef int hi = nr + ZONE_BEHIND
        cdef int j, c0, c1, r0, r1
        for j in range(self.n):
            if j == i:
                continue
            c0 = col_lo(self._x[j])
            c1 = col_hi(self._x[j])
            if c0 <= adj <= c1:
                r0 = row_lo(self._y[j])
                r1 = row_hi(self._y[j])
                if r1 >= lo and r0 <= hi:
                    return False
        return True

    def lane_change_permitted(self, int i, int direction):
        return self._permitted(i, direction)

    # ------------------------------------------------------------- actions

    cdef void _apply(self, int i, int action):
        cdef double eff
        cdef int direction
        if action == ACCELERATE or action == DECELERATE:
            eff = self._smax[i] * self._sfac[i]
            eff = eff + self.speed_delta if action == ACCELERATE else eff - self.speed_delta
            if eff < 0.0:
                eff = 0.0
            if eff > self._smax[i]:
                eff = self._smax[i]
            self._sfac[i] = eff / self._smax[i]
        elif action == LANE_LEFT or action == LANE_RIGHT:
            direction = -1 if action == LANE_LEFT else 1
            if self._left[i] == 0 and self._permitted(i, direction):
                self._lane[i] += direction
                self._left[i] = self._period[i]

    def apply_action(self, int i, int action):
        self._apply(i, action)

    cdef int _ambient_policy(self, int i):
        if self._uniform() >= self.lane_change_prob:
            return NOOP
        cdef bint left_ok = (self._left[i] == 0 and self._lane[i] > 0
                             and self._permitted(i, -1))
        cdef bint right_ok = (self._left[i] == 0 and self._lane[i] < LANES - 1
                              and self._permitted(i, 1))
        if left_ok and right_ok:
            return LANE_LEFT if self._uniform() < 0.5 else LANE_RIGHT
        if left_ok:
            return LANE_LEFT
        if right_ok:
            return LANE_RIGHT
        return NOOP

    def ambient_policy(self, int i):
        return self._ambient_policy(i)

    def decide_ambient(self):
        cdef int i
        for i in range(self.n):
            if self._kind[i] == AMBIENT and self.frame % self._period[i] == 0:
                self._apply(i, self._ambient_policy(i))

    # ---------------------------------------------------------------- step

    cdef void _clamp_overlaps(self):
        cdef int p, pos, pj, i, j
        cdef bint moved
        for i in range(self.n):
            self._fwd[i] = 0
        for p in range(CLAMP_PASSES):
            self._sort_by_y()
            moved = False
            for pos in range(self.n):
                i = self._order[pos]
                pj = pos - 1
                while pj >= 0:
                    j = self._order[pj]
                    # same expression shape as validate(): the subtraction
                    # can round to 40.0 while y[i] < y[j] + 40 still holds
                    if self._y[i] >= self._y[j] + BODY_L:
                        break
                    if (self._x[i] < self._x[j] + BODY_W
                            and self._x[j] < self._x[i] + BODY_W):
                        if i == self.ego:
                            self._y[j] = EGO_Y - BODY_L
                            self._fwd[j] = 1
                        elif self._fwd[i]:
                            self._y[j] = self._y[i] - BODY_L
                            self._fwd[j] = 1
                        else:
                            self._y[i] = self._y[j] + BODY_L
                        moved = True
                        break
                    pj -= 1
            if not moved:
                return

    cdef bint _spawn_clear(self, int lane, double spawn_y, int skip):
        cdef double lo = spawn_y - SPAWN_MARGIN
        cdef double hi = spawn_y + BODY_L + SPAWN_MARGIN
        cdef int j, c0, c1
        for j in range(self.n):
            if j == skip:
                continue
            c0 = col_lo(self._x[j])
            c1 = col_hi(self._x[j])
            if c0 <= lane <= c1 and self._y[j] < hi and self._y[j] + BODY_L > lo:
                return False
        return True

    cdef int _respawn_core(self):
        """Respawned ids land in _scratch; returns their count."""
        cdef int count = 0
        cdef int i, t, lane
        cdef double spawn_y, eff
        for i in range(self.n):
            if i == self.ego:
                continue
            if self._y[i] > LENGTH:
                spawn_y = 0.0
            elif self._y[i] + BODY_L < 0.0:
                spawn_y = LENGTH - BODY_L
            else:
                continue
            if self._kind[i] == AMBIENT:
                eff = self.respawn_lo + self._uniform() * (self.respawn_hi - self.respawn_lo)
                for t in range(RESPAWN_TRIES):
                    lane = self._below(LANES)
                    if self._spawn_clear(lane, spawn_y, i):
                        self._x[i] = LANE_W * lane
                        self._y[i] = spawn_y
                        self._lane[i] = lane
                        self._left[i] = 0
                        self._sfac[i] = eff / self._smax[i]
                        self._speed[i] = eff
                        self._scratch[count] = i
                        count += 1
                        break
            else:
                lane = self._lane[i]
                if self._spawn_clear(lane, spawn_y, i):
                    self._x[i] = LANE_W * lane
                    self._y[i] = spawn_y
                    self._left[i] = 0
                    self._scratch[count] = i
                    count += 1
        return count

    cdef double _step_kernel(self):
        """One frame of physics; returns the ego's effective speed and
        leaves the respawn count in _last_spawned."""
        cdef int i, left
        cdef double ego_speed, xt
        cdef double k = self.k_px
        self._refresh()
        ego_speed = self._speed[self.ego]
        for i in range(self.n):
            if i != self.ego:
                self._y[i] = self._y[i] + (ego_speed - self._speed[i]) * k
        for i in range(self.n):
            left = self._left[i]
            if left > 0:
                xt = LANE_W * self._lane[i]
                self._x[i] = xt if left == 1 else self._x[i] + (xt - self._x[i]) / left
                self._left[i] = left - 1
        self._clamp_overlaps()
        self._last_spawned = self._respawn_core()
        self.frame += 1
        return ego_speed

    def step(self):
        cdef int i
        cdef double ego_speed = self._step_kernel()
        cdef list respawned = []
        for i in range(self._last_spawned):
            respawned.append(self._scratch[i])
        cdef list red_speeds = []
        for i in range(self.n):
            if self._kind[i] != AMBIENT:
                red_speeds.append(self._speed[i])
        return ego_speed, red_speeds, respawned

    def step_block(self, long long k, double[::1] red_sum, int check=0):
        """k frames of (ambient decisions; step), accumulating red-car
        speeds (id order) into red_sum; check != 0 ORs validate() flags."""
        cdef int flags = 0
        cdef long long t
        cdef int i, idx
        for t in range(k):
            for i in range(self.n):
                if self._kind[i] == AMBIENT and self.frame % self._period[i] == 0:
                    self._apply(i, self._ambient_policy(i))
            self._step_kernel()
            idx = 0
            for i in range(self.n):
                if self._kind[i] != AMBIENT:
                    red_sum[idx] += self._speed[i]
                    idx += 1
            if check:
                flags |= self._validate_flags()
        return flags

    # ------------------------------------------------------------ sensing

    def fill_grid(self, double[:, ::1] out):
        cdef int i, c, r, c0, c1, r0, r1
        cdef double s
        for c in range(LANES):
            for r in range(ROWS):
                out[c, r] = 0.0
        for i in range(self.n):
            c0 = col_lo(self._x[i])
            c1 = col_hi(self._x[i])
            r0 = row_lo(self._y[i])
            r1 = row_hi(self._y[i])
            if c0 < 0:
                c0 = 0
            if c1 >= LANES:
                c1 = LANES - 1
            if r0 < 0:
                r0 = 0
            if r1 >= ROWS:
                r1 = ROWS - 1
            s = self._speed[i]
            for c in range(c0, c1 + 1):
                for r in range(r0, r1 + 1):
                    out[c, r] = s

    def pos_x(self, int i):
        return self._x[i]

    def pos_y(self, int i):
        return self._y[i]

    def nearest_lane(self, int i):
        return <int>floor((self._x[i] + BODY_W * 0.5) / LANE_W)

    def fill_slice(self, int i, int lanes_side, int ahead, int behind, double[::1] out):
        cdef double grid[7][70]
        cdef int c, r, c0, c1, r0, r1, j, idx, cc, nr
        cdef double s
        for c in range(LANES):
            for r in range(ROWS):
                grid[c][r] = 0.0
        for j in range(self.n):
            c0 = col_lo(self._x[j])
            c1 = col_hi(self._x[j])
            r0 = row_lo(self._y[j])
            r1 = row_hi(self._y[j])
            if c0 < 0:
                c0 = 0
            if c1 >= LANES:
                c1 = LANES - 1
            if r0 < 0:
                r0 = 0
            if r1 >= ROWS:
                r1 = ROWS - 1
            s = self._speed[j]
            for c in range(c0, c1 + 1):
                for r in range(r0, r1 + 1):
                    grid[c][r] = s
        cc = <int>floor((self._x[i] + BODY_W * 0.5) / LANE_W)
        nr = row_lo(self._y[i])
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

    cdef int _validate_flags(self):
        cdef int flags = 0
        cdef int i, j
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if (self._x[i] < self._x[j] + BODY_W and self._x[j] < self._x[i] + BODY_W
                        and self._y[i] < self._y[j] + BODY_L and self._y[j] < self._y[i] + BODY_L):
                    flags |= 1
        if self._y[self.ego] != EGO_Y:
            flags |= 2
        return flags

    def validate(self):
        return self._validate_flags()

    # ------------------------------------------------------------- state

    @property
    def kind(self):
        return [self._kind[i] for i in range(self.n)]

    @property
    def x(self):
        return [self._x[i] for i in range(self.n)]

    @property
    def y(self):
        return [self._y[i] for i in range(self.n)]

    @property
    def speed_max(self):
        return [self._smax[i] for i in range(self.n)]

    @property
    def speed_factor(self):
        return [self._sfac[i] for i in range(self.n)]

    @property
    def target_lane(self):
        return [self._lane[i] for i in range(self.n)]

    @property
    def steps_left(self):
        return [self._left[i] for i in range(self.n)]

    @property
    def period(self):
        return [self._period[i] for i in range(self.n)]

    @property
    def speed(self):
        return [self._speed[i] for i in range(self.n)]

    def get_state(self):
        return (
            self.frame,
            self._rng,
            self.kind,
            self.x,
            self.y,
            self.speed_max,
            self.speed_factor,
            self.target_lane,
            self.steps_left,
            self.period,
            self.speed,
        )

    def set_state(self, state):
        frame, rng, kind, x, y, smax, sfac, lane, left, period, speed = state
        self.frame = frame
        self._rng = <unsigned long long>(rng & 0xFFFFFFFFFFFFFFFF)
        cdef int i
        for i in range(self.n):
            self._kind[i] = kind[i]
            self._x[i] = x[i]
            self._y[i] = y[i]
            self._smax[i] = smax[i]
            self._sfac[i] = sfac[i]
            self._lane[i] = lane[i]
            self._left[i] = left[i]
            self._period[i] = period[i]
            self._speed[i] = speed[i]
