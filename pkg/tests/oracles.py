"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow, obvious way (fixpoint
relaxation, per-pixel rectangle intersection, tabular backups) and shares
no code with the implementations under test.
"""
from __future__ import annotations

import numpy as np

LANE_W = 20.0
CELL = 10.0
BODY_W = 20.0
BODY_L = 40.0


# ---------------------------------------------------------------------------
# Geometry: which grid cells does a body overlap (positive-area test)?

def covered_cells(x: float, y: float) -> set[tuple[int, int]]:
    """(col, row) cells whose rectangle shares positive area with the body
    [x, x+20) x [y, y+40); rows/cols are unclipped integers."""
    cells = set()
    c = int(np.floor(x / LANE_W)) - 1
    while c * LANE_W < x + BODY_W:
        r = int(np.floor(y / CELL)) - 1
        while r * CELL < y + BODY_L:
            col_overlap = min(x + BODY_W, (c + 1) * LANE_W) - max(x, c * LANE_W)
            row_overlap = min(y + BODY_L, (r + 1) * CELL) - max(y, r * CELL)
            if col_overlap > 0 and row_overlap > 0:
                cells.add((c, r))
            r += 1
        c += 1
    return cells


def bodies_intersect(xa, ya, xb, yb) -> bool:
    return xa < xb + BODY_W and xb < xa + BODY_W and ya < yb + BODY_L and yb < ya + BODY_L


# ---------------------------------------------------------------------------
# Safety system by fixpoint relaxation

def covered_cols(x: float) -> set[int]:
    return {c for c, _ in covered_cells(x, 0.0)}


def safe_speeds(xs, ys, commanded) -> list[float]:
    """Effective speeds after the follow rules, iterated to a fixed point.

    Follower caps at its own commanded speed; the leader's *effective*
    speed propagates down the chain.  Nearest leader = the column-
    overlapping vehicle ahead (smaller y) with the largest y.
    """
    n = len(xs)
    cols = [covered_cols(x) for x in xs]
    speeds = list(commanded)
    for _ in range(n + 1):
        nxt = list(speeds)
        for i in range(n):
            leader = None
            for j in range(n):
                if j == i or ys[j] >= ys[i] or not (cols[i] & cols[j]):
                    continue
                if leader is None or ys[j] > ys[leader]:
                    leader = j
            if leader is None:
                nxt[i] = commanded[i]
                continue
            d = (ys[i] - ys[leader]) / CELL
            if d >= 4.5:
                nxt[i] = commanded[i]
            elif d > 3.5:
                nxt[i] = min(commanded[i], speeds[leader])
            else:
                nxt[i] = min(commanded[i], speeds[leader] / 2.0)
        speeds = nxt
    return speeds


def lane_change_blocked(xs, ys, i: int, direction: int) -> bool:
    """Brute-force zone scan: 6 cells diagonally ahead, 4 abreast, 1 behind
    in the adjacent lane, against every other vehicle's covered cells."""
    lane = int(round(xs[i] / LANE_W))
    adj = lane + direction
    if adj < 0 or adj > 6:
        return True
    nose_row = int(np.floor(ys[i] / CELL))
    zone = {(adj, r) for r in range(nose_row - 6, nose_row + 4 + 1)}
    for j in range(len(xs)):
        if j != i and (covered_cells(xs[j], ys[j]) & zone):
            return True
    return False


# ---------------------------------------------------------------------------
# Occupancy grid per-pixel rasterizer

def rasterize(xs, ys, speeds) -> np.ndarray:
    """7x70 grid of occupant speeds, later vehicle winning contested cells,
    cells outside the board dropped."""
    grid = np.zeros((7, 70))
    for x, y, s in zip(xs, ys, speeds):
        for c, r in covered_cells(x, y):
            if 0 <= c < 7 and 0 <= r < 70:
                grid[c, r] = s
    return grid


# ---------------------------------------------------------------------------
# Finite-difference gradients

def numeric_gradients(loss_fn, params: list[np.ndarray], eps: float = 1e-5):
    """Central differences on every element of every parameter array."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gf = g.reshape(-1)
        for k in range(flat.size):
            keep = flat[k]
            flat[k] = keep + eps
            hi = loss_fn()
            flat[k] = keep - eps
            lo = loss_fn()
            flat[k] = keep
            gf[k] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


# ---------------------------------------------------------------------------
# Tabular value iteration

def value_iteration(transitions, rewards, gamma: float, sweeps: int = 10_000,
                    tol: float = 1e-12) -> np.ndarray:
    """Q*(s, a) for a deterministic MDP given as next-state and reward
    tables of shape (S, A)."""
    transitions = np.asarray(transitions)
    rewards = np.asarray(rewards)
    n_states, n_actions = transitions.shape
    q = np.zeros((n_states, n_actions))
    for _ in range(sweeps):
        v = q.max(axis=1)
        nxt = rewards + gamma * v[transitions]
        if np.abs(nxt - q).max() < tol:
            return nxt
        q = nxt
    return q


def sorted_median(values) -> float:
    """Textbook order-statistic median: sort, take middle (or mean of two)."""
    ordered = sorted(values)
    n = len(ordered)
    if n % 2:
        return float(ordered[n // 2])
    return (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
