"""Seeded evaluation, baseline policies, variance studies, and sweeps.

A run is a fresh world stepped for a fixed frame budget under a policy;
its score is the mean over red cars of per-frame effective speed.  A
submission's score is the exact median over `runs` seeded runs (seed =
base_seed + run index), so any two machines agree bit-for-bit.  Runs are
embarrassingly parallel; the process-pool path must produce the same
report as the serial path.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import IO, Iterable, Protocol, Sequence

import numpy as np

from .dqn import AgentConfig, DqnPolicy, train
from .neural import QNetwork
from .rng import SplitMix64, derive_seed
from .sim.world import LANES, CELL, ROWS, World, WorldConfig, new_world

_STREAM_BASELINE = 4
_STREAM_SWEEP_EVAL = 5

DEFAULT_RUNS = 100
DEFAULT_STEPS_PER_RUN = 10000


class Policy(Protocol):
    """Drives every red car; decide() is called once per car per decision
    cycle.  other_agents > 0 adds that many clone cars to the world."""

    other_agents: int

    def begin_run(self, world: World, run_seed: int) -> None: ...

    def decide(self, world: World, vehicle_id: int) -> int: ...


def exact_median(values: Sequence[float]) -> float:
    """Order-statistic median: middle element, or mean of the middle two."""
    if not values:
        raise ValueError("median of empty sequence")
    s = sorted(values)
    n = len(s)
    mid = n // 2
    if n % 2 == 1:
        return s[mid]
    return (s[mid - 1] + s[mid]) / 2.0


@dataclass
class EvaluationReport:
    run_scores: list[float]
    median_score: float
    score_std: float
    run_count: int
    steps_per_run: int
    base_seed: int
    seeds: list[int]

    def to_json(self) -> dict:
        return {
            "run_scores": self.run_scores,
            "median_score": self.median_score,
            "score_std": self.score_std,
            "run_count": self.run_count,
            "steps_per_run": self.steps_per_run,
            "base_seed": self.base_seed,
            "seeds": self.seeds,
        }

    def write_csv(self, stream: IO[str]) -> None:
        w = csv.writer(stream)
        w.writerow(["run", "seed", "score"])
        for i, (seed, score) in enumerate(zip(self.seeds, self.run_scores)):
            w.writerow([i, seed, repr(score)])


def report_from_scores(scores: Sequence[float], steps_per_run: int, base_seed: int,
                       seeds: Sequence[int]) -> EvaluationReport:
    arr = np.asarray(scores)
    return EvaluationReport(
        run_scores=list(scores),
        median_score=exact_median(scores),
        score_std=float(arr.std()),
        run_count=len(scores),
        steps_per_run=steps_per_run,
        base_seed=base_seed,
        seeds=list(seeds),
    )


def read_report_csv(stream: IO[str], steps_per_run: int = 0) -> EvaluationReport:
    r = csv.reader(stream)
    if next(r) != ["run", "seed", "score"]:
        raise ValueError("unrecognized evaluation CSV header")
    seeds = []
    scores = []
    for row in r:
        seeds.append(int(row[1]))
        scores.append(float(row[2]))
    base = seeds[0] if seeds else 0
    return report_from_scores(scores, steps_per_run, base, seeds)


# ---------------------------------------------------------------------------
# Single runs

def run_once(policy, world_cfg: WorldConfig, steps: int, seed: int) -> float:
    """Mean over red cars of their average effective speed over `steps`."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    clones = getattr(policy, "other_agents", 0)
    wcfg = replace(world_cfg, agent_clone_count=clones)
    world = new_world(wcfg, seed)
    begin = getattr(policy, "begin_run", None)
    if begin is not None:
        begin(world, seed)
    reds = world.red_ids()
    red_sum = np.zeros(len(reds))
    period = world.decision_period
    left = steps
    while left > 0:
        for vid in reds:
            world.apply_action(vid, policy.decide(world, vid))
        block = period if period < left else left
        world.step_block(block, red_sum)
        left -= block
    return float((red_sum / steps).mean())


def _run_once_star(args) -> float:
    policy, world_cfg, steps, seed = args
    return run_once(policy, world_cfg, steps, seed)


def evaluate(policy, world_cfg: WorldConfig, runs: int = DEFAULT_RUNS,
             steps_per_run: int = DEFAULT_STEPS_PER_RUN, base_seed: int = 0,
             workers: int = 1) -> EvaluationReport:
    """Median-of-runs evaluation; parallel execution is score-identical to
    serial because every run is independently seeded and results are
    collected in run order."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    seeds = [base_seed + i for i in range(runs)]
    if workers <= 1:
        scores = [run_once(policy, world_cfg, steps_per_run, s) for s in seeds]
    else:
        tasks = [(policy, world_cfg, steps_per_run, s) for s in seeds]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(_run_once_star, tasks))
    return report_from_scores(scores, steps_per_run, base_seed, seeds)


# ---------------------------------------------------------------------------
# Variance study

@dataclass
class VarianceRow:
    runs: int
    trials: int
    score_std: float
    median_of_medians: float


def variance_study(policy, world_cfg: WorldConfig, runs_grid: Sequence[int],
                   trials: int, steps_per_run: int = DEFAULT_STEPS_PER_RUN,
                   seed: int = 0, workers: int = 1) -> list[VarianceRow]:
    """Std of the median score across `trials` independent evaluations,
    for each run count: more runs per evaluation, steadier medians."""
    if trials < 2:
        raise ValueError("trials must be >= 2")
    rows = []
    for runs in runs_grid:
        medians = []
        for k in range(trials):
            base = derive_seed(seed, runs * 1000003 + k)
            rep = evaluate(policy, world_cfg, runs, steps_per_run, base, workers)
            medians.append(rep.median_score)
        arr = np.asarray(medians)
        rows.append(VarianceRow(runs=runs, trials=trials,
                                score_std=float(arr.std()),
                                median_of_medians=exact_median(medians)))
    return rows


def write_variance_csv(rows: Sequence[VarianceRow], stream: IO[str]) -> None:
    w = csv.writer(stream)
    w.writerow(["runs", "trials", "score_std", "median_of_medians"])
    for row in rows:
        w.writerow([row.runs, row.trials, repr(row.score_std),
                    repr(row.median_of_medians)])


def read_variance_csv(stream: IO[str]) -> list[VarianceRow]:
    r = csv.reader(stream)
    if next(r) != ["runs", "trials", "score_std", "median_of_medians"]:
        raise ValueError("unrecognized variance CSV header")
    return [VarianceRow(int(a), int(b), float(c), float(d)) for a, b, c, d in r]


# ---------------------------------------------------------------------------
# Baseline policies

class NoopPolicy:
    """Holds lane and commanded speed (the ego starts at its 80 mph cap)."""

    other_agents = 0

    def begin_run(self, world: World, run_seed: int) -> None:
        pass

    def decide(self, world: World, vehicle_id: int) -> int:
        return 0


class RandomPolicy:
    """Uniform over the five actions, seeded per run."""

    other_agents = 0

    def __init__(self) -> None:
        self._rng = SplitMix64(0)

    def begin_run(self, world: World, run_seed: int) -> None:
        self._rng = SplitMix64(derive_seed(run_seed, _STREAM_BASELINE))

    def decide(self, world: World, vehicle_id: int) -> int:
        return self._rng.below(5)


class GreedyGapPolicy:
    """Deterministic rule: accelerate, and move toward the neighboring
    lane with the longest run of free cells ahead of the nose (switch
    only when it beats the current lane by > 2 cells)."""

    other_agents = 0
    SWITCH_MARGIN = 2

    def begin_run(self, world: World, run_seed: int) -> None:
        pass

    def _gap_ahead(self, grid: np.ndarray, lane: int, nose_row: int) -> int:
        if lane < 0 or lane >= LANES:
            return -1
        free = 0
        for r in range(nose_row - 1, -1, -1):
            if grid[lane, r] != 0.0:
                break
            free += 1
        return free

    def decide(self, world: World, vehicle_id: int) -> int:
        core = world.core
        core.refresh_speeds()
        grid = np.zeros((LANES, ROWS))
        core.fill_grid(grid)
        lane = core.nearest_lane(vehicle_id)
        nose_row = int(math.floor(core.pos_y(vehicle_id) / CELL))
        here = self._gap_ahead(grid, lane, nose_row)
        left = self._gap_ahead(grid, lane - 1, nose_row)
        right = self._gap_ahead(grid, lane + 1, nose_row)
        best = max(left, right)
        if best > here + self.SWITCH_MARGIN:
            return 3 if left >= right else 4
        return 1


_BASELINES = {"random": RandomPolicy, "noop": NoopPolicy, "greedy-gap": GreedyGapPolicy}


def baseline(name: str):
    try:
        return _BASELINES[name]()
    except KeyError:
        raise ValueError(f"unknown baseline {name!r}; expected one of "
                         f"{sorted(_BASELINES)}") from None


# ---------------------------------------------------------------------------
# Sweeps

@dataclass
class SweepPoint:
    index: int
    config: AgentConfig
    seed: int
    score: float | None
    parameter_count: int
    training_steps: int
    wall_time: float
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "config": self.config.to_json(),
            "seed": self.seed,
            "score": self.score,
            "parameter_count": self.parameter_count,
            "training_steps": self.training_steps,
            "wall_time": self.wall_time,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SweepPoint":
        return cls(index=doc["index"], config=AgentConfig.from_json(doc["config"]),
                   seed=doc["seed"], score=doc["score"],
                   parameter_count=doc["parameter_count"],
                   training_steps=doc["training_steps"], wall_time=doc["wall_time"],
                   error=doc.get("error"))


def expand_grid(base: AgentConfig, grid: dict[str, list], seeds: Sequence[int]) -> list[tuple[AgentConfig, int]]:
    """Cartesian product of per-field value lists (canonical JSON names)
    crossed with seeds, in deterministic order."""
    doc = base.to_json()
    keys = sorted(grid)
    combos: list[dict] = [dict(doc)]
    for key in keys:
        combos = [{**c, key: v} for c in combos for v in grid[key]]
    return [(AgentConfig.from_json(c), s) for c in combos for s in seeds]


def sweep(points: Sequence[tuple[AgentConfig, int]], world_cfg: WorldConfig,
          train_steps: int, eval_runs: int, eval_steps: int,
          journal_path: str | None = None, budget: int | None = None,
          workers: int = 1) -> list[SweepPoint]:
    """Train + evaluate each (config, seed) point; a JSONL journal makes
    the sweep resumable, and replaying a finished journal reproduces the
    same points because every point is fully seed-determined."""
    if budget is not None:
        points = points[:budget]
    done: dict[int, SweepPoint] = {}
    if journal_path and os.path.exists(journal_path):
        with open(journal_path) as f:
            for line in f:
                if line.strip():
                    point = SweepPoint.from_json(json.loads(line))
                    done[point.index] = point
    journal = open(journal_path, "a") if journal_path else None
    results: list[SweepPoint] = []
    try:
        for index, (cfg, seed) in enumerate(points):
            if index in done:
                results.append(done[index])
                continue
            t0 = time.monotonic()
            error = None
            score = None
            try:
                report, net = train(cfg, world_cfg, train_steps, seed)
                if report.diverged_at is not None:
                    error = f"diverged at decision {report.diverged_at}"
                else:
                    policy = DqnPolicy(cfg, net)
                    rep = evaluate(policy, world_cfg, eval_runs, eval_steps,
                                   base_seed=derive_seed(seed, _STREAM_SWEEP_EVAL),
                                   workers=workers)
                    score = rep.median_score
                pcount = net.parameter_count
            except Exception as e:  # per-point failures must not kill the sweep
                error = f"{type(e).__name__}: {e}"
                pcount = 0
            point = SweepPoint(index=index, config=cfg, seed=seed, score=score,
                               parameter_count=pcount, training_steps=train_steps,
                               wall_time=time.monotonic() - t0, error=error)
            results.append(point)
            if journal is not None:
                journal.write(json.dumps(point.to_json()) + "\n")
                journal.flush()
    finally:
        if journal is not None:
            journal.close()
    return results


def evaluate_network(cfg: AgentConfig, net: QNetwork, world_cfg: WorldConfig,
                     runs: int, steps_per_run: int, base_seed: int,
                     workers: int = 1) -> EvaluationReport:
    """Evaluate a trained network under the standard protocol."""
    return evaluate(DqnPolicy(cfg, net), world_cfg, runs, steps_per_run,
                    base_seed, workers)
