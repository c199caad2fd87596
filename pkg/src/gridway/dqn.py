"""Deep Q-learning with experience replay and epsilon-greedy exploration.

The learner couples the from-scratch value network to the highway world:
observe a sensor slice, pick an action (annealed epsilon-greedy), collect
the speed reward, store the transition, and fit sampled minibatches
toward the Bellman target computed with the current weights (no separate
target network; the task is continuing, so there is no terminal case).

AgentConfig's canonical JSON uses the hyperparameter names competitors
type into the original playground (``patchesAhead``, ``lanesSide``,
``epsilon_test_time``, flattened ``gamma`` ...), including the historical
``learning_steps_burning`` spelling, which is accepted and emitted;
``learning_steps_burnin`` is accepted as an input alias.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .neural import (DivergenceError, QNetwork, TrainerOpts, forward,
                     forward_batch, init_network, train_arrays, validate_layers)
from .perception import ACTION_COUNT, HistoryRing, SensorConfig, input_size, observe
from .rng import SplitMix64, derive_seed
from .sim.world import World, WorldConfig, new_world

SPEED_NORM = 80.0

# Seed stream ids: keep world/raw-weights/exploration draws independent.
_STREAM_WORLD = 0
_STREAM_INIT = 1
_STREAM_EXPLORE = 2
_STREAM_EVAL = 3


class ConfigError(ValueError):
    """Config rejection carrying the dotted path of the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


@dataclass
class AgentConfig:
    sensor: SensorConfig = field(default_factory=SensorConfig)
    layers: list[tuple[int, str]] = field(default_factory=lambda: [(48, "relu"), (24, "relu")])
    trainer: TrainerOpts = field(default_factory=TrainerOpts)
    gamma: float = 0.9
    experience_size: int = 10000
    epsilon_min: float = 0.05
    epsilon_test: float = 0.0
    learning_steps_total: int = 25000
    start_learning_threshold: int = 500
    learning_steps_burnin: int = 1000
    other_agents: int = 0

    def validate(self) -> None:
        try:
            self.sensor.validate()
        except ValueError as e:
            raise ConfigError(_sensor_path(str(e)), str(e)) from e
        try:
            validate_layers(self.layer_spec())
        except ValueError as e:
            raise ConfigError("layers", str(e)) from e
        try:
            self.trainer.validate()
        except ValueError as e:
            raise ConfigError(_trainer_path(str(e)), str(e)) from e
        if not 0 <= self.gamma < 1:
            raise ConfigError("gamma", "must be in [0, 1)")
        if self.experience_size < 1:
            raise ConfigError("experience_size", "must be >= 1")
        if not 0 <= self.epsilon_min <= 1:
            raise ConfigError("epsilon_min", "must be in [0, 1]")
        if not 0 <= self.epsilon_test <= 1:
            raise ConfigError("epsilon_test_time", "must be in [0, 1]")
        if self.learning_steps_total < 0:
            raise ConfigError("learning_steps_total", "must be >= 0")
        if self.learning_steps_burnin > self.learning_steps_total:
            raise ConfigError("learning_steps_burning",
                              "burnin must not exceed learning_steps_total")
        if self.start_learning_threshold > self.experience_size:
            raise ConfigError("start_learning_threshold",
                              "must not exceed experience_size")
        if self.other_agents < 0:
            raise ConfigError("other_agents", "must be >= 0")
        if self.other_agents > 10:
            raise ConfigError("other_agents", "at most 10 clone agents fit the road")

    def layer_spec(self) -> list[tuple[int, str]]:
        inp = input_size(self.sensor, ACTION_COUNT)
        return [(inp, "linear")] + list(self.layers) + [(ACTION_COUNT, "linear")]

    def to_json(self) -> dict:
        return {
            "lanesSide": self.sensor.lanes_side,
            "patchesAhead": self.sensor.patches_ahead,
            "patchesBehind": self.sensor.patches_behind,
            "temporal_window": self.sensor.temporal_window,
            "other_agents": self.other_agents,
            "layers": [{"num_neurons": n, "activation": a} for n, a in self.layers],
            "learning_rate": self.trainer.learning_rate,
            "momentum": self.trainer.momentum,
            "batch_size": self.trainer.batch_size,
            "l2_decay": self.trainer.l2_decay,
            "gamma": self.gamma,
            "experience_size": self.experience_size,
            "epsilon_min": self.epsilon_min,
            "epsilon_test_time": self.epsilon_test,
            "learning_steps_total": self.learning_steps_total,
            "start_learning_threshold": self.start_learning_threshold,
            "learning_steps_burning": self.learning_steps_burnin,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AgentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("", "config must be a JSON object")
        known = {"lanesSide", "patchesAhead", "patchesBehind", "temporal_window",
                 "other_agents", "layers", "learning_rate", "momentum", "batch_size",
                 "l2_decay", "gamma", "experience_size", "epsilon_min",
                 "epsilon_test_time", "epsilon_test", "learning_steps_total",
                 "start_learning_threshold", "learning_steps_burning",
                 "learning_steps_burnin"}
        for key in doc:
            if key not in known:
                raise ConfigError(key, "unknown field")
        base = cls()
        sensor = SensorConfig(
            lanes_side=_get_int(doc, "lanesSide", base.sensor.lanes_side),
            patches_ahead=_get_int(doc, "patchesAhead", base.sensor.patches_ahead),
            patches_behind=_get_int(doc, "patchesBehind", base.sensor.patches_behind),
            temporal_window=_get_int(doc, "temporal_window", base.sensor.temporal_window),
        )
        layers = base.layers
        if "layers" in doc:
            raw = doc["layers"]
            if not isinstance(raw, list):
                raise ConfigError("layers", "must be an array")
            layers = []
            for i, entry in enumerate(raw):
                if not isinstance(entry, dict) or "num_neurons" not in entry:
                    raise ConfigError(f"layers[{i}]", "expected {num_neurons, activation}")
                n = entry["num_neurons"]
                if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                    raise ConfigError(f"layers[{i}].num_neurons", "must be a positive integer")
                act = entry.get("activation", "relu")
                layers.append((n, str(act)))
        trainer = TrainerOpts(
            learning_rate=_get_num(doc, "learning_rate", base.trainer.learning_rate),
            momentum=_get_num(doc, "momentum", base.trainer.momentum),
            l2_decay=_get_num(doc, "l2_decay", base.trainer.l2_decay),
            batch_size=_get_int(doc, "batch_size", base.trainer.batch_size),
        )
        if "learning_steps_burning" in doc and "learning_steps_burnin" in doc:
            raise ConfigError("learning_steps_burnin",
                              "give burnin under one spelling, not both")
        burnin = _get_int(doc, "learning_steps_burning",
                          _get_int(doc, "learning_steps_burnin", base.learning_steps_burnin))
        if "epsilon_test_time" in doc and "epsilon_test" in doc:
            raise ConfigError("epsilon_test", "give test epsilon under one name, not both")
        eps_test = _get_num(doc, "epsilon_test_time",
                            _get_num(doc, "epsilon_test", base.epsilon_test))
        cfg = cls(
            sensor=sensor,
            layers=layers,
            trainer=trainer,
            gamma=_get_num(doc, "gamma", base.gamma),
            experience_size=_get_int(doc, "experience_size", base.experience_size),
            epsilon_min=_get_num(doc, "epsilon_min", base.epsilon_min),
            epsilon_test=eps_test,
            learning_steps_total=_get_int(doc, "learning_steps_total", base.learning_steps_total),
            start_learning_threshold=_get_int(doc, "start_learning_threshold",
                                              base.start_learning_threshold),
            learning_steps_burnin=burnin,
            other_agents=_get_int(doc, "other_agents", base.other_agents),
        )
        cfg.validate()
        return cfg


def _get_int(doc: dict, key: str, default: int) -> int:
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, "must be an integer")
    return v


def _get_num(doc: dict, key: str, default: float) -> float:
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, "must be a number")
    return float(v)


_SENSOR_FIELDS = {"lanes_side": "sensor.lanes_side", "patches_ahead": "sensor.patches_ahead",
                  "patches_behind": "sensor.patches_behind",
                  "temporal_window": "sensor.temporal_window",
                  "window": "sensor.patches_ahead"}
_TRAINER_FIELDS = {"learning_rate": "trainer.learning_rate", "momentum": "trainer.momentum",
                   "l2_decay": "trainer.l2_decay", "batch_size": "trainer.batch_size"}


def _sensor_path(message: str) -> str:
    for name, path in _SENSOR_FIELDS.items():
        if name in message:
            return path
    return "sensor"


def _trainer_path(message: str) -> str:
    for name, path in _TRAINER_FIELDS.items():
        if name in message:
            return path
    return "trainer"


# ---------------------------------------------------------------------------
# Replay memory

class ReplayMemory:
    """Ring buffer of (s, a, r, s_next); uniform sampling with replacement."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf: list[tuple[np.ndarray, int, float, np.ndarray]] = []
        self._next = 0
        self.inserted = 0

    def __len__(self) -> int:
        return len(self._buf)

    def add(self, s: np.ndarray, a: int, r: float, s_next: np.ndarray) -> None:
        if not np.isfinite(r):
            raise ValueError("non-finite reward")
        item = (s, a, r, s_next)
        if len(self._buf) < self.capacity:
            self._buf.append(item)
        else:
            self._buf[self._next] = item  # oldest-first eviction
        self._next = (self._next + 1) % self.capacity
        self.inserted += 1

    def sample_indices(self, count: int, rng: SplitMix64) -> list[int]:
        return [rng.below(len(self._buf)) for _ in range(count)]

    def get(self, idx: int) -> tuple[np.ndarray, int, float, np.ndarray]:
        return self._buf[idx]


# ---------------------------------------------------------------------------
# Learner

def epsilon_at(t: int, cfg: AgentConfig) -> float:
    """1.0 through burnin, linear to epsilon_min at learning_steps_total."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t < cfg.learning_steps_burnin:
        return 1.0
    if t >= cfg.learning_steps_total:
        return cfg.epsilon_min
    span = cfg.learning_steps_total - cfg.learning_steps_burnin
    if span == 0:
        return cfg.epsilon_min
    frac = (t - cfg.learning_steps_burnin) / span
    return 1.0 + frac * (cfg.epsilon_min - 1.0)


def bellman_target(r: float, gamma: float, q_next: np.ndarray) -> float:
    """r + gamma * max Q(s'); no terminal case (the task is continuing)."""
    return r + gamma * float(np.max(q_next))


def greedy_action(net: QNetwork, state: np.ndarray) -> int:
    return int(np.argmax(forward(net, state)))  # argmax takes the lowest index on ties


class DqnLearner:
    """Owns the network, replay memory, and exploration state.

    ``action_count``/``net`` can be overridden to drive synthetic MDPs in
    tests; the highway loop uses the config-derived shapes.
    """

    def __init__(self, cfg: AgentConfig, seed: int,
                 net: QNetwork | None = None, action_count: int = ACTION_COUNT):
        self.cfg = cfg
        self.action_count = action_count
        self.net = net if net is not None else init_network(
            cfg.layer_spec(), derive_seed(seed, _STREAM_INIT))
        self.replay = ReplayMemory(cfg.experience_size)
        self.rng = SplitMix64(derive_seed(seed, _STREAM_EXPLORE))
        self.step = 0  # learning-schedule clock: one tick per decision
        self.last_loss: float | None = None

    def tick(self) -> None:
        self.step += 1

    def epsilon(self, mode: str = "train") -> float:
        if mode == "eval":
            return self.cfg.epsilon_test
        return epsilon_at(self.step, self.cfg)

    def act(self, state: np.ndarray, mode: str = "train") -> int:
        eps = self.epsilon(mode)
        if eps > 0.0 and self.rng.uniform() < eps:
            return self.rng.below(self.action_count)
        return greedy_action(self.net, state)

    def observe_transition(self, s: np.ndarray, a: int, r: float, s_next: np.ndarray) -> None:
        self.replay.add(s, a, r, s_next)

    def learn_step(self) -> float | None:
        """One minibatch update if the schedule allows; returns the loss.

        Does not advance the schedule clock -- the driving loop calls
        tick() once per decision.
        """
        cfg = self.cfg
        t = self.step
        if t < cfg.learning_steps_burnin or t >= cfg.learning_steps_total:
            return None
        if len(self.replay) < cfg.start_learning_threshold:
            return None
        n = cfg.trainer.batch_size
        idx = self.replay.sample_indices(n, self.rng)
        dim = self.net.input_width
        xs = np.empty((n, dim))
        xs_next = np.empty((n, dim))
        acts = np.empty(n, dtype=int)
        rewards = np.empty(n)
        for row, i in enumerate(idx):
            s, a, r, s_next = self.replay.get(i)
            xs[row] = s
            xs_next[row] = s_next
            acts[row] = a
            rewards[row] = r
        q_next = forward_batch(self.net, xs_next)
        targets = np.zeros((n, self.action_count))
        mask = np.zeros((n, self.action_count))
        rows = np.arange(n)
        targets[rows, acts] = rewards + cfg.gamma * q_next.max(axis=1)
        mask[rows, acts] = 1.0
        loss = train_arrays(self.net, xs, targets, mask, cfg.trainer)
        self.last_loss = loss
        return loss


# ---------------------------------------------------------------------------
# Training loop over the highway world

@dataclass
class TrainReport:
    steps: int
    seed: int
    decisions: int
    loss_curve: list[tuple[int, float]]
    epsilon_curve: list[tuple[int, float]]
    reward_curve: list[tuple[int, float]]
    wall_time: float
    diverged_at: int | None = None

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "seed": self.seed,
            "decisions": self.decisions,
            "wall_time": self.wall_time,
            "diverged_at": self.diverged_at,
            "loss_curve": [[t, v] for t, v in self.loss_curve],
            "epsilon_curve": [[t, v] for t, v in self.epsilon_curve],
            "reward_curve": [[t, v] for t, v in self.reward_curve],
        }

    def write_curves_csv(self, stream: IO[str]) -> None:
        """One row per decision, keyed by schedule step.  Cells are empty
        where the series has no value yet (reward on the first row, loss
        until learning starts)."""
        w = csv.writer(stream)
        w.writerow(["step", "epsilon", "smoothed_reward", "loss"])
        losses = dict(self.loss_curve)
        rewards = dict(self.reward_curve)
        for t, eps in self.epsilon_curve:
            rew = rewards.get(t)
            loss = losses.get(t)
            w.writerow([t, repr(eps),
                        "" if rew is None else repr(rew),
                        "" if loss is None else repr(loss)])


def read_curves_csv(stream: IO[str]) -> TrainReport:
    """Inverse of write_curves_csv for the curve columns only."""
    r = csv.reader(stream)
    header = next(r)
    if header != ["step", "epsilon", "smoothed_reward", "loss"]:
        raise ValueError("unrecognized curve CSV header")
    loss_curve = []
    epsilon_curve = []
    reward_curve = []
    for row in r:
        t = int(row[0])
        epsilon_curve.append((t, float(row[1])))
        if row[2] != "":
            reward_curve.append((t, float(row[2])))
        if row[3] != "":
            loss_curve.append((t, float(row[3])))
    return TrainReport(steps=0, seed=0, decisions=len(epsilon_curve),
                       loss_curve=loss_curve, epsilon_curve=epsilon_curve,
                       reward_curve=reward_curve, wall_time=0.0)


class _CarDriver:
    """Per-car sensing state (history ring) for the ego and each clone."""

    def __init__(self, vid: int, sensor: SensorConfig):
        self.vid = vid
        self.history = HistoryRing(sensor)
        self.last_slice: np.ndarray | None = None
        self.last_action = 0


def train(agent_cfg: AgentConfig, world_cfg: WorldConfig, steps: int, seed: int,
          net: QNetwork | None = None,
          progress: "ProgressSink | None" = None) -> tuple[TrainReport, QNetwork]:
    """Env-act-store-learn loop for `steps` simulation frames.

    The ego acts and learns once per decision cycle; clone cars act
    greedily with the shared (training) weights and contribute no
    experiences.  Reward per decision is the ego's mean effective speed
    over the cycle, normalized by 80.
    """
    agent_cfg.validate()
    t0 = time.monotonic()
    wcfg = WorldConfig(**{**world_cfg.__dict__, "agent_clone_count": agent_cfg.other_agents})
    world = new_world(wcfg, derive_seed(seed, _STREAM_WORLD))
    learner = DqnLearner(agent_cfg, seed, net=net)
    sensor = agent_cfg.sensor
    ego = _CarDriver(world.ego_id, sensor)
    clones = [_CarDriver(vid, sensor) for vid in world.red_ids() if vid != world.ego_id]
    red_sum = np.zeros(1 + len(clones))

    loss_curve: list[tuple[int, float]] = []
    epsilon_curve: list[tuple[int, float]] = []
    reward_curve: list[tuple[int, float]] = []
    smoothed = None
    diverged_at = None
    last_r = None
    decisions = 0
    period = world.decision_period

    frames_left = steps
    while frames_left > 0:
        s = observe(world, sensor, ego.history)
        if ego.last_slice is not None and last_r is not None:
            learner.observe_transition(ego.last_slice, ego.last_action, last_r, s)
            smoothed = last_r if smoothed is None else 0.99 * smoothed + 0.01 * last_r
            reward_curve.append((decisions, smoothed))
            try:
                loss = learner.learn_step()
            except DivergenceError:
                diverged_at = decisions
                break
            if loss is not None:
                loss_curve.append((decisions, loss))
        epsilon_curve.append((decisions, learner.epsilon("train")))
        a = learner.act(s, "train")
        world.apply_action(ego.vid, a)
        if sensor.temporal_window:
            ego.history.push(s, a)
        ego.last_slice = s
        ego.last_action = a
        for clone in clones:
            cs = observe(world, sensor, clone.history, clone.vid)
            ca = greedy_action(learner.net, cs)
            world.apply_action(clone.vid, ca)
            if sensor.temporal_window:
                clone.history.push(cs, ca)
        learner.tick()
        decisions += 1

        block = period if period < frames_left else frames_left
        red_sum[:] = 0.0
        if progress is None:
            world.step_block(block, red_sum)
        else:
            # same arithmetic as step_block, one frame at a time
            for _ in range(block):
                world.decide_ambient()
                outcome = world.step()
                red_sum[0] += outcome.ego_speed_mph
                progress.emit(world, outcome, learner, smoothed)
        last_r = float(red_sum[0]) / block / SPEED_NORM
        frames_left -= block

    report = TrainReport(steps=steps, seed=seed, decisions=decisions,
                         loss_curve=loss_curve, epsilon_curve=epsilon_curve,
                         reward_curve=reward_curve,
                         wall_time=time.monotonic() - t0,
                         diverged_at=diverged_at)
    return report, learner.net


class ProgressSink:
    """Never-blocking progress taps for the service layer (latest-wins)."""

    def emit(self, world: World, outcome, learner: DqnLearner,
             smoothed_reward: float | None) -> None:  # pragma: no cover - interface
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Evaluation-mode policy

class DqnPolicy:
    """Drives every red car greedily from a fixed network snapshot."""

    def __init__(self, cfg: AgentConfig, net: QNetwork):
        self.cfg = cfg
        self.net = net
        self._drivers: dict[int, _CarDriver] = {}
        self._rng = SplitMix64(0)

    @property
    def other_agents(self) -> int:
        return self.cfg.other_agents

    def begin_run(self, world: World, run_seed: int) -> None:
        self._drivers = {vid: _CarDriver(vid, self.cfg.sensor) for vid in world.red_ids()}
        self._rng = SplitMix64(derive_seed(run_seed, _STREAM_EVAL))

    def decide(self, world: World, vid: int) -> int:
        driver = self._drivers[vid]
        s = observe(world, self.cfg.sensor, driver.history, vid)
        eps = self.cfg.epsilon_test
        if eps > 0.0 and self._rng.uniform() < eps:
            a = self._rng.below(ACTION_COUNT)
        else:
            a = greedy_action(self.net, s)
        if self.cfg.sensor.temporal_window:
            driver.history.push(s, a)
        return a


def agent_config_json_schema() -> dict:
    """Machine-readable schema for the canonical AgentConfig JSON."""
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "lanesSide": {"type": "integer", "minimum": 0, "maximum": 3},
            "patchesAhead": {"type": "integer", "minimum": 1, "maximum": 70},
            "patchesBehind": {"type": "integer", "minimum": 0, "maximum": 69},
            "temporal_window": {"type": "integer", "minimum": 0},
            "other_agents": {"type": "integer", "minimum": 0, "maximum": 10},
            "layers": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["num_neurons"],
                    "properties": {
                        "num_neurons": {"type": "integer", "minimum": 1},
                        "activation": {"enum": ["linear", "relu", "sigmoid", "tanh"]},
                    },
                },
            },
            "learning_rate": {"type": "number", "exclusiveMinimum": 0},
            "momentum": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "batch_size": {"type": "integer", "minimum": 1},
            "l2_decay": {"type": "number", "minimum": 0},
            "gamma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "experience_size": {"type": "integer", "minimum": 1},
            "epsilon_min": {"type": "number", "minimum": 0, "maximum": 1},
            "epsilon_test_time": {"type": "number", "minimum": 0, "maximum": 1},
            "learning_steps_total": {"type": "integer", "minimum": 0},
            "start_learning_threshold": {"type": "integer", "minimum": 0},
            "learning_steps_burning": {"type": "integer", "minimum": 0},
        },
    }


def load_agent_config(path: str) -> AgentConfig:
    with open(path) as f:
        return AgentConfig.from_json(json.load(f))
