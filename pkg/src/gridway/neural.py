"""From-scratch fully-connected value network.

Forward pass, masked squared-error loss, backprop, and classical
momentum SGD with L2 decay -- everything the Q-learner needs, in
float64 numpy.  No autograd, no external ML dependency; gradients are
verified against central finite differences in the test suite.

A layer spec is an ordered list of (width, activation) pairs; the first
entry fixes the input width (its activation tag is ignored) and the
last must be linear (regression head).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .rng import SplitMix64

LayerSpec = Sequence[tuple[int, str]]

ACTIVATIONS = ("linear", "relu", "sigmoid", "tanh")

CHECKPOINT_FORMAT = "qnet-json"
CHECKPOINT_VERSION = 1


class DivergenceError(RuntimeError):
    """Raised when a training step produces a non-finite loss or weights."""

    def __init__(self, message: str, loss: float | None = None):
        super().__init__(message)
        self.loss = loss


def validate_layers(spec: LayerSpec) -> None:
    if len(spec) < 2:
        raise ValueError("layer spec needs at least input and output entries")
    for width, act in spec:
        if width < 1:
            raise ValueError("layer widths must be >= 1")
        if act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {act!r}")
    if spec[-1][1] != "linear":
        raise ValueError("output layer must be linear")


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "linear":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {name!r}")


def _activation_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """d(activation)/d(pre-activation), from pre-activation z or output a."""
    if name == "linear":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class TrainerOpts:
    learning_rate: float = 0.001
    momentum: float = 0.0
    l2_decay: float = 0.0
    batch_size: int = 64

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.l2_decay < 0:
            raise ValueError("l2_decay must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class QNetwork:
    spec: list[tuple[int, str]]
    weights: list[np.ndarray]  # per layer, shape (fan_out, fan_in)
    biases: list[np.ndarray]
    vel_w: list[np.ndarray] = field(default_factory=list)
    vel_b: list[np.ndarray] = field(default_factory=list)

    @property
    def input_width(self) -> int:
        return self.spec[0][0]

    @property
    def output_width(self) -> int:
        return self.spec[-1][0]

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def clone(self) -> "QNetwork":
        """Weight snapshot for concurrent evaluation; optimizer state not copied."""
        return QNetwork(list(self.spec),
                        [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])

    def _ensure_velocity(self) -> None:
        if not self.vel_w:
            self.vel_w = [np.zeros_like(w) for w in self.weights]
            self.vel_b = [np.zeros_like(b) for b in self.biases]


def init_network(spec: LayerSpec, seed: int) -> QNetwork:
    """Uniform(-sqrt(6/(fan_in+fan_out)), +...) weights, zero biases."""
    validate_layers(spec)
    rng = SplitMix64(seed)
    weights = []
    biases = []
    for (fan_in, _), (fan_out, _) in zip(spec[:-1], spec[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = np.empty((fan_out, fan_in))
        flat = w.reshape(-1)
        for k in range(flat.size):
            flat[k] = (2.0 * rng.uniform() - 1.0) * limit
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return QNetwork([tuple(e) for e in spec], weights, biases)


def forward(net: QNetwork, x: np.ndarray) -> np.ndarray:
    """Q-values for a single input vector.  Pure."""
    a = np.asarray(x, dtype=float)
    if a.shape != (net.input_width,):
        raise ValueError(f"input length {a.shape} != {net.input_width}")
    for (_, act), w, b in zip(net.spec[1:], net.weights, net.biases):
        a = _apply_activation(act, w @ a + b)
    return a


def forward_batch(net: QNetwork, xs: np.ndarray) -> np.ndarray:
    a = np.asarray(xs, dtype=float)
    for (_, act), w, b in zip(net.spec[1:], net.weights, net.biases):
        a = _apply_activation(act, a @ w.T + b)
    return a


def _forward_cached(net: QNetwork, xs: np.ndarray):
    """Activations and pre-activations per layer, for backprop."""
    acts = [xs]
    pres = []
    a = xs
    for (_, act), w, b in zip(net.spec[1:], net.weights, net.biases):
        z = a @ w.T + b
        a = _apply_activation(act, z)
        pres.append(z)
        acts.append(a)
    return acts, pres


def gradients(net: QNetwork, xs: np.ndarray, targets: np.ndarray,
              mask: np.ndarray) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean masked half-squared-error loss and its gradient (no L2 term)."""
    acts, pres = _forward_cached(net, xs)
    out = acts[-1]
    n = xs.shape[0]
    err = (out - targets) * mask
    loss = float(0.5 * np.sum(err * err) / n)
    delta = err / n
    grads_w: list[np.ndarray] = [None] * len(net.weights)  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * len(net.biases)  # type: ignore[list-item]
    for layer in range(len(net.weights) - 1, -1, -1):
        grads_w[layer] = delta.T @ acts[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            act_name = net.spec[layer][1]
            delta = (delta @ net.weights[layer]) * _activation_grad(
                act_name, pres[layer - 1], acts[layer])
    return loss, grads_w, grads_b


def train_batch(net: QNetwork,
                batch: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]],
                opts: TrainerOpts) -> float:
    """One momentum-SGD step on a batch of (input, target_q, action_mask).

    Returns the pre-step mean loss.  A non-finite loss aborts before any
    weight is touched.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    xs = np.stack([np.asarray(s, dtype=float) for s, _, _ in batch])
    targets = np.stack([np.asarray(t, dtype=float) for _, t, _ in batch])
    mask = np.stack([np.asarray(m, dtype=float) for _, _, m in batch])
    return train_arrays(net, xs, targets, mask, opts)


def train_arrays(net: QNetwork, xs: np.ndarray, targets: np.ndarray,
                 mask: np.ndarray, opts: TrainerOpts) -> float:
    # Stage the whole update and only commit if every value stays finite,
    # so a diverging step leaves the last-good weights in place (they may
    # still be checkpointed).  Overflow inside a step is reported through
    # DivergenceError; the numpy warnings would be redundant noise.
    with np.errstate(over="ignore", invalid="ignore"):
        loss, grads_w, grads_b = gradients(net, xs, targets, mask)
        if not np.isfinite(loss):
            raise DivergenceError("non-finite training loss", loss)
        net._ensure_velocity()
        lr = opts.learning_rate
        mu = opts.momentum
        staged = []
        for layer in range(len(net.weights)):
            gw = grads_w[layer]
            if opts.l2_decay:
                gw = gw + opts.l2_decay * net.weights[layer]  # weights only, not biases
            vw = net.vel_w[layer] * mu
            vw -= lr * gw
            vb = net.vel_b[layer] * mu
            vb -= lr * grads_b[layer]
            w = net.weights[layer] + vw
            b = net.biases[layer] + vb
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise DivergenceError("non-finite weights after update", loss)
            staged.append((vw, vb, w, b))
    for layer, (vw, vb, w, b) in enumerate(staged):
        net.vel_w[layer] = vw
        net.vel_b[layer] = vb
        net.weights[layer] = w
        net.biases[layer] = b
    return loss


# ---------------------------------------------------------------------------
# Checkpoints: JSON container, bit-exact for finite float64 values (Python's
# float repr is shortest-round-trip).

def checkpoint_dict(net: QNetwork) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layers": [{"width": w, "activation": a} for w, a in net.spec],
        "weights": [w.reshape(-1).tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def network_from_dict(doc: dict) -> QNetwork:
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a network checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    spec = [(int(e["width"]), str(e["activation"])) for e in doc["layers"]]
    validate_layers(spec)
    weights = []
    biases = []
    for (fan_in, _), (fan_out, _), wflat, b in zip(spec[:-1], spec[1:],
                                                   doc["weights"], doc["biases"]):
        w = np.asarray(wflat, dtype=float)
        if w.size != fan_in * fan_out or len(b) != fan_out:
            raise ValueError("checkpoint arrays do not match the layer spec")
        weights.append(w.reshape(fan_out, fan_in))
        biases.append(np.asarray(b, dtype=float))
    return QNetwork(spec, weights, biases)


def save_checkpoint(net: QNetwork, stream: IO[str]) -> None:
    json.dump(checkpoint_dict(net), stream, allow_nan=False)


def load_checkpoint(stream: IO[str]) -> QNetwork:
    return network_from_dict(json.load(stream))
