"""Network math against finite differences and hand-worked updates."""
import io
import json
import math

import numpy as np
import pytest

from gridway.neural import (ACTIVATIONS, DivergenceError, QNetwork,
                            TrainerOpts, checkpoint_dict, forward,
                            forward_batch, gradients, init_network,
                            load_checkpoint, network_from_dict,
                            save_checkpoint, train_arrays, validate_layers)
from gridway.rng import SplitMix64

from oracles import numeric_gradients


def small_net(hidden_act, seed=5, dims=(4, 6, 5, 3)):
    spec = [(dims[0], "linear"), (dims[1], hidden_act), (dims[2], hidden_act),
            (dims[3], "linear")]
    return init_network(spec, seed)


def batch_for(net, seed=9, n=6):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-0.9, 0.9, size=(n, net.input_width))
    targets = rng.uniform(-1.0, 1.0, size=(n, net.output_width))
    mask = np.zeros_like(targets)
    mask[np.arange(n), rng.integers(0, net.output_width, size=n)] = 1.0
    return xs, targets, mask


# ---------------------------------------------------------------------------
# Structure

def test_validate_layers():
    validate_layers([(4, "linear"), (8, "relu"), (2, "linear")])
    with pytest.raises(ValueError):
        validate_layers([(4, "linear")])  # no output layer
    with pytest.raises(ValueError):
        validate_layers([(4, "linear"), (8, "relu"), (2, "tanh")])  # head must be linear
    with pytest.raises(ValueError):
        validate_layers([(0, "linear"), (2, "linear")])
    with pytest.raises(ValueError):
        validate_layers([(4, "linear"), (8, "swish"), (2, "linear")])


def test_trainer_opts_validation():
    TrainerOpts().validate()
    for bad in (TrainerOpts(learning_rate=0.0), TrainerOpts(momentum=1.5),
                TrainerOpts(l2_decay=-0.1), TrainerOpts(batch_size=0)):
        with pytest.raises(ValueError):
            bad.validate()


def test_parameter_count():
    net = small_net("relu")
    assert net.parameter_count == (4 * 6 + 6) + (6 * 5 + 5) + (5 * 3 + 3)


# ---------------------------------------------------------------------------
# Initialization

def test_xavier_bounds_and_determinism():
    net = init_network([(30, "linear"), (20, "tanh"), (4, "linear")], seed=77)
    again = init_network([(30, "linear"), (20, "tanh"), (4, "linear")], seed=77)
    other = init_network([(30, "linear"), (20, "tanh"), (4, "linear")], seed=78)
    for w, w2, (fan_out, fan_in) in zip(net.weights, again.weights,
                                        [(20, 30), (4, 20)]):
        assert w.shape == (fan_out, fan_in)
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        assert np.all(np.abs(w) <= limit)
        assert abs(w.mean()) < limit / 4
        assert np.array_equal(w, w2)
    assert not np.array_equal(net.weights[0], other.weights[0])
    for b in net.biases:
        assert np.all(b == 0.0)


# ---------------------------------------------------------------------------
# Forward / gradients

def test_forward_batch_matches_single_rows():
    net = small_net("sigmoid")
    xs, _, _ = batch_for(net)
    stacked = forward_batch(net, xs)
    for row, x in zip(stacked, xs):
        # matrix-matrix and matrix-vector products may round differently
        assert np.allclose(row, forward(net, x), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("act", ACTIVATIONS)
def test_gradients_match_finite_differences(act):
    net = small_net(act)
    xs, targets, mask = batch_for(net)

    def loss_fn():
        out = forward_batch(net, xs)
        err = (out - targets) * mask
        return 0.5 * float((err * err).sum()) / xs.shape[0]

    loss, grads_w, grads_b = gradients(net, xs, targets, mask)
    assert loss == pytest.approx(loss_fn())
    want = numeric_gradients(loss_fn, net.weights + net.biases)
    got = grads_w + grads_b
    worst = 0.0
    for g, w in zip(got, want):
        denom = np.maximum(np.abs(g) + np.abs(w), 1e-8)
        worst = max(worst, float(np.abs(g - w).max() / denom.max()))
        assert np.allclose(g, w, atol=1e-7, rtol=1e-5)
    assert worst < 1e-4


def test_masked_entries_only():
    net = small_net("relu")
    xs, targets, mask = batch_for(net)
    wild = targets + 1000.0 * (1.0 - mask)  # junk outside the mask
    a = gradients(net, xs, targets, mask)
    b = gradients(net, xs, wild, mask)
    assert a[0] == b[0]
    for ga, gb in zip(a[1], b[1]):
        assert np.array_equal(ga, gb)


# ---------------------------------------------------------------------------
# Updates

def test_sgd_step_formula():
    net = small_net("tanh")
    xs, targets, mask = batch_for(net)
    opts = TrainerOpts(learning_rate=0.01, momentum=0.0, l2_decay=0.0)
    _, gw, gb = gradients(net, xs, targets, mask)
    before_w = [w.copy() for w in net.weights]
    before_b = [b.copy() for b in net.biases]
    train_arrays(net, xs, targets, mask, opts)
    for w, w0, g in zip(net.weights, before_w, gw):
        assert np.allclose(w, w0 - 0.01 * g, atol=0, rtol=0)
    for b, b0, g in zip(net.biases, before_b, gb):
        assert np.allclose(b, b0 - 0.01 * g, atol=0, rtol=0)


def test_classical_momentum_accumulates():
    net = small_net("tanh")
    xs, targets, mask = batch_for(net)
    opts = TrainerOpts(learning_rate=0.01, momentum=0.9)
    # replay the same batch twice by hand
    _, g1, _ = gradients(net, xs, targets, mask)
    w0 = [w.copy() for w in net.weights]
    train_arrays(net, xs, targets, mask, opts)
    v1 = [-0.01 * g for g in g1]
    for w, base, v in zip(net.weights, w0, v1):
        assert np.allclose(w, base + v, atol=0, rtol=0)
    _, g2, _ = gradients(net, xs, targets, mask)
    w1 = [w.copy() for w in net.weights]
    train_arrays(net, xs, targets, mask, opts)
    for w, base, v, g in zip(net.weights, w1, v1, g2):
        assert np.allclose(w, base + 0.9 * v - 0.01 * g, atol=1e-15)


def test_l2_decay_touches_weights_not_biases():
    net = small_net("relu")
    xs = np.zeros((2, net.input_width))
    targets = np.zeros((2, net.output_width))
    mask = np.zeros_like(targets)  # no error signal at all
    opts = TrainerOpts(learning_rate=0.1, l2_decay=0.01)
    w0 = [w.copy() for w in net.weights]
    b0 = [b.copy() for b in net.biases]
    train_arrays(net, xs, targets, mask, opts)
    for w, base in zip(net.weights, w0):
        assert np.allclose(w, base * (1.0 - 0.1 * 0.01), atol=0, rtol=0)
    for b, base in zip(net.biases, b0):
        assert np.array_equal(b, base)


def test_divergence_aborts_before_corrupting():
    net = small_net("relu")
    xs, targets, mask = batch_for(net)
    targets = targets * 1e200
    opts = TrainerOpts(learning_rate=1e300)
    with pytest.raises(DivergenceError):
        for _ in range(50):
            train_arrays(net, xs, targets, mask, opts)
    for w in net.weights:
        assert np.all(np.isfinite(w))


# ---------------------------------------------------------------------------
# Checkpoints

def test_checkpoint_round_trip_bit_exact():
    net = small_net("sigmoid", seed=31)
    xs, targets, mask = batch_for(net)
    train_arrays(net, xs, targets, mask, TrainerOpts())
    buf = io.StringIO()
    save_checkpoint(net, buf)
    twin = load_checkpoint(io.StringIO(buf.getvalue()))
    assert twin.spec == net.spec
    for a, b in zip(net.weights + net.biases, twin.weights + twin.biases):
        assert np.array_equal(a, b)
    x = np.linspace(-1, 1, net.input_width)
    assert np.array_equal(forward(net, x), forward(twin, x))
    # serialization is stable byte for byte
    buf2 = io.StringIO()
    save_checkpoint(twin, buf2)
    assert buf.getvalue() == buf2.getvalue()


def test_checkpoint_rejects_junk():
    with pytest.raises(ValueError):
        network_from_dict({"format": "something-else"})
    net = small_net("relu")
    doc = checkpoint_dict(net)
    doc["weights"][0] = doc["weights"][0][:-1]
    with pytest.raises(ValueError):
        network_from_dict(doc)


def test_checkpoint_has_no_nan_path():
    net = small_net("relu")
    net.weights[0][0, 0] = float("nan")
    with pytest.raises(ValueError):
        save_checkpoint(net, io.StringIO())
