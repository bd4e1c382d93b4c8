import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsa_marl.neuralnet import QNetwork, gradient_check, one_hot, random_check_case

# layer sizes (2, 1, 2): W1 = [[0.5, 2.0]], b1 = [0.25], W2 = [[1], [2]], b2 = [0, -1]
TINY = QNetwork((2, 1, 2), np.array([0.5, 2.0, 0.25, 1.0, 2.0, 0.0, -1.0]))

# Seed-0 default net, Q(S0); frozen from an explicit loop evaluation (see reference_forward).
GOLDEN = [
    5.373263102805458, 4.738189796271346, 6.111901353459196, 5.144023542031926,
    4.247922468333027, 4.38834355799401, 4.002230859153897, 4.359450667260294,
    4.107568817943102, 4.952753132027596, 4.518179918536644, 3.485983862864404,
    3.755204356675811, 4.705371138919437,
]


def reference_forward(net, state):
    """Unit-by-unit evaluation with plain Python floats."""
    h = [1.0 if i == state else 0.0 for i in range(net.layer_sizes[0])]
    pos = 0
    n_layers = len(net.layer_sizes) - 1
    for li, (n_in, n_out) in enumerate(zip(net.layer_sizes[:-1], net.layer_sizes[1:])):
        W = net.params[pos:pos + n_in * n_out]
        b = net.params[pos + n_in * n_out:pos + n_in * n_out + n_out]
        pos += n_in * n_out + n_out
        z = [sum(W[o * n_in + i] * h[i] for i in range(n_in)) + b[o] for o in range(n_out)]
        h = z if li == n_layers - 1 else [min(max(v, 0.0), net.relu_ceiling) for v in z]
    return np.array(h)


def test_default_shape():
    net = QNetwork.init(np.random.default_rng(0))
    assert net.layer_sizes == (2, 3, 5, 7, 14)
    assert len(net.params) == 2 * 3 + 3 + 3 * 5 + 5 + 5 * 7 + 7 + 7 * 14 + 14
    assert np.all((net.params >= 0) & (net.params < 1))
    assert net.forward(0).shape == (14,)
    assert net.q_table().shape == (2, 14)


def test_zero_net_outputs_zero():
    net = QNetwork((2, 3, 5, 7, 14), np.zeros(183))
    np.testing.assert_array_equal(net.q_table(), 0.0)


def test_tiny_net_by_hand():
    np.testing.assert_allclose(TINY.forward(0), [0.75, 0.5])
    # z = 2.25 saturates at the ceiling
    np.testing.assert_allclose(TINY.forward(1), [1.0, 1.0])


def test_tiny_gradient_by_hand():
    loss, g = TINY.loss_and_grad(np.array([0]), np.array([1]), np.array([0.0]))
    assert loss == pytest.approx(0.25)
    np.testing.assert_allclose(g, [2.0, 0.0, 2.0, 0.0, 0.75, 0.0, 1.0])


def test_saturated_unit_passes_no_gradient():
    _, g = TINY.loss_and_grad(np.array([1]), np.array([1]), np.array([0.0]))
    np.testing.assert_allclose(g[:3], 0.0)


def test_golden_seed_zero():
    net = QNetwork.init(np.random.default_rng(0))
    for s in (0, 1):
        np.testing.assert_allclose(net.forward(s), reference_forward(net, s), rtol=1e-12)
    np.testing.assert_allclose(net.forward(0), GOLDEN, rtol=1e-10)


def test_forward_is_pure():
    net = QNetwork.init(np.random.default_rng(3))
    before = net.params.copy()
    a, b = net.forward(0), net.forward(0)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(net.params, before)


def test_zero_residual_leaves_weights():
    net = QNetwork.init(np.random.default_rng(1))
    states, actions = np.array([0, 1, 0]), np.array([2, 5, 13])
    targets = net.forward(states)[np.arange(3), actions]
    before = net.params.copy()
    loss = net.train_minibatch(states, actions, targets, 0.01)
    assert loss == 0.0
    np.testing.assert_array_equal(net.params, before)


def test_single_sample_descends():
    net = QNetwork.init(np.random.default_rng(2))
    s, a, y = np.array([0]), np.array([4]), np.array([10.0])
    before = net.loss(s, a, y)
    assert net.train_minibatch(s, a, y, 1e-3) == pytest.approx(before)
    assert net.loss(s, a, y) < before


def test_only_taken_action_output_moves_its_bias():
    net = QNetwork.init(np.random.default_rng(4))
    _, g = net.loss_and_grad(np.array([0, 1]), np.array([3, 3]), np.array([5.0, 5.0]))
    out_bias = g[-14:]
    assert out_bias[3] != 0
    np.testing.assert_array_equal(np.delete(out_bias, 3), 0.0)


def test_empty_batch_rejected():
    net = QNetwork.init(np.random.default_rng(0))
    with pytest.raises(ValueError):
        net.train_minibatch(np.array([], dtype=int), np.array([], dtype=int), np.array([]), 0.01)


def test_training_converges_on_two_samples():
    net = QNetwork.init(np.random.default_rng(5))
    s, a, y = np.array([0, 1]), np.array([3, 9]), np.array([1.5, 0.5])
    for _ in range(10_000):
        net.train_minibatch(s, a, y, 0.01)
        if net.loss(s, a, y) < 1e-6:
            break
    assert net.loss(s, a, y) < 1e-6


def test_gradient_check_random_cases():
    rng = np.random.default_rng(11)
    errs = [gradient_check(*random_check_case(rng)) for _ in range(20)]
    assert max(errs) < 1e-4


def test_gradient_check_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        gradient_check(TINY, [0], [0], [0.0], epsilon=0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 1))
def test_hidden_activations_in_unit_interval(seed, state):
    rng = np.random.default_rng(seed)
    net = QNetwork.init(rng, low=-3.0, high=3.0)
    h = one_hot([state])
    for W, b in net.layers()[:-1]:
        h = np.clip(h @ W.T + b, 0.0, 1.0)
        assert np.all((h >= 0) & (h <= 1))
    np.testing.assert_allclose(net.forward(state), reference_forward(net, state), atol=1e-12)


def test_json_round_trip():
    net = QNetwork.init(np.random.default_rng(9))
    back = QNetwork.from_json(net.to_json())
    assert back.layer_sizes == net.layer_sizes
    np.testing.assert_array_equal(back.params, net.params)
    assert isinstance(json.loads(net.to_json())["params"], list)
