"""Small multilayer perceptron used as the Q action-value approximator.

Input is the one-hot encoded environment state, hidden layers use a
saturated ReLU (clamp to ``[0, relu_ceiling]``), the output layer is linear
with one unit per action. Training is plain full-batch gradient descent on
the squared TD error at the taken action.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels

N_STATES = 2
DEFAULT_HIDDEN = (3, 5, 7)
RELU_CEILING = 1.0


def one_hot(states, n_states=N_STATES):
    states = np.asarray(states, dtype=np.int64)
    return np.eye(n_states)[states]


@dataclass
class QNetwork:
    layer_sizes: tuple
    params: np.ndarray
    relu_ceiling: float = RELU_CEILING

    @classmethod
    def init(cls, rng, n_actions=14, hidden=DEFAULT_HIDDEN, n_inputs=N_STATES,
             relu_ceiling=RELU_CEILING, low=0.0, high=1.0):
        """New network with every weight and bias uniform on ``[low, high)``."""
        sizes = (n_inputs, *hidden, n_actions)
        n = sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
        return cls(sizes, rng.uniform(low, high, size=n), relu_ceiling)

    @property
    def n_actions(self):
        return self.layer_sizes[-1]

    @property
    def _sizes(self):
        return np.asarray(self.layer_sizes, dtype=np.int64)

    def layers(self):
        """``(W, b)`` views per layer; ``W`` has shape ``(n_out, n_in)``."""
        return list(kernels._kernels_py._layers(self.params, self.layer_sizes))

    def forward(self, states):
        """Q-values for a state or a batch of states."""
        scalar = np.ndim(states) == 0
        q = kernels.forward_batch(self.params, self._sizes, one_hot(np.atleast_1d(states)),
                                  self.relu_ceiling)
        return q[0] if scalar else q

    def q_table(self):
        """``(n_states, n_actions)`` array of Q-values for every state."""
        return kernels.forward_batch(self.params, self._sizes, np.eye(self.layer_sizes[0]),
                                     self.relu_ceiling)

    def loss_and_grad(self, states, actions, targets):
        return kernels.loss_and_grad(self.params, self._sizes, one_hot(states),
                                     np.asarray(actions, dtype=np.int64),
                                     np.asarray(targets, dtype=float), self.relu_ceiling)

    def loss(self, states, actions, targets):
        q = self.forward(np.asarray(states))
        r = q[np.arange(len(q)), actions] - targets
        return float(np.mean(r * r))

    def train_minibatch(self, states, actions, targets, lr):
        """One gradient step on the batch; returns the loss before the step."""
        if len(states) == 0:
            raise ValueError("empty training batch")
        return kernels.train_batch(self.params, self._sizes, one_hot(states),
                                   np.asarray(actions, dtype=np.int64),
                                   np.asarray(targets, dtype=float), lr, self.relu_ceiling)

    def copy(self):
        return QNetwork(self.layer_sizes, self.params.copy(), self.relu_ceiling)

    def to_json(self):
        return json.dumps({"layer_sizes": list(self.layer_sizes),
                           "relu_ceiling": self.relu_ceiling,
                           "params": self.params.tolist()})

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(tuple(doc["layer_sizes"]), np.array(doc["params"], dtype=float),
                   doc.get("relu_ceiling", RELU_CEILING))


def gradient_check(net, states, actions, targets, epsilon=1e-5):
    """Max relative error between backprop and central-difference gradients.

    Every parameter is perturbed. The relative error of one entry is
    ``|g - n| / max(|g| + |n|, 1e-8)``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _, analytic = net.loss_and_grad(states, actions, targets)
    numeric = np.empty_like(analytic)
    probe = net.copy()
    for k in range(len(probe.params)):
        orig = probe.params[k]
        probe.params[k] = orig + epsilon
        up = probe.loss(states, actions, targets)
        probe.params[k] = orig - epsilon
        down = probe.loss(states, actions, targets)
        probe.params[k] = orig
        numeric[k] = (up - down) / (2.0 * epsilon)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


def random_check_case(rng, n_actions=14, hidden=DEFAULT_HIDDEN, batch=8):
    """A random net and batch whose hidden pre-activations avoid the kinks.

    Central differences are meaningless across the ReLU corners at 0 and the
    ceiling, so cases with any pre-activation within 1e-3 of one are redrawn.
    """
    while True:
        net = QNetwork.init(rng, n_actions, hidden, low=-1.0, high=1.0)
        states = rng.integers(0, N_STATES, size=batch)
        actions = rng.integers(0, n_actions, size=batch)
        targets = rng.normal(0.0, 2.0, size=batch)
        if _min_kink_distance(net, np.arange(N_STATES)) > 1e-3:
            return net, states, actions, targets


def _min_kink_distance(net, states):
    h = one_hot(states)
    layers = net.layers()
    dist = np.inf
    for i, (W, b) in enumerate(layers[:-1]):
        z = h @ W.T + b
        dist = min(dist, np.min(np.abs(z)), np.min(np.abs(z - net.relu_ceiling)))
        h = np.clip(z, 0.0, net.relu_ceiling)
    return dist
