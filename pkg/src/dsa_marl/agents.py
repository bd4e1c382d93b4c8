"""Learning agents, one per cognitive radio.

``PhasedDQLAgent`` is the uncoordinated multi-agent deep Q-learner: it acts
on a frozen policy for a whole exploration phase (deviating with
probability ``rho``), trains its Q-network on the current phase's samples
against a stored array of target Q-values, and at the end of each phase
runs a best-reply step with inertia over a tolerance-based candidate set.

``TabularPhasedAgent`` is the same procedure with a Q-table, and
``StandardDQLAgent`` is the single-agent DQN baseline (epsilon-greedy,
replay memory, periodic target refresh).
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .neuralnet import DEFAULT_HIDDEN, N_STATES, RELU_CEILING, QNetwork


@dataclass(frozen=True)
class Hyperparameters:
    n_phases: int = 60
    phase_len: int = 60
    rho: float = 0.15
    lam: float = 0.35
    c: int = 30
    lr: float = 0.01
    batch_size: int = 60
    gamma: float = 0.5
    window: int = 5
    replay_capacity: int = 3600
    hidden: tuple = DEFAULT_HIDDEN
    relu_ceiling: float = RELU_CEILING

    def __post_init__(self):
        for name in ("rho", "lam", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("phase_len", "c", "batch_size", "window", "replay_capacity"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_phases < 0:
            raise ValueError("n_phases must be non-negative")

    def with_overrides(self, **kw):
        known = {f.name for f in fields(self)}
        bad = set(kw) - known
        if bad:
            raise KeyError(f"unknown hyperparameter(s): {', '.join(sorted(bad))}")
        if "hidden" in kw:
            kw["hidden"] = tuple(kw["hidden"])
        return replace(self, **kw)


def tolerance_from_history(history):
    """Three times the largest population std over ``(steps, ...)`` history.

    Returns ``inf`` for an empty history.
    """
    history = np.asarray(history)
    if history.shape[0] == 0:
        return np.inf
    return 3.0 * float(np.max(history.std(axis=0)))


def candidate_actions(q_row, delta):
    """Actions whose Q-value is within ``delta`` of the row maximum."""
    q_row = np.asarray(q_row)
    if not np.all(np.isfinite(q_row)):
        raise FloatingPointError("non-finite Q-values; training diverged")
    return np.flatnonzero(q_row >= q_row.max() - delta)


def tabular_q_update(qtable, x, a, r, x_next, alpha, gamma):
    """In-place temporal-difference update of one Q-table entry."""
    qtable[x, a] += alpha * (r + gamma * np.max(qtable[x_next]) - qtable[x, a])
    return qtable


class PhasedAgent:
    """Exploration phases, tolerance and best reply with inertia.

    Subclasses supply ``q_values()`` (an ``(n_states, n_actions)`` array)
    and ``_learn(x, a, r, x_next)``.
    """

    def __init__(self, n_actions, hyper, rng, n_states=N_STATES):
        self.n_actions = n_actions
        self.n_states = n_states
        self.hyper = hyper
        self.policy = rng.integers(0, n_actions, size=n_states)
        self.steps = 0
        self._hist = np.zeros((hyper.window, n_states, n_actions))
        self._hist_n = 0

    def q_values(self):
        raise NotImplementedError

    def _learn(self, x, a, r, x_next):
        raise NotImplementedError

    def select_action(self, state, rng):
        # uniform draw over all actions w.p. rho, the policy action otherwise
        if rng.random() < self.hyper.rho:
            return int(rng.integers(self.n_actions))
        return int(self.policy[state])

    def train_step(self, x, a, r, x_next):
        loss = self._learn(x, a, r, x_next)
        self.steps += 1
        self._record(self.q_values())
        return loss

    def _record(self, q):
        self._hist[self._hist_n % self.hyper.window] = q
        self._hist_n += 1

    @property
    def q_history(self):
        """Recorded Q-value tables, oldest first, at most ``window`` of them."""
        w = self.hyper.window
        if self._hist_n < w:
            return self._hist[: self._hist_n]
        i = self._hist_n % w
        return np.concatenate([self._hist[i:], self._hist[:i]])

    def tolerance(self):
        return tolerance_from_history(self.q_history)

    def candidate_sets(self, delta=None):
        delta = self.tolerance() if delta is None else delta
        q = self.q_values()
        return [candidate_actions(q[x], delta) for x in range(self.n_states)]

    def end_phase(self, rng):
        """Pick the next policy: keep the current one w.p. ``lam``, else draw
        uniformly from the product of per-state candidate sets."""
        self._refresh_target()
        cands = self.candidate_sets()
        if rng.random() >= self.hyper.lam:
            self.policy = np.array([c[rng.integers(len(c))] for c in cands])
        self._start_phase()
        return self.policy.copy()

    def greedy_action(self, state):
        return int(self.policy[state])

    def _refresh_target(self):
        pass

    def _start_phase(self):
        pass


class PhasedDQLAgent(PhasedAgent):
    """Q-network trained on the current phase's samples, no replay memory.

    Targets ``r + gamma * max Q_hat(x_next, .)`` are computed from the stored
    target array when a sample arrives. The array is refreshed from the
    network every ``c`` training steps and at every phase end.
    """

    def __init__(self, n_actions, hyper, rng, n_states=N_STATES):
        super().__init__(n_actions, hyper, rng, n_states)
        self.net = QNetwork.init(rng, n_actions, hyper.hidden, n_states, hyper.relu_ceiling)
        self.target_q = self.net.q_table()
        self._q = self.target_q.copy()
        cap = hyper.phase_len
        self._bx = np.zeros(cap, dtype=np.int64)
        self._ba = np.zeros(cap, dtype=np.int64)
        self._by = np.zeros(cap)
        self._bn = 0

    @property
    def phase_buffer(self):
        n = self._bn
        return list(zip(self._bx[:n].tolist(), self._ba[:n].tolist(), self._by[:n].tolist()))

    def q_values(self):
        return self._q

    def training_target(self, r, x_next):
        return r + self.hyper.gamma * float(np.max(self.target_q[x_next]))

    def _learn(self, x, a, r, x_next):
        if self._bn == len(self._bx):
            grow = len(self._bx)
            self._bx = np.concatenate([self._bx, np.zeros(grow, dtype=np.int64)])
            self._ba = np.concatenate([self._ba, np.zeros(grow, dtype=np.int64)])
            self._by = np.concatenate([self._by, np.zeros(grow)])
        n = self._bn
        self._bx[n], self._ba[n], self._by[n] = x, a, self.training_target(r, x_next)
        self._bn = n + 1
        lo = max(0, self._bn - self.hyper.batch_size)
        loss = self.net.train_minibatch(self._bx[lo:self._bn], self._ba[lo:self._bn],
                                        self._by[lo:self._bn], self.hyper.lr)
        self._q = self.net.q_table()
        if (self.steps + 1) % self.hyper.c == 0:
            self.target_q = self._q.copy()
        return loss

    def _refresh_target(self):
        self.target_q = self._q.copy()

    def _start_phase(self):
        self._bn = 0


class TabularPhasedAgent(PhasedAgent):
    """Phased learner with a Q-table and step size ``1 / visits(x, a)``."""

    def __init__(self, n_actions, hyper, rng, n_states=N_STATES):
        super().__init__(n_actions, hyper, rng, n_states)
        self.qtable = np.zeros((n_states, n_actions))
        self.visits = np.zeros((n_states, n_actions), dtype=np.int64)

    def q_values(self):
        return self.qtable

    def _learn(self, x, a, r, x_next):
        self.visits[x, a] += 1
        alpha = 1.0 / self.visits[x, a]
        before = self.qtable[x, a]
        tabular_q_update(self.qtable, x, a, r, x_next, alpha, self.hyper.gamma)
        return float((self.qtable[x, a] - before) ** 2)


class StandardDQLAgent:
    """Single-agent DQN baseline.

    Epsilon-greedy with ``epsilon = rho``, a replay memory sampled uniformly
    for mini-batches, and a target array refreshed every ``c`` steps. There
    are no exploration phases and no inertia; the policy is the greedy one.
    """

    def __init__(self, n_actions, hyper, rng, n_states=N_STATES):
        self.n_actions = n_actions
        self.n_states = n_states
        self.hyper = hyper
        self.net = QNetwork.init(rng, n_actions, hyper.hidden, n_states, hyper.relu_ceiling)
        self.target_q = self.net.q_table()
        self._q = self.target_q.copy()
        cap = hyper.replay_capacity
        self._mx = np.zeros(cap, dtype=np.int64)
        self._ma = np.zeros(cap, dtype=np.int64)
        self._mr = np.zeros(cap)
        self._mxn = np.zeros(cap, dtype=np.int64)
        self._mn = 0
        self.steps = 0
        self._rng = rng
        self._hist = np.zeros((hyper.window, n_states, n_actions))
        self._hist_n = 0

    @property
    def policy(self):
        return np.argmax(self._q, axis=1)

    def q_values(self):
        return self._q

    def greedy_action(self, state):
        return int(np.argmax(self._q[state]))

    def select_action(self, state, rng):
        if rng.random() < self.hyper.rho:
            return int(rng.integers(self.n_actions))
        return self.greedy_action(state)

    def train_step(self, x, a, r, x_next):
        h = self.hyper
        slot = self._mn % h.replay_capacity
        self._mx[slot], self._ma[slot], self._mr[slot], self._mxn[slot] = x, a, r, x_next
        self._mn += 1
        size = min(self._mn, h.replay_capacity)
        if size <= h.batch_size:
            idx = np.arange(size)
        else:
            idx = self._rng.choice(size, size=h.batch_size, replace=False)
        targets = self._mr[idx] + h.gamma * self.target_q[self._mxn[idx]].max(axis=1)
        loss = self.net.train_minibatch(self._mx[idx], self._ma[idx], targets, h.lr)
        self._q = self.net.q_table()
        self.steps += 1
        if self.steps % h.c == 0:
            self.target_q = self._q.copy()
        self._hist[self._hist_n % h.window] = self._q
        self._hist_n += 1
        return loss

    q_history = PhasedAgent.q_history
    tolerance = PhasedAgent.tolerance

    def end_phase(self, rng):
        return self.policy.copy()


AGENT_VARIANTS = {
    "proposed": PhasedDQLAgent,
    "tabular": TabularPhasedAgent,
    "standard_dql": StandardDQLAgent,
}
