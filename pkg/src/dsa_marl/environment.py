"""Multi-agent underlay environment seen by the cognitive radios.

The environment computes primary-network throughput changes exactly (a
genie observer) and exposes a single shared state bit: ``S0`` while every
monitored PN link stays within the underlay limit, ``S1`` otherwise.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .linklayer import OFF, AmcTable, pn_power_allocation, sinr_linear, throughput_mbps, to_db
from .topology import ScenarioConfig

S0, S1 = 0, 1
STATE_NAMES = ("S0", "S1")


class InvalidRealization(ValueError):
    """A monitored PN link has zero baseline throughput."""


def action_levels(cfg=None):
    """Power level of each action in dBm; action 0 is OFF (``-inf``)."""
    cfg = cfg or ScenarioConfig()
    n = int(round((cfg.cr_power_max_dbm - cfg.cr_power_min_dbm) / cfg.cr_power_step_db)) + 1
    levels = cfg.cr_power_min_dbm + cfg.cr_power_step_db * np.arange(n)
    return np.concatenate([[OFF], levels])


@dataclass(frozen=True)
class StepOutcome:
    state: int
    per_cr_throughput: np.ndarray
    sn_sum_throughput: float
    per_cr_reward: np.ndarray
    pn_rel_change: np.ndarray


def reward(state, throughputs, mode="sum"):
    """Per-CR rewards: ``10**T`` in S0 (T in Mbps), zero in S1.

    ``mode='sum'`` uses the SN sum throughput for every CR, ``'per_cr'``
    each CR's own throughput.
    """
    throughputs = np.asarray(throughputs, dtype=float)
    if state == S1:
        return np.zeros_like(throughputs)
    if mode == "sum":
        return np.full_like(throughputs, 10.0 ** throughputs.sum())
    if mode == "per_cr":
        return 10.0 ** throughputs
    raise ValueError(f"unknown reward mode {mode!r}")


def relative_change(baseline, current):
    """Relative throughput loss, clamped below at zero."""
    baseline = np.asarray(baseline, dtype=float)
    if np.any(baseline <= 0):
        raise InvalidRealization("baseline PN throughput is zero")
    return np.maximum((baseline - np.asarray(current, dtype=float)) / baseline, 0.0)


class Environment:
    """Joint-action environment for one realization.

    PN powers are allocated once with all CRs silent. With
    ``cfg.pn_readapt_every_step`` the PN re-runs its power control against
    each joint CR action instead.
    """

    def __init__(self, realization, cfg=None, table=None):
        self.realization = realization
        self.cfg = cfg or ScenarioConfig()
        if table is None:
            table = AmcTable.from_csv(self.cfg.amc_table) if self.cfg.amc_table else AmcTable.default()
        self.table = table
        self.levels = action_levels(self.cfg)
        self.n_actions = len(self.levels)
        self.n_crs = realization.n_crs
        self.n_pn = realization.n_pn
        self.target_db = table.thresholds_db[-1]

        silent = np.full(self.n_crs, OFF)
        self.baseline_powers, self.pn_converged = self._allocate(silent)
        self.baseline_pn_throughput = self._throughputs(self.baseline_powers)[: self.n_pn]
        self.monitored = np.array([self.nearest_pn_link(i) for i in range(self.n_crs)])
        if np.any(self.baseline_pn_throughput[self.monitored] <= 0):
            raise InvalidRealization(
                f"zero baseline throughput on a monitored PN link (seed={realization.seed})")
        self._table = None

    def _allocate(self, cr_powers):
        c = self.cfg
        return pn_power_allocation(self.realization, cr_powers, self.target_db,
                                   c.pn_power_min_dbm, c.pn_power_max_dbm, c.noise_dbm)

    def _throughputs(self, powers):
        s = to_db(sinr_linear(self.realization, powers, self.cfg.noise_dbm))
        return throughput_mbps(s, self.table, self.cfg.bandwidth_hz)

    def nearest_pn_link(self, cr):
        """PN link whose access point is received loudest at CR ``cr``'s transmitter.

        Ties go to the lowest access-point index.
        """
        r = self.realization
        p_ap = 10.0 ** (self.baseline_powers[r.active_aps] / 10.0)
        rx = p_ap * r.ap_cr_tx_gain[r.active_aps, cr]
        return int(np.argmax(rx))

    def powers_for(self, joint_action):
        joint_action = np.asarray(joint_action)
        cr = self.levels[joint_action]
        if self.cfg.pn_readapt_every_step:
            powers, _ = self._allocate(cr)
            return powers
        powers = self.baseline_powers.copy()
        powers[self.realization.n_aps:] = cr
        return powers

    def step(self, joint_action, reward_mode="sum"):
        """Evaluate one joint action (one action index per CR)."""
        joint_action = np.asarray(joint_action, dtype=np.int64)
        if joint_action.shape != (self.n_crs,) or np.any(joint_action < 0) \
                or np.any(joint_action >= self.n_actions):
            raise ValueError(f"invalid joint action {joint_action!r}")
        thr = self._throughputs(self.powers_for(joint_action))
        pn = thr[: self.n_pn]
        cr = thr[self.n_pn:]
        rel = relative_change(self.baseline_pn_throughput[self.monitored], pn[self.monitored])
        # one bit per CR about its own monitored link; the shared state is their AND
        local_ok = rel <= self.cfg.underlay_limit
        state = S0 if np.all(local_ok) else S1
        return StepOutcome(state=state, per_cr_throughput=cr, sn_sum_throughput=float(cr.sum()),
                           per_cr_reward=reward(state, cr, reward_mode), pn_rel_change=rel)

    def joint_actions(self):
        return itertools.product(range(self.n_actions), repeat=self.n_crs)

    def outcome_table(self):
        """Next state and per-CR throughput for every joint action.

        Returns ``(states, throughputs)`` indexed by the mixed-radix joint
        action index (first CR most significant). Cached.
        """
        if self._table is None:
            if self.n_crs > 4:
                raise ValueError("outcome table is limited to at most 4 CRs")
            n = self.n_actions ** self.n_crs
            states = np.empty(n, dtype=np.int64)
            thr = np.empty((n, self.n_crs))
            for idx, ja in enumerate(self.joint_actions()):
                out = self.step(ja)
                states[idx] = out.state
                thr[idx] = out.per_cr_throughput
            self._table = (states, thr)
        return self._table

    def joint_index(self, joint_action):
        idx = 0
        for a in joint_action:
            idx = idx * self.n_actions + int(a)
        return idx
