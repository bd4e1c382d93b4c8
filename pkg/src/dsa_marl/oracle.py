"""Centralized exhaustive search for the best feasible joint CR action."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .environment import S0

MAX_CRS = 4


@dataclass(frozen=True)
class OracleResult:
    best_joint_action: tuple
    best_sum_throughput: float
    feasible_count: int


def exhaustive_search(env, allowed=None):
    """Enumerate every joint action and keep the feasible sum-throughput maximizer.

    ``allowed`` optionally restricts each CR to a list of action indices.
    Feasibility and throughput come from ``env.step``, the same path the
    agents learn on. Ties go to the lexicographically smallest joint action.
    """
    if env.n_crs > MAX_CRS:
        raise ValueError(f"exhaustive search refused for more than {MAX_CRS} CRs")
    if allowed is None:
        allowed = [range(env.n_actions)] * env.n_crs
    best, best_val, count = None, -np.inf, 0
    for ja in itertools.product(*[sorted(a) for a in allowed]):
        out = env.step(ja)
        if out.state != S0:
            continue
        count += 1
        if out.sn_sum_throughput > best_val:
            best, best_val = ja, out.sn_sum_throughput
    if best is None:
        raise ValueError("no feasible joint action among the allowed ones")
    return OracleResult(tuple(int(a) for a in best), float(best_val), count)


class OracleCache:
    """JSON sidecar of oracle results keyed by preset-independent realization seed."""

    def __init__(self, path):
        self.path = Path(path)
        self._data = json.loads(self.path.read_text()) if self.path.exists() else {}

    def get(self, key):
        doc = self._data.get(str(key))
        if doc is None:
            return None
        return OracleResult(tuple(doc["best_joint_action"]), doc["best_sum_throughput"],
                            doc["feasible_count"])

    def put(self, key, result):
        self._data[str(key)] = asdict(result)

    def save(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self._data, indent=1, sort_keys=True))
