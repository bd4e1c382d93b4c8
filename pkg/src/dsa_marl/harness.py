"""Monte Carlo experiment runner and the reference experiment presets."""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import AGENT_VARIANTS, Hyperparameters
from .environment import S0, Environment, InvalidRealization, reward
from .oracle import exhaustive_search
from .topology import ScenarioConfig, sample_realization

log = logging.getLogger(__name__)

OPTIMAL_TIE_MBPS = 1e-12
MAX_RESAMPLES = 1000


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    label: str
    variant: str = "proposed"
    reward_mode: str = "sum"
    overrides: dict = field(default_factory=dict)
    runs: int = 100
    frozen_off: tuple = ()

    def __post_init__(self):
        if self.variant not in AGENT_VARIANTS:
            raise ValueError(f"unknown agent variant {self.variant!r}")
        if self.reward_mode not in ("sum", "per_cr"):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")

    def hyperparameters(self, base=None):
        return (base or Hyperparameters()).with_overrides(**self.overrides)


TABLE1_PRESETS = (
    ExperimentPreset("default", "Default setting"),
    ExperimentPreset("std_dql_c1", "Standard DQL c=1", variant="standard_dql", overrides={"c": 1}),
    ExperimentPreset("std_dql_c60", "Standard DQL c=60", variant="standard_dql",
                     overrides={"c": 60}),
    ExperimentPreset("c1", "c=1", overrides={"c": 1}),
    ExperimentPreset("c60", "c=60", overrides={"c": 60}),
    ExperimentPreset("batch120", "Mini batch size = 120", overrides={"batch_size": 120}),
    ExperimentPreset("batch30", "Mini batch size = 30", overrides={"batch_size": 30}),
    ExperimentPreset("per_cr", "Uncoordinated per-CR reward", reward_mode="per_cr"),
)

EXTRA_PRESETS = (
    ExperimentPreset("tabular", "Tabular phased Q-learning", variant="tabular"),
    ExperimentPreset("single_agent", "Single agent (CR 2 off)", frozen_off=(1,)),
)

PRESETS = {p.name: p for p in TABLE1_PRESETS + EXTRA_PRESETS}


@dataclass(frozen=True)
class RunMetrics:
    seed: int
    rel_diff: float
    found_optimal: bool
    phases_to_converge: int
    learned_joint_action: tuple = ()
    oracle_joint_action: tuple = ()
    learned_sum_throughput: float = 0.0
    oracle_sum_throughput: float = 0.0


@dataclass
class RunResult:
    metrics: RunMetrics
    policy_log: list
    final_phase_q: np.ndarray
    final_policy_s0: np.ndarray
    realization_seed: int


def detect_convergence(policy_log):
    """First phase (1-based) after which no agent's policy ever changes again.

    ``policy_log[k][i]`` is agent ``i``'s policy after phase ``k + 1``; any
    array-like compared elementwise works, e.g. the outcome signatures of
    ``policy_signatures``. Returns ``len(policy_log)`` when the last phase
    still differs, and 0 for an empty log.
    """
    K = len(policy_log)
    if K == 0:
        return 0
    final = [np.asarray(p) for p in policy_log[-1]]
    k = K
    while k > 1 and all(np.array_equal(np.asarray(p), f)
                        for p, f in zip(policy_log[k - 2], final)):
        k -= 1
    return k


def policy_signatures(policy_log, env, learners):
    """Replace each phase's joint policy by what it produces in every state.

    For each state the joint action (non-learners off) maps to its next
    state and per-CR throughputs. Joint policies that differ only among
    outcome-identical actions, e.g. powers too low to reach any AMC mode,
    get the same signature.
    """
    states, thr = env.outcome_table()
    radix = env.n_actions ** np.arange(env.n_crs - 1, -1, -1)
    out = []
    for policies in policy_log:
        joint = np.zeros((len(policies[0]), env.n_crs), dtype=np.int64)
        for i, pol in zip(learners, policies):
            joint[:, i] = pol
        idx = joint @ radix
        out.append([np.column_stack([states[idx], thr[idx]])])
    return out


def relative_difference(oracle_mbps, learned_mbps):
    """``|oracle - learned| / oracle``; 0 or 1 when the oracle value is zero."""
    if oracle_mbps == 0:
        return 0.0 if learned_mbps == 0 else 1.0
    return abs(oracle_mbps - learned_mbps) / oracle_mbps


def best_feasible_sum(env):
    """Best SN sum throughput over feasible joint actions, from the outcome table."""
    states, thr = env.outcome_table()
    return float(thr[states == S0].sum(axis=1).max())


def build_environment(seed, scenario=None, require_positive_oracle=True):
    """Environment for ``seed``, resampling with derived seeds when invalid.

    A realization is invalid when a monitored PN link has no baseline
    throughput, or (with ``require_positive_oracle``) when no feasible joint
    action gives the SN any throughput, which leaves the relative difference
    undefined. Returns ``(env, realization_seed)``.
    """
    scenario = scenario or ScenarioConfig()
    for attempt in range(MAX_RESAMPLES):
        rseed = seed if attempt == 0 else int(
            np.random.SeedSequence([seed, attempt]).generate_state(1)[0])
        try:
            env = Environment(sample_realization(rseed, scenario), scenario)
        except InvalidRealization:
            log.info("seed %d: realization %d invalid, resampling", seed, rseed)
            continue
        if require_positive_oracle and env.n_crs <= 4 and best_feasible_sum(env) <= 0:
            log.info("seed %d: realization %d has zero optimal SN throughput, resampling",
                     seed, rseed)
            continue
        return env, rseed
    raise RuntimeError(f"no valid realization for seed {seed}")


def simulate(seed, preset, scenario=None, hyper=None, trace=None, env=None):
    """Run one seed of ``preset``; deterministic given ``seed``.

    ``trace(step, phase, x, agents)`` is called after every learning step.
    """
    scenario = scenario or ScenarioConfig()
    hyper = preset.hyperparameters(hyper)
    rseed = seed
    if env is None:
        env, rseed = build_environment(seed, scenario)
    states, thr = env.outcome_table()
    n_crs, n_act = env.n_crs, env.n_actions
    rng = np.random.default_rng((seed, 1))
    cls = AGENT_VARIANTS[preset.variant]
    learners = [i for i in range(n_crs) if i not in preset.frozen_off]
    agents = {i: cls(n_act, hyper, rng) for i in learners}
    radix = n_act ** np.arange(n_crs - 1, -1, -1)

    # reward per joint action, shared by every step
    rewards = np.array([reward(s, t, preset.reward_mode) for s, t in zip(states, thr)])

    x = S0
    joint = np.zeros(n_crs, dtype=np.int64)
    policy_log = []
    final_q = np.zeros((len(learners), hyper.phase_len, n_act))
    step = 0
    for k in range(hyper.n_phases):
        last = k == hyper.n_phases - 1
        for t in range(hyper.phase_len):
            for i in learners:
                joint[i] = agents[i].select_action(x, rng)
            idx = int(joint @ radix)
            x_next = int(states[idx])
            for j, i in enumerate(learners):
                agents[i].train_step(x, int(joint[i]), float(rewards[idx, i]), x_next)
                if last:
                    final_q[j, t] = agents[i].q_values()[S0]
            step += 1
            if trace is not None:
                trace(step, k + 1, x, agents)
            x = x_next
        policy_log.append([agents[i].end_phase(rng) for i in learners])

    learned = np.zeros(n_crs, dtype=np.int64)
    for i in learners:
        learned[i] = agents[i].greedy_action(S0)
    out = env.step(learned)
    allowed = [[0] if i in preset.frozen_off else range(n_act) for i in range(n_crs)]
    orc = exhaustive_search(env, allowed)
    learned_val = out.sn_sum_throughput
    optimal = out.state == S0 and abs(learned_val - orc.best_sum_throughput) <= OPTIMAL_TIE_MBPS
    rel = 0.0 if optimal else relative_difference(orc.best_sum_throughput, learned_val)
    if preset.variant == "standard_dql":
        phases = hyper.n_phases
    else:
        phases = detect_convergence(policy_signatures(policy_log, env, learners))
    metrics = RunMetrics(
        seed=seed,
        rel_diff=float(rel),
        found_optimal=bool(optimal),
        phases_to_converge=int(phases),
        learned_joint_action=tuple(int(a) for a in learned),
        oracle_joint_action=orc.best_joint_action,
        learned_sum_throughput=float(learned_val),
        oracle_sum_throughput=orc.best_sum_throughput,
    )
    return RunResult(metrics, policy_log, final_q, learned[learners], rseed)


def run_one(seed, preset, scenario=None, hyper=None):
    return simulate(seed, preset, scenario, hyper).metrics


def aggregate(metrics):
    """Table-style summary: mean relative difference, mean phases, percent optimal."""
    metrics = list(metrics)
    if not metrics:
        raise ValueError("cannot aggregate zero runs")
    return {
        "mean_rel_diff": float(np.mean([m.rel_diff for m in metrics])),
        "mean_phases": float(np.mean([m.phases_to_converge for m in metrics])),
        "pct_optimal": 100.0 * float(np.mean([m.found_optimal for m in metrics])),
        "runs": len(metrics),
    }


def worker_count():
    cap = os.environ.get("DSA_MARL_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def _run_star(args):
    return run_one(*args)


def run_preset(preset, seeds, scenario=None, hyper=None, workers=None):
    """Metrics for every seed, in seed order regardless of scheduling."""
    workers = worker_count() if workers is None else workers
    jobs = [(s, preset, scenario, hyper) for s in seeds]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_star, jobs))


SUMMARY_FIELDS = ("preset", "label", "mean_rel_diff", "mean_phases", "pct_optimal", "runs")
RUNS_FIELDS = ("preset", "seed", "rel_diff", "found_optimal", "phases", "learned_joint_action",
               "oracle_joint_action", "learned_sum_mbps", "oracle_sum_mbps")


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        for preset, summary in rows:
            w.writerow({"preset": preset.name, "label": preset.label, **summary})


def write_runs(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RUNS_FIELDS)
        w.writeheader()
        for preset, metrics in rows:
            for m in metrics:
                w.writerow({
                    "preset": preset.name, "seed": m.seed, "rel_diff": m.rel_diff,
                    "found_optimal": int(m.found_optimal), "phases": m.phases_to_converge,
                    "learned_joint_action": " ".join(map(str, m.learned_joint_action)),
                    "oracle_joint_action": " ".join(map(str, m.oracle_joint_action)),
                    "learned_sum_mbps": m.learned_sum_throughput,
                    "oracle_sum_mbps": m.oracle_sum_throughput,
                })


def run_experiments(presets, seeds, out_dir, scenario=None, hyper=None, workers=None):
    """Run presets over the same seeds and write ``summary.csv`` and ``runs.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for p in presets:
        metrics = run_preset(p, seeds, scenario, hyper, workers)
        log.info("%s: %s", p.name, aggregate(metrics))
        results.append((p, metrics))
    write_summary(out_dir / "summary.csv", [(p, aggregate(m)) for p, m in results])
    write_runs(out_dir / "runs.csv", results)
    return results
