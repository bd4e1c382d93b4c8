"""Command-line front end.

Subcommands: ``run`` (one preset), ``table1`` (the eight reference presets),
``trace`` (per-step Q-value CSV for one seed), ``oracle`` (exhaustive search
for one seed) and ``gradcheck`` (backprop against finite differences).
Every file is written below ``--out``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_CONFIG_JSON, ConfigError, load_config
from .harness import (PRESETS, TABLE1_PRESETS, aggregate, build_environment, run_experiments,
                      simulate, write_runs)
from .neuralnet import gradient_check, random_check_case
from .oracle import OracleCache, exhaustive_search

log = logging.getLogger("dsa_marl")

GRADCHECK_LIMIT = 1e-4


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file overriding the embedded default")
    common.add_argument("--seed", type=int, help="first Monte Carlo seed")
    common.add_argument("--runs", type=int, help="number of runs (cases for gradcheck)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")

    p = argparse.ArgumentParser(prog="dsa-marl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run one preset")
    run.add_argument("--preset", choices=sorted(PRESETS))
    sub.add_parser("table1", parents=[common], help="run the eight reference presets")
    trace = sub.add_parser("trace", parents=[common], help="per-step Q-value trace, one seed")
    trace.add_argument("--preset", choices=sorted(PRESETS))
    sub.add_parser("oracle", parents=[common], help="exhaustive search for one seed")
    sub.add_parser("gradcheck", parents=[common], help="verify backprop gradients")
    sub.add_parser("default-config", help="print the documented default configuration")
    return p


def _prepare_out(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json() + "\n")
    return out


def _print_summary(results):
    print(f"{'preset':<14} {'mean_rel_diff':>13} {'mean_phases':>11} {'pct_optimal':>11}")
    for preset, metrics in results:
        a = aggregate(metrics)
        print(f"{preset.name:<14} {a['mean_rel_diff']:>13.4f} {a['mean_phases']:>11.2f} "
              f"{a['pct_optimal']:>11.0f}")


def cmd_run(cfg, presets):
    out = _prepare_out(cfg)
    seeds = range(cfg.seed, cfg.seed + cfg.runs)
    results = run_experiments(presets, seeds, out, cfg.scenario, cfg.hyperparameters)
    _print_summary(results)
    return 0


def cmd_trace(cfg):
    out = _prepare_out(cfg)
    preset = PRESETS[cfg.preset]
    env, rseed = build_environment(cfg.seed, cfg.scenario)
    n_act = env.n_actions
    header = (["agent", "step", "phase", "state"] + [f"q_{a}" for a in range(n_act)]
              + ["delta", "policy_action"])
    with open(out / "qtrace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)

        def trace(step, phase, x, agents):
            if step % cfg.trace_every:
                return
            for i, agent in agents.items():
                q = agent.q_values()
                delta = agent.tolerance()
                for s in range(q.shape[0]):
                    w.writerow([i, step, phase, s, *q[s].tolist(), delta,
                                int(agent.policy[s])])

        res = simulate(cfg.seed, preset, cfg.scenario, cfg.hyperparameters, trace=trace, env=env)
    (out / "realization.json").write_text(env.realization.to_json())
    write_runs(out / "runs.csv", [(preset, [res.metrics])])
    m = res.metrics
    print(f"seed {cfg.seed} ({preset.name}): rel_diff {m.rel_diff:.4f}, "
          f"optimal {m.found_optimal}, phases {m.phases_to_converge}")
    print(f"wrote {out / 'qtrace.csv'}")
    return 0


def cmd_oracle(cfg):
    out = _prepare_out(cfg)
    cache = OracleCache(out / "oracle_cache.json")
    env, rseed = build_environment(cfg.seed, cfg.scenario)
    res = cache.get(rseed)
    if res is None:
        res = exhaustive_search(env)
        cache.put(rseed, res)
        cache.save()
    levels = env.levels[list(res.best_joint_action)]
    doc = {
        "seed": cfg.seed,
        "realization_seed": rseed,
        "best_joint_action": list(res.best_joint_action),
        "best_power_dbm": [None if np.isinf(p) else float(p) for p in levels],
        "best_sum_throughput_mbps": res.best_sum_throughput,
        "feasible_count": res.feasible_count,
    }
    (out / "oracle.json").write_text(json.dumps(doc, indent=2) + "\n")
    (out / "realization.json").write_text(env.realization.to_json())
    print(json.dumps(doc))
    return 0


def cmd_gradcheck(cfg):
    rng = np.random.default_rng(cfg.seed)
    worst = max(gradient_check(*random_check_case(rng)) for _ in range(cfg.runs))
    ok = worst < GRADCHECK_LIMIT
    print(f"max relative error {worst:.3e} over {cfg.runs} random nets "
          f"({'ok' if ok else 'FAIL'}, limit {GRADCHECK_LIMIT:g})")
    return 0 if ok else 1


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "default-config":
        print(DEFAULT_CONFIG_JSON, end="")
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"seed": args.seed, "runs": args.runs, "out": args.out,
                 "preset": getattr(args, "preset", None)}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"dsa-marl: error: {exc}", file=sys.stderr)
        return 2
    if args.command == "run":
        return cmd_run(cfg, [PRESETS[cfg.preset]])
    if args.command == "table1":
        return cmd_run(cfg, list(TABLE1_PRESETS))
    if args.command == "trace":
        return cmd_trace(cfg)
    if args.command == "oracle":
        return cmd_oracle(cfg)
    return cmd_gradcheck(cfg)


if __name__ == "__main__":
    sys.exit(main())
