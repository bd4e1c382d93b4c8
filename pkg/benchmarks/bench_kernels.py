"""Time the compiled and numpy kernel backends on the per-step workload.

Usage: python3 benchmarks/bench_kernels.py [--steps N]

One learning step trains the default (2, 3, 5, 7, 14) network on a batch of
up to 60 samples, then reads back the 2 x 14 Q-table. A full run is 3600
such steps per agent.
"""
import argparse
import time

import numpy as np

from dsa_marl import kernels
from dsa_marl.neuralnet import QNetwork, one_hot


def bench(backend, steps, batch, seed=0):
    rng = np.random.default_rng(seed)
    net = QNetwork.init(rng)
    sizes = np.asarray(net.layer_sizes, dtype=np.int64)
    X = one_hot(rng.integers(0, 2, batch))
    a = rng.integers(0, 14, batch)
    y = rng.uniform(0, 10, batch)
    eye = np.eye(2)
    params = net.params.copy()
    t0 = time.perf_counter()
    for _ in range(steps):
        backend.train_batch(params, sizes, X, a, y, 0.01, 1.0)
        backend.forward_batch(params, sizes, eye, 1.0)
    return (time.perf_counter() - t0) / steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args()
    names = ["python"]
    try:
        kernels.get_backend("compiled")
        names.insert(0, "compiled")
    except ImportError:
        print("compiled backend not built; timing the numpy fallback only")
    for batch in (1, 30, 60):
        times = {n: bench(kernels.get_backend(n), args.steps, batch) for n in names}
        line = "  ".join(f"{n}: {t * 1e6:7.2f} us/step" for n, t in times.items())
        if len(times) == 2:
            line += f"  speedup {times['python'] / times['compiled']:.1f}x"
        print(f"batch {batch:3d}  {line}")


if __name__ == "__main__":
    main()
