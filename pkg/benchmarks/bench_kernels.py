#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy twins.

Run as ``python benchmarks/bench_kernels.py [n] [dim]``. The same
workloads are fed to both backends; the table reports median wall time
per call and the speedup of the compiled path.
"""

import sys
import time

import numpy as np

from instascope.kernels import numba_impl, numpy_impl


def median_time(func, *args, repeats=9, warmup=2):
    for _ in range(warmup):
        func(*args)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        func(*args)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
    dim = int(sys.argv[2]) if len(sys.argv) > 2 else 5
    rng = np.random.default_rng(0)
    X = rng.uniform(-5.0, 5.0, (n, dim))
    y = rng.standard_normal(n)
    dist = numpy_impl.pairwise_distances(X)
    grid = np.linspace(y.min(), y.max(), 512)

    cases = [
        ("tosz", (X,)),
        ("tasy", (X, 0.2, dim)),
        ("pairwise_distances", (X,)),
        ("nearest_and_better", (dist, y)),
        ("nn_tour_order", (dist,)),
        ("kde_gaussian", (y, grid, 0.2)),
    ]

    print(f"kernel benchmark: n={n}, dim={dim} (times in ms per call)")
    print(f"{'kernel':<22}{'numpy':>10}{'numba':>10}{'speedup':>9}")
    for name, args in cases:
        t_np = median_time(getattr(numpy_impl, name), *args)
        t_nb = median_time(getattr(numba_impl, name), *args)
        ratio = t_np / t_nb if t_nb > 0 else float("inf")
        print(f"{name:<22}{t_np * 1e3:>10.3f}{t_nb * 1e3:>10.3f}{ratio:>8.1f}x")


if __name__ == "__main__":
    main()
