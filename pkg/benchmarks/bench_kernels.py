"""Time the hot kernels under the numba and pure-numpy backends.

    python3 benchmarks/bench_kernels.py --N 2000 --n 200 --d 4

Both backends are exercised in one process by flipping the backend switch
at call time; the numba timings exclude compilation (one warm-up call).
"""
import argparse
import time

import numpy as np

from splitkit import _accel
from splitkit.energy import dist_sums
from splitkit.nn_index import NNIndex
from splitkit.solver import _Problem, init_points, make_rng
from splitkit.splitter import farthest_pair, sequential_nn_subsample


def best_of(fn, reps):
    fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = make_rng(args.seed)
    x = rng.standard_normal((args.N, args.d))
    prob = _Problem(x, None, 1e-10)
    z = init_points(x, args.n, args.seed)
    small = x[: min(args.N, 1500)]
    index = NNIndex(x)

    kernels = {
        "dist_sums": lambda: dist_sums(z, x),
        "mm_sweep": lambda: prob.sweep(z),
        "nn_subsample": lambda: sequential_nn_subsample(z, x),
        "nn_query": lambda: [index.nearest(q) for q in z],
        "nn_build": lambda: NNIndex(x),
        "farthest_pair": lambda: farthest_pair(small),
    }
    if not _accel.USE_NUMBA:
        print("numba backend disabled; timing numpy only")
    print(f"N={args.N} n={args.n} d={args.d} (best of {args.reps})")
    print(f"{'kernel':<15}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in kernels.items():
        fast = best_of(fn, args.reps) if _accel.USE_NUMBA else float("nan")
        saved = _accel.USE_NUMBA
        _accel.USE_NUMBA = False
        try:
            slow = best_of(fn, args.reps)
        finally:
            _accel.USE_NUMBA = saved
        print(f"{name:<15}{fast:>12.4f}{slow:>12.4f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
