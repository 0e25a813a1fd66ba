"""Timing comparison of the compiled and interpreted queueing kernels.

The two sequential scans (multi-server FCFS start times and the
non-preemptive priority loop) are the only parts of a simulation that cannot
be vectorized. This script times the numba-compiled versions against the
plain-Python implementations on the same inputs and checks that they return
bit-identical arrays.

Run from the repository root:

    python benchmarks/bench_kernels.py --jobs 200000

With AOISCHED_NO_NUMBA=1 (or numba missing) the compiled path is the
interpreted one and the speedup column reads 1.0x.
"""

import argparse
import time

import numpy as np

from aoisched import _kernels
from aoisched.simulator import group_by_class


def _best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_inputs(n_jobs, n_classes, n_vms, seed):
    rng = np.random.default_rng(seed)
    arrivals = np.sort(rng.uniform(0.0, n_jobs * 10.0, n_jobs))
    cls = rng.integers(0, n_classes, n_jobs)
    vm_idx = rng.integers(0, n_vms, n_jobs)
    s1 = rng.exponential(20.0, n_jobs) * (1.0 + 0.1 * vm_idx)
    s2 = rng.exponential(0.5, n_jobs)
    key = rng.uniform(0.1, 1.0, n_classes)[cls]
    return arrivals, cls, vm_idx, s1, s2, key


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--jobs", type=int, default=200_000)
    parser.add_argument("--classes", type=int, default=8)
    parser.add_argument("--vms", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    arrivals, cls, vm_idx, s1, s2, key = make_inputs(
        args.jobs, args.classes, args.vms, args.seed
    )
    # Priority kernel consumes compute departures sorted by exit time.
    dep1_order = np.argsort(arrivals, kind="stable")
    grouped, offsets = group_by_class(cls, dep1_order, args.classes)

    # Warm up the JIT so compile time stays out of the measurements.
    _kernels.fcfs_start(arrivals[:64], vm_idx[:64], s1[:64], args.vms)
    g64, o64 = group_by_class(cls[:64], np.argsort(arrivals[:64]), args.classes)
    _kernels.priority_start(arrivals[:64], g64, o64, key[:64], s2[:64])

    print(f"backend: {_kernels.backend_name()}   jobs: {args.jobs}")
    print(f"{'kernel':<10} {'compiled':>10} {'python':>10} {'speedup':>9}")
    rows = [
        (
            "fcfs",
            (_kernels.fcfs_start, (arrivals, vm_idx, s1, args.vms)),
            (_kernels._fcfs_start_impl, (arrivals, vm_idx, s1, args.vms)),
        ),
        (
            "priority",
            (_kernels.priority_start, (arrivals, grouped, offsets, key, s2)),
            (_kernels._priority_start_impl, (arrivals, grouped, offsets, key, s2)),
        ),
    ]
    for name, (fast_fn, fast_args), (slow_fn, slow_args) in rows:
        fast = _best_of(fast_fn, fast_args, args.repeats)
        slow = _best_of(slow_fn, slow_args, args.repeats)
        identical = np.array_equal(fast_fn(*fast_args), slow_fn(*slow_args))
        print(
            f"{name:<10} {fast * 1e3:>8.1f}ms {slow * 1e3:>8.1f}ms "
            f"{slow / fast:>8.1f}x  bit-identical: {identical}"
        )


if __name__ == "__main__":
    main()
