"""Time the Monte Carlo kernels under both backends.

Runs each kernel on an identical workload with PEARL_LAB_BACKEND forced to
numba and then numpy, checks the outputs are bit-identical, and prints a
timing table. The numba timings exclude the first (compiling) call.

Usage: python3 benchmarks/bench_kernels.py [--steps N] [--repeats R]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from pearl_lab import kernels

WORKLOADS = [
    ("sd gamma=4 a=0.8", lambda n, seed: kernels.sd_step_finalized(0.8, 4, n, seed)),
    ("sd gamma=8 a=0.6", lambda n, seed: kernels.sd_step_finalized(0.6, 8, n, seed)),
    ("pearl gamma=4 a=0.8", lambda n, seed: kernels.pearl_step_finalized(0.8, 4, n, seed)[0]),
    ("pearl gamma=8 a=0.6", lambda n, seed: kernels.pearl_step_finalized(0.6, 8, n, seed)[0]),
    ("segments a=0.95", lambda n, seed: kernels.segment_accept_runs(0.95, n, seed)),
]


def _timed(fn, n: int, seed: int, repeats: int) -> tuple[float, np.ndarray]:
    out = fn(n, seed)  # warmup; also the compile call under numba
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(n, seed)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=1_000_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        print("numba is not importable; nothing to compare")
        return 1

    print(f"workload size {args.steps:,} steps, best of {args.repeats}\n")
    print(f"{'kernel':<22} {'numba':>10} {'numpy':>10} {'ratio':>7}  identical")
    for name, fn in WORKLOADS:
        times = {}
        outs = {}
        for backend in ("numba", "numpy"):
            os.environ["PEARL_LAB_BACKEND"] = backend
            times[backend], outs[backend] = _timed(fn, args.steps, 12345, args.repeats)
        same = bool(np.array_equal(outs["numba"], outs["numpy"]))
        ratio = times["numpy"] / times["numba"]
        print(
            f"{name:<22} {times['numba'] * 1e3:>8.2f}ms {times['numpy'] * 1e3:>8.2f}ms "
            f"{ratio:>6.1f}x  {same}"
        )
        if not same:
            raise SystemExit(f"backend outputs differ for {name}")
    os.environ.pop("PEARL_LAB_BACKEND", None)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
