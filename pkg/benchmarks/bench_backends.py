#!/usr/bin/env python3
"""Time the numba and numpy hot-kernel paths side by side.

Covers the two kernels that dominate experiment runtime -- the
stay/up-shift probability arrays and the bin-parity labels -- plus a
composed coupling trial.  Reports per-call wall time, speedup and the
max absolute disagreement between backends.

Run:  python benchmarks/bench_backends.py [--size 2000000] [--repeats 3]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from parityshift import accel


def timeit(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def couple_trial(x: np.ndarray, u: np.ndarray, plan, backend: str) -> int:
    phi, gamma = accel.phi_gamma_backend(x, plan, backend)
    signs = np.where(u < phi, 1, np.where(u < phi + gamma, 0, -1)).astype(np.int8)
    return int(np.count_nonzero(signs == 0))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=12345)
    args = parser.parse_args()

    backends = ["numpy"]
    if accel.NUMBA_AVAILABLE:
        backends.insert(0, "numba")
    else:
        print("numba unavailable; timing the numpy path only")

    rng = np.random.default_rng(args.seed)
    x = rng.standard_normal(args.size)
    u = rng.random(args.size)

    print(f"active backend: {accel.BACKEND}; array size {args.size:,}; "
          f"best of {args.repeats}")
    header = f"{'kernel':<28}{'a':>7}" + "".join(f"{b:>12}" for b in backends) \
        + ("{:>10}{:>12}".format("speedup", "max|diff|") if len(backends) == 2 else "")
    print(header)
    print("-" * len(header))

    for a in (0.494, 2.0):
        plan = accel.plan_for(a, 1e-12)
        times = []
        results = []
        for backend in backends:
            accel.phi_gamma_backend(x[:1000], plan, backend)  # warm the JIT
            times.append(timeit(lambda b=backend: accel.phi_gamma_backend(x, plan, b),
                                args.repeats))
            results.append(accel.phi_gamma_backend(x, plan, backend))
        line = f"{'phi_gamma':<28}{a:>7.3f}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(backends) == 2:
            diff = max(
                float(np.max(np.abs(results[0][0] - results[1][0]))),
                float(np.max(np.abs(results[0][1] - results[1][1]))),
            )
            line += f"{times[1] / times[0]:>9.2f}x{diff:>12.2e}"
        print(line)

    for a in (2.0,):
        times = []
        sums = []
        for backend in backends:
            accel.parity_labels_and_sum_backend(x[:1000], a, backend)
            times.append(timeit(
                lambda b=backend: accel.parity_labels_and_sum_backend(x, a, b), args.repeats))
            sums.append(accel.parity_labels_and_sum_backend(x, a, backend)[1])
        line = f"{'parity_labels_and_sum':<28}{a:>7.3f}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(backends) == 2:
            line += f"{times[1] / times[0]:>9.2f}x{abs(sums[0] - sums[1]):>12.2e}"
        print(line)

    for a in (0.494,):
        plan = accel.plan_for(a, 1e-12)
        times = []
        zeros = []
        for backend in backends:
            couple_trial(x[:1000], u[:1000], plan, backend)
            times.append(timeit(lambda b=backend: couple_trial(x, u, plan, b), args.repeats))
            zeros.append(couple_trial(x, u, plan, backend))
        line = f"{'coupling trial (composed)':<28}{a:>7.3f}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(backends) == 2:
            line += f"{times[1] / times[0]:>9.2f}x{abs(zeros[0] - zeros[1]):>12.2e}"
        print(line)


if __name__ == "__main__":
    main()
