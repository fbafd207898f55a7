"""Time the numba kernels against the pure-numpy fallback.

Runs each kernel on identical inputs under both backends, checks the outputs
are bitwise identical, and prints a timing table with speedups.  The first
numba call per kernel is excluded from timing (JIT compilation).

Usage:
    python benchmarks/bench_kernels.py [--reps 1000000] [--cols 10] [--repeat 5]
"""

import argparse
import time

import numpy as np

from platformrates import kernels


def build_inputs(reps, cols, seed):
    rng = np.random.default_rng(seed)
    return {
        "control": rng.standard_normal(reps),
        "treatments": rng.standard_normal((reps, cols)),
        "w": rng.standard_normal(reps),
        "eps": rng.standard_normal((reps, cols)),
        "inv_se": rng.uniform(0.5, 2.0, size=cols),
        "loadings": rng.uniform(-0.8, 0.8, size=cols),
        "residual": 0.7,
        "thresholds": rng.uniform(1.0, 2.5, size=cols),
    }


def bench_one(fn, args, repeat):
    fn(*args)  # warm-up: JIT compile / page in
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--reps", type=int, default=1_000_000)
    parser.add_argument("--cols", type=int, default=10)
    parser.add_argument("--repeat", type=int, default=5,
                        help="timed runs per kernel; best is reported")
    parser.add_argument("--seed", type=int, default=0)
    ns = parser.parse_args()

    inp = build_inputs(ns.reps, ns.cols, ns.seed)
    cases = [
        ("shared_control_decisions", kernels.shared_control_decisions,
         (inp["control"], inp["treatments"], inp["inv_se"], inp["thresholds"])),
        ("one_factor_decisions", kernels.one_factor_decisions,
         (inp["w"], inp["eps"], inp["loadings"], inp["residual"], inp["thresholds"])),
        ("one_factor_counts", kernels.one_factor_counts,
         (inp["w"], inp["eps"], inp["loadings"], inp["residual"], inp["thresholds"])),
    ]

    try:
        kernels.select_backend("numba")
        have_numba = True
    except ImportError:
        have_numba = False
        print("numba not importable; timing the numpy backend only\n")

    rows = []
    for name, fn, args in cases:
        kernels.select_backend("numpy")
        t_np, out_np = bench_one(fn, args, ns.repeat)
        if have_numba:
            kernels.select_backend("numba")
            t_nb, out_nb = bench_one(fn, args, ns.repeat)
            if not np.array_equal(out_np, out_nb):
                raise SystemExit(f"{name}: backends disagree")
            rows.append((name, t_np, t_nb, t_np / t_nb))
        else:
            rows.append((name, t_np, None, None))
    kernels.select_backend(None)

    print(f"reps={ns.reps} cols={ns.cols} (best of {ns.repeat})")
    header = f"{'kernel':<28} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, t_np, t_nb, speedup in rows:
        if t_nb is None:
            print(f"{name:<28} {t_np * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
        else:
            print(f"{name:<28} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {speedup:>7.2f}x")
    if have_numba:
        print("\noutputs bitwise identical across backends")


if __name__ == "__main__":
    main()
