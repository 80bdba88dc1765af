#!/usr/bin/env python3
"""Benchmark the compiled recursion kernels against the NumPy fallback.

Run as ``python benchmarks/bench_kernels.py``; the compiled extension must
be built (pip install -e .) for the comparison to be meaningful.
"""

import time

import numpy as np

from tsproj.kernels import _ref

try:
    from tsproj import _core
except ImportError:
    _core = None


def timeit(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    rows = []
    for T, S, p, q in [(500, 1, 5, 5), (4000, 1, 5, 5),
                       (500, 4000, 5, 5), (2000, 4000, 2, 2)]:
        y = rng.normal(size=T)
        e = rng.normal(size=T)
        phi = np.full(p, 0.5 / p)
        theta = np.full(q, 0.5 / q)
        if S == 1:
            args_sim = (0.0, phi, theta, e)
            args_res = (y, 0.0, phi, theta)
            cases = [("simulate", "simulate_core", args_sim),
                     ("residuals", "residuals_core", args_res)]
        else:
            cs = np.zeros(S)
            phis = rng.uniform(-0.4 / p, 0.4 / p, (S, p))
            thetas = rng.uniform(-0.4 / q, 0.4 / q, (S, q))
            cases = [("batch residuals", "batch_residuals_core",
                      (y, cs, phis, thetas))]
        for label, fname, args in cases:
            t_py = timeit(getattr(_ref, fname), *args)
            if _core is not None:
                t_cy = timeit(getattr(_core, fname), *args)
                speedup = t_py / t_cy
                rows.append((label, T, S, t_py, t_cy, speedup))
            else:
                rows.append((label, T, S, t_py, float("nan"), float("nan")))

    header = f"{'kernel':<16} {'T':>5} {'S':>5} {'numpy (s)':>12} {'cython (s)':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, T, S, t_py, t_cy, sp in rows:
        print(f"{label:<16} {T:>5} {S:>5} {t_py:>12.6f} {t_cy:>12.6f} {sp:>8.1f}")
    if _core is None:
        print("\ncompiled extension not available; build with `pip install -e .`")


if __name__ == "__main__":
    main()
