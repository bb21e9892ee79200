"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Prints one row per workload with the best-of-``repeat`` wall time of each
implementation and the largest difference between their outputs.
"""
import argparse
import time

import numpy as np

from hclab import _kernels


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _diff(a, b):
    if isinstance(a, tuple):
        return max(float(np.max(np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
                   for x, y in zip(a, b))
    return float(np.max(np.abs(a - b)))


def workloads(rng):
    for m, steps in ((3, 200_000), (16, 20_000), (64, 5_000), (384, 1_000)):
        S = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2 * m)
        S = S / np.linalg.norm(S, 2)
        x = rng.standard_normal(m) + 0j
        yield f"propagate m={m} steps={steps}", "propagate", (S, x, steps)
    X = rng.standard_normal((1_000_000, 3)) + 1j * rng.standard_normal((1_000_000, 3))
    yield "ball_mask T=1e6 m=3", "ball_mask", (X, np.zeros(3, complex), 1.0)
    s = np.linspace(-np.pi, np.pi, 1024, endpoint=False)
    yield "weight check N=1024", "weight_worst_log_ratio", (-np.abs(s), s, 0.0, 1.0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; install with Cython available")
    rng = np.random.default_rng(args.seed)
    print(f"{'workload':<34}{'cython s':>10}{'python s':>10}{'speedup':>9}{'max diff':>11}")
    for label, name, call_args in workloads(rng):
        tc, oc = _best(lambda: getattr(_kernels.compiled, name)(*call_args), args.repeat)
        tp, op = _best(lambda: getattr(_kernels.python, name)(*call_args), args.repeat)
        print(f"{label:<34}{tc:>10.4f}{tp:>10.4f}{tp / tc:>9.1f}{_diff(oc, op):>11.1e}")


if __name__ == "__main__":
    main()
