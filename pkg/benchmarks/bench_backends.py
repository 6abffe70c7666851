#!/usr/bin/env python3
"""Time the compiled kernels against the NumPy fallback.

Usage:
    python benchmarks/bench_backends.py [--repeats N]

Covers the hot paths: multimodal eval/grad at trajectory-sized dimensions
and the fused SGD/Adam updates at network-sized parameter counts.
"""
import argparse
import time

import numpy as np

from loganneal import _pykernels


def _timeit(fn, repeats):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def bench(kernels_a, kernels_b, label_a, label_b, repeats):
    rng = np.random.default_rng(0)
    rows = []

    for dim in (2, 10, 100):
        x = rng.uniform(-5, 5, size=dim)
        for name in ("ackley_eval", "ackley_grad", "rastrigin_grad", "griewank_grad"):
            fa = getattr(kernels_a, name)
            fb = getattr(kernels_b, name)
            rows.append(
                (f"{name} (n={dim})", _timeit(lambda: fa(x), repeats),
                 _timeit(lambda: fb(x), repeats))
            )

    for n in (66, 1000, 100_000):
        x = rng.standard_normal(n)
        g = rng.standard_normal(n)
        v = np.zeros(n)
        m = np.zeros(n)
        v2 = np.zeros(n)
        rows.append(
            (
                f"sgd_update (n={n})",
                _timeit(lambda: kernels_a.sgd_update(x, g, v, 1e-9, 0.9, 0.0, 5e-4, False), repeats),
                _timeit(lambda: kernels_b.sgd_update(x, g, v, 1e-9, 0.9, 0.0, 5e-4, False), repeats),
            )
        )
        rows.append(
            (
                f"adam_update (n={n})",
                _timeit(lambda: kernels_a.adam_update(x, g, m, v2, 1e-9, 0.9, 0.999, 1e-8, 0.0, 0.1, 0.001), repeats),
                _timeit(lambda: kernels_b.adam_update(x, g, m, v2, 1e-9, 0.9, 0.999, 1e-8, 0.0, 0.1, 0.001), repeats),
            )
        )

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {label_a:>12}  {label_b:>12}  {'speedup':>8}")
    for name, ta, tb in rows:
        print(f"{name:<{width}}  {ta * 1e6:>10.2f}us  {tb * 1e6:>10.2f}us  {tb / ta:>7.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    try:
        from loganneal import _kernels
    except ImportError:
        print("compiled kernels are not built; nothing to compare")
        print("(reinstall with a C compiler to benchmark the extension)")
        return

    bench(_kernels, _pykernels, "compiled", "numpy", args.repeats)


if __name__ == "__main__":
    main()
