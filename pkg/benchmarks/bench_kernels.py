"""Benchmark the compiled distance kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from pglee import _pykernels

try:
    from pglee import _ckernels
except ImportError:
    _ckernels = None

CASES = [
    ("small graphs", 200, 8, 16),
    ("trigger clustering", 2000, 38, 64),
    ("argument clustering", 5000, 24, 64),
    ("sweep worst case", 10000, 50, 128),
]


def timeit(fn, points, centers, repeats):
    fn(points, centers)  # warm up
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(points, centers)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'case':<22} {'n':>6} {'k':>4} {'d':>4} "
          f"{'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for name, n, k, d in CASES:
        points = rng.normal(0, 1, (n, d))
        centers = rng.normal(0, 1, (k, d))
        py = timeit(_pykernels.pairwise_sqdist, points, centers, args.repeats)
        if _ckernels is None:
            print(f"{name:<22} {n:>6} {k:>4} {d:>4} {py * 1e3:>12.3f} "
                  f"{'unavailable':>12} {'-':>8}")
            continue
        cy = timeit(_ckernels.pairwise_sqdist, points, centers, args.repeats)
        a = _ckernels.pairwise_sqdist(points, centers)
        b = _pykernels.pairwise_sqdist(points, centers)
        assert np.array_equal(a, b), "backends disagree"
        print(f"{name:<22} {n:>6} {k:>4} {d:>4} {py * 1e3:>12.3f} "
              f"{cy * 1e3:>12.3f} {py / cy:>7.2f}x")


if __name__ == "__main__":
    main()
