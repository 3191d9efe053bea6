"""Timing of the compiled prox kernels against their numpy fallbacks.

Usage: ``python benchmarks/bench_kernels.py [--sizes 100 10000] [--repeat 200]``.
"""

import argparse
import timeit

import numpy as np

from inexactapg import _kernels_py as py

try:
    from inexactapg import _kernels as cy
except ImportError:
    cy = None


def cases(n, rng):
    z = rng.standard_normal(n)
    x = py.soft_threshold(z, 0.5)
    v = rng.standard_normal(n)
    lo, hi = -np.ones(n), np.ones(n)
    xb = np.clip(z, -1.0, 1.0)
    return {
        "soft_threshold": lambda k: k.soft_threshold(z, 0.5),
        "l1_subdiff_distance": lambda k: k.l1_subdiff_distance(x, v, 0.5),
        "box_subdiff_distance": lambda k: k.box_subdiff_distance(xb, v, lo, hi),
        "project_simplex": lambda k: k.project_simplex(z, 1.0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 1000, 100000])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not built; timing the python kernels only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'n':>8}{'python us':>12}{'compiled us':>13}{'speedup':>9}")
    for n in args.sizes:
        for name, call in cases(n, rng).items():
            t_py = min(timeit.repeat(lambda: call(py), number=args.repeat, repeat=3)) / args.repeat * 1e6
            if cy is None:
                print(f"{name:<22}{n:>8}{t_py:>12.2f}{'-':>13}{'-':>9}")
                continue
            t_cy = min(timeit.repeat(lambda: call(cy), number=args.repeat, repeat=3)) / args.repeat * 1e6
            print(f"{name:<22}{n:>8}{t_py:>12.2f}{t_cy:>13.2f}{t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
