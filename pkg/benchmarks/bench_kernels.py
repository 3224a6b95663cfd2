"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import math
import timeit

import numpy as np

from okdroplet import _pykernels, kernels


def _cases():
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.standard_normal((1_000_000, 3)))
    y = np.ascontiguousarray(rng.standard_normal((1_000_000, 3)))
    a = np.ascontiguousarray(rng.standard_normal((3000, 3)))
    b = np.ascontiguousarray(rng.standard_normal((3000, 3)) + 2.0)
    eps = float(np.finfo(float).eps)
    targets = [math.log(q) for q in np.geomspace(1e-9, 0.999, 200)]

    def solve_all(be):
        for t in targets:
            be.brent_b1(t, 1e-6, math.pi / 3, 1e-300, 4 * eps, 200)

    return [
        ("pair_sums 1e6 pairs", lambda be: be.pair_sums(x, y)),
        ("cross_sum 3000x3000", lambda be: be.cross_sum(a, b, False)),
        ("cross_sum self 3000", lambda be: be.cross_sum(a, a, True)),
        ("brent_b1 x200", solve_all),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    compiled = kernels.compiled_backend
    if compiled is None:
        print("compiled backend not built; only the Python timings are shown")
    print(f"{'kernel':<24}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, fn in _cases():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if compiled is None:
            print(f"{name:<24}{t_py:>12.4f}{'-':>12}{'-':>10}")
            continue
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        print(f"{name:<24}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
