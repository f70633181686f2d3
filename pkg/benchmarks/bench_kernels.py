"""Compare the compiled kernels with the pure-Python fallback.

Run ``python3 benchmarks/bench_kernels.py``. Sizes match the 33-bus
estimation problem (561 symmetric complex parameters, 1122 real unknowns).
"""
import argparse
import importlib
import timeit

import numpy as np

from gridid import _kernels_py


def cd_problem(p: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3 * p, p))
    h = a.T @ a / (3 * p)
    g = rng.standard_normal(p)
    pen = rng.uniform(0.0, 0.5, p)
    return h, g, pen


def time_cd(impl, h, g, pen, sweeps, repeat):
    def run():
        x = np.zeros_like(g)
        impl.cd_weighted_l1(h, g, pen, x, h @ x, 0.0, sweeps)

    return min(timeit.repeat(run, number=1, repeat=repeat))


def time_scatter(impl, n_blocks, size, repeat):
    rng = np.random.default_rng(1)
    blocks = rng.standard_normal((n_blocks, 4, 4))
    index = rng.integers(0, size, (n_blocks, 4)).astype(np.intp)
    h = np.zeros((size, size))
    return min(timeit.repeat(lambda: impl.scatter_add_blocks(h, blocks, index), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1122)
    ap.add_argument("--sweeps", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    try:
        compiled = importlib.import_module("gridid._kernels")
    except ImportError:
        compiled = None
        print("compiled extension not available; timing the fallback only")

    h, g, pen = cd_problem(args.size)
    rows = [("coordinate descent", lambda m: time_cd(m, h, g, pen, args.sweeps, args.repeat)),
            ("block scatter-add", lambda m: time_scatter(m, 20_000, args.size, args.repeat))]
    print(f"{'kernel':<20}{'python [s]':>12}{'cython [s]':>12}{'speed-up':>10}")
    for name, fn in rows:
        t_py = fn(_kernels_py)
        if compiled is None:
            print(f"{name:<20}{t_py:>12.4f}{'-':>12}{'-':>10}")
        else:
            t_c = fn(compiled)
            print(f"{name:<20}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
