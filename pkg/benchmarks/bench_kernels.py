"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]

Prints best-of-``repeat`` wall times per problem size and the speedup of
the compiled backend. Exits quietly with a note if the extension was not
built.
"""
import argparse
import time

import numpy as np

from fmrbench import _kernels_py as py

try:
    from fmrbench import _kernels as cy
except ImportError:  # extension not built
    cy = None


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def lasso_case(rng, n, p):
    X = rng.standard_normal((n, p))
    X = (X - X.mean(0)) / X.std(0, ddof=1)
    y = X @ rng.standard_normal(p) + rng.standard_normal(n)
    return np.asfortranarray(X), y


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="small sizes only")
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled backend not available; build with `pip install -e . --no-build-isolation`")
        return
    rng = np.random.default_rng(0)

    lasso_sizes = [(100, 5), (600, 10)] if args.quick else [(100, 5), (600, 10), (2000, 30)]
    print(f"{'kernel':<12}{'size':>12}{'python s':>12}{'cython s':>12}{'speedup':>10}")
    for n, p in lasso_sizes:
        X, y = lasso_case(rng, n, p)
        run = lambda k: k.lasso_cd(X, y, 0.05, 1e-9, 10_000)  # noqa: E731
        b_py, b_cy = run(py)[1], run(cy)[1]
        assert np.allclose(b_py, b_cy, atol=1e-10)
        t_py, t_cy = best_time(lambda: run(py), args.repeat), best_time(lambda: run(cy), args.repeat)
        print(f"{'lasso_cd':<12}{f'{n}x{p}':>12}{t_py:>12.5f}{t_cy:>12.5f}{t_py / t_cy:>10.1f}")

    svd_sizes = [(50, 6), (300, 8)] if args.quick else [(50, 6), (300, 8), (1728, 8), (200, 40)]
    for m, n in svd_sizes:
        A = rng.standard_normal((m, n))
        s_py, s_cy = py.jacobi_svd(A)[1], cy.jacobi_svd(A)[1]
        assert np.allclose(s_py, s_cy, rtol=1e-10)
        t_py = best_time(lambda: py.jacobi_svd(A), args.repeat)
        t_cy = best_time(lambda: cy.jacobi_svd(A), args.repeat)
        print(f"{'jacobi_svd':<12}{f'{m}x{n}':>12}{t_py:>12.5f}{t_cy:>12.5f}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
