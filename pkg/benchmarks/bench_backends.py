"""Timing comparison: compiled kernels vs the numpy fallback.

Runs the two hot kernels (CART tree growth, SMO dual solve) through both
backends on identical inputs, checks the outputs agree bit-for-bit, and
prints a small table of timings.  Usage:

    python3 benchmarks/bench_backends.py [--rows 2000] [--features 10] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from emhlab.backends import HAS_COMPILED_CORE, py_core

if HAS_COMPILED_CORE:
    from emhlab import _core
else:
    _core = None


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_tree(rows, features, repeat, rng):
    XT = np.ascontiguousarray(rng.normal(size=(features, rows)))
    y = (XT[0] + 0.5 * rng.normal(size=rows) > 0).astype(np.int8)
    idx = rng.integers(0, rows, size=rows, dtype=np.int64)
    mf = max(1, int(np.ceil(np.sqrt(features))))

    t_py, ref = _time(lambda: py_core.grow_tree(XT, y, idx, mf, 1234, 1), repeat)
    print(f"grow_tree   python    {t_py * 1e3:9.2f} ms   ({ref[0].shape[0]} nodes)")
    if _core is None:
        return
    t_c, got = _time(lambda: _core.grow_tree(XT, y, idx, mf, 1234, 1), repeat)
    same = all(np.array_equal(a, b) for a, b in zip(ref, got))
    print(f"grow_tree   compiled  {t_c * 1e3:9.2f} ms   "
          f"speedup {t_py / t_c:5.1f}x   identical={same}")


def bench_smo(rows, features, repeat, rng):
    X = rng.normal(size=(rows, features))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=rows) > 0, 1.0, -1.0)
    sq = (X * X).sum(1)
    K = np.exp(-(1.0 / features) * np.maximum(
        sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0))
    K = np.ascontiguousarray(K)
    C, tol, cap = 1.0, 1e-3, 50 * rows + 1000

    def run(mod):
        alpha = np.zeros(rows)
        E = -y.copy()
        b, steps, conv = mod.smo_solve(K, y, C, tol, alpha, E, 0.0, cap)
        return alpha, b, steps, conv

    t_py, ref = _time(lambda: run(py_core), repeat)
    print(f"smo_solve   python    {t_py * 1e3:9.2f} ms   "
          f"(steps={ref[2]}, converged={ref[3]})")
    if _core is None:
        return
    t_c, got = _time(lambda: run(_core), repeat)
    same = np.array_equal(ref[0], got[0]) and ref[1] == got[1] and ref[2] == got[2]
    print(f"smo_solve   compiled  {t_c * 1e3:9.2f} ms   "
          f"speedup {t_py / t_c:5.1f}x   identical={same}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=2000)
    parser.add_argument("--features", type=int, default=10)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    print(f"rows={args.rows} features={args.features} repeat={args.repeat} "
          f"compiled_available={HAS_COMPILED_CORE}")
    rng = np.random.default_rng(2024)
    bench_tree(args.rows, args.features, args.repeat, rng)
    bench_smo(min(args.rows, 1200), args.features, args.repeat, rng)


if __name__ == "__main__":
    main()
