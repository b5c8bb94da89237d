"""Compiled kernels against their pure-Python fallbacks.

Run with ``python benchmarks/bench_kernels.py``; prints one line per case.
"""
import argparse
import time

import numpy as np

from commlap import _kernels
from commlap._kernels import _jacobi_py
from commlap.cco import _Evaluator, make_problem
from commlap.harness.datasets import circles_pair, ring_pair, swissroll_pair


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_jacobi(sizes, repeats):
    rng = np.random.default_rng(0)
    compiled = _kernels.jacobi_sweep if _kernels.BACKEND == "cython" else None
    for n in sizes:
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, n))
        A, B = A + A.T, B + B.T

        def run(sweep):
            def go():
                a, b, v = A.copy(), B.copy(), np.eye(n)
                sweep(a, b, v, 1e-10)

            return go

        tp = best_of(run(_jacobi_py.jacobi_sweep), repeats)
        line = f"jacobi sweep  n={n:4d}  python {tp * 1e3:9.3f} ms"
        if compiled is not None:
            tc = best_of(run(compiled), repeats)
            line += f"  cython {tc * 1e3:9.3f} ms  speedup {tp / tc:7.1f}x"
        print(line)


def bench_cco(repeats):
    for ds in (ring_pair(), circles_pair(), swissroll_pair()):
        p = make_problem(ds.g1, ds.g2)
        x = np.concatenate([p.u0_1, p.u0_2])
        dense = _Evaluator(p, "dense")
        td = best_of(lambda: dense.fg(x), repeats)
        line = f"cco cost+grad {ds.name:15s} n={ds.n:4d} M=({len(p.pattern1)},{len(p.pattern2)})  dense {td * 1e3:8.3f} ms"
        if _kernels.CommutatorKernel is not None:
            kern = _Evaluator(p, "kernel")
            tk = best_of(lambda: kern.fg(x), repeats)
            line += f"  cython {tk * 1e3:8.3f} ms  speedup {td / tk:6.1f}x"
        print(line)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[25, 50, 100, 200])
    a = ap.parse_args()
    print(f"backend: {_kernels.BACKEND}")
    bench_jacobi(a.sizes, a.repeats)
    bench_cco(a.repeats)


if __name__ == "__main__":
    main()
