"""Compiled core vs numpy fallback on the hot kernels.

    python3 benchmarks/bench_core.py [--repeat 3] [--size 200000]
"""

import argparse
import time

import numpy as np

from helmsing import _kernels
from helmsing.quadrature import planar_kernel_table


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(size):
    rng = np.random.default_rng(0)
    x = rng.uniform(1e-3, 60.0, size)
    table = planar_kernel_table(128, 1.0)
    f = rng.standard_normal((128, 128))
    grid = -64.0 + np.arange(128.0)
    cx, cy = (a.ravel() for a in np.meshgrid(grid, grid, indexing="ij"))
    w = rng.standard_normal(cx.size)
    t = np.linspace(70.0, 256.0, 200)
    return {
        "besseljy nu=0.5": lambda: _kernels.besseljy(0.5, x),
        "besseljy nu=0": lambda: _kernels.besseljy(0.0, x),
        "besseljy nu=2.3": lambda: _kernels.besseljy(2.3, x),
        "planar_apply G=128": lambda: _kernels.planar_apply(table, f),
        "phi2_point_sum 200x16384": lambda: _kernels.phi2_point_sum(t, 0.5 * t, cx, cy, w),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=200_000, help="points per Bessel call")
    args = ap.parse_args(argv)
    if not _kernels.HAS_CORE:
        print("compiled core not built; only the fallback can run")
    table = cases(args.size)
    backends = ["python"] + (["compiled"] if _kernels.HAS_CORE else [])
    results = {}
    for name in backends:
        prev = _kernels.set_backend(name)
        try:
            results[name] = {key: best_time(fn, args.repeat) for key, fn in table.items()}
        finally:
            _kernels.set_backend(prev)
    print(f"{'kernel':28s} {'python [s]':>12s} {'compiled [s]':>13s} {'speedup':>8s}")
    for key in table:
        py = results["python"][key]
        if "compiled" in results:
            co = results["compiled"][key]
            print(f"{key:28s} {py:12.4f} {co:13.4f} {py / co:8.1f}")
        else:
            print(f"{key:28s} {py:12.4f} {'-':>13s} {'-':>8s}")
    print(f"threads (HELMSING_THREADS): {_kernels.threads()}")


if __name__ == "__main__":
    main()
