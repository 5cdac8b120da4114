"""Throughput of the closest-point kernel, compiled versus plain Python.

    python3 benchmarks/bench_closest_point.py [--points 2000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from latticecf import _accel
from latticecf.lattice import Lattice
from latticecf.search import TIE_RTOL, ClosestPointSearcher, closest_batch_numba, closest_batch_python


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"{'lattice':8s} {'points':>7s} {'python s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for name, n in (("A2", 2), ("D4", 4), ("E8", 8), ("E8", 16)):
        lat = Lattice.named(name, n)
        label = f"{name}/n={n}"
        s = ClosestPointSearcher(lat.basis)
        Y = np.ascontiguousarray(rng.normal(0, 3, (args.points, n)) @ s.Q)
        run = lambda k: k(s.R, Y, s.B, 1_000_000, TIE_RTOL)  # noqa: E731
        t_py, (z_py, _, _) = timed(lambda: run(closest_batch_python), args.repeat)
        if _accel.HAS_NUMBA:
            run(closest_batch_numba)  # compile (or load from cache) outside the timing
            t_nb, (z_nb, _, _) = timed(lambda: run(closest_batch_numba), args.repeat)
            assert np.array_equal(z_py, z_nb), "kernels disagree"
            print(f"{label:8s} {args.points:7d} {t_py:10.4f} {t_nb:10.4f} {t_py / t_nb:8.1f}x")
        else:
            print(f"{label:8s} {args.points:7d} {t_py:10.4f} {'n/a':>10s} {'n/a':>8s}")


if __name__ == "__main__":
    main()
