"""Time the shortest-delay sweep kernels: numba vs pure numpy.

    python3 benchmarks/bench_kernels.py [--sizes 50,100,200] [--repeat 3]

Runs a full all-sources sweep per Waxman graph and checks that both
backends return identical arrays.
"""

import argparse
import time

import numpy as np

from rpselect import WaxmanParams, waxman_generate
from rpselect._accel import HAS_NUMBA, sssp_numba, sssp_numpy


def all_sources(kernel, csr):
    indptr, indices, delay, cost = csr
    return [kernel(indptr, indices, delay, cost, s) for s in range(len(indptr) - 1)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,100,200")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    print(f"{'n':>5} {'edges':>6} {'numpy_s':>9} {'numba_s':>9} {'speedup':>8}  identical")
    for n in (int(x) for x in a.sizes.split(",")):
        g, _ = waxman_generate(WaxmanParams(n, 0.4, 0.4, seed=a.seed))
        csr = g.csr()
        t_np, ref = best_of(lambda: all_sources(sssp_numpy, csr), a.repeat)
        if not HAS_NUMBA:
            print(f"{n:>5} {g.edge_count:>6} {t_np:>9.4f} {'-':>9} {'-':>8}  numba unavailable")
            continue
        all_sources(sssp_numba, csr)  # compile outside the timed region
        t_nb, got = best_of(lambda: all_sources(sssp_numba, csr), a.repeat)
        same = all(np.array_equal(x, y) for r, q in zip(ref, got) for x, y in zip(r, q))
        print(f"{n:>5} {g.edge_count:>6} {t_np:>9.4f} {t_nb:>9.4f} {t_np / t_nb:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
