"""Compare the compiled and numpy move-scan backends.

    python benchmarks/bench_kernels.py [--sizes 10x20,20x50,40x80] [--repeat 3]
"""
import argparse
import statistics
import time

import numpy as np

from d2dcache import kernels
from d2dcache.model import default_scenario
from d2dcache.objective import ObjectiveContext
from d2dcache.solver import local_search


def time_solve(scenario, backend, repeat):
    runs, report = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        report = local_search(scenario, backend=backend)
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs), report


def time_scan(scenario, backend, repeat):
    """One full swap scan from the local-search solution (no early exit)."""
    kern = kernels.get_backend(backend)
    ctx = ObjectiveContext(scenario, local_search(scenario).solution)
    pool = np.ones((ctx.n_users, ctx.n_files), dtype=np.uint8)
    quotas = np.array(ctx.matroid.quotas, dtype=np.int64)
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        kern.find_swap(ctx.p, ctx.lam, ctx.E, ctx.x, pool, ctx.counts, quotas, ctx.pay, ctx.col,
                       ctx.qx, ctx.qy, np.inf, True)
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="10x20,20x50,40x80")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension to compare")
    print(f"{'size':>8} {'backend':>8} {'solve s':>9} {'swap scan s':>12} {'norm cost':>10} {'moves':>6}")
    for size in args.sizes.split(","):
        nu, nf = map(int, size.lower().split("x"))
        s = default_scenario(nu, nf, seed=args.seed)
        base = {}
        for b in backends:
            t_solve, rep = time_solve(s, b, args.repeat)
            t_scan = time_scan(s, b, args.repeat)
            base[b] = (t_solve, t_scan, rep.solution)
            print(f"{size:>8} {b:>8} {t_solve:9.4f} {t_scan:12.5f} {rep.normalized_cost:10.5f} "
                  f"{sum(rep.iterations.values()):6d}")
        if len(base) == 2:
            (ts_a, tc_a, ya), (ts_b, tc_b, yb) = base[backends[0]], base[backends[1]]
            same = "same" if ya == yb else "DIFFERENT"
            print(f"{'':>8} speedup solve {ts_b / ts_a:5.1f}x, scan {tc_b / tc_a:5.1f}x ({same} placement)")


if __name__ == "__main__":
    main()
