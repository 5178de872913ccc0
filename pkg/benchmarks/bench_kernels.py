"""Relaxation-sweep throughput, numba against numpy.

    python3 benchmarks/bench_kernels.py [--n 128 256 512] [--sweeps 200] [--csv out.csv]

Both backends run the same red-black sweeps from the same start, so the
final arrays are compared as well as the timings.
"""

import argparse
import csv
import sys
import time

import numpy as np

from degob import _backend, catalog, kernels, solver
from degob.grid import GridSpec


def setup(n, variant):
    spec = GridSpec(n)
    trace = solver.catalog_trace(catalog.u_star())
    problem = solver.DirichletProblem(spec, trace, variant)
    plan = kernels.Plan(spec.interior)
    code = kernels.OBSTACLE if variant == "obstacle" else kernels.SIGNED
    return problem, plan, code


def time_sweeps(backend, n, sweeps, variant, repeats=3):
    _backend.set_backend(backend)
    problem, plan, code = setup(n, variant)
    f = problem.forcing
    h2 = problem.spec.h ** 2
    omega = solver.optimal_omega(n)
    # warm-up (numba compilation, numpy allocation)
    u = problem.extension().copy()
    kernels.sweep(u, plan, f, h2, omega, code)
    best = np.inf
    for _ in range(repeats):
        u = problem.extension().copy()
        t0 = time.perf_counter()
        for _ in range(sweeps):
            kernels.sweep(u, plan, f, h2, omega, code)
        best = min(best, time.perf_counter() - t0)
    return best, u


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[128, 256, 512])
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--variant", choices=solver.VARIANTS, default="obstacle")
    p.add_argument("--csv")
    args = p.parse_args(argv)
    if not _backend.HAVE_NUMBA:
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1
    previous = _backend.get_backend()
    rows = []
    try:
        for n in args.n:
            t_nb, u_nb = time_sweeps("numba", n, args.sweeps, args.variant)
            t_np, u_np = time_sweeps("numpy", n, args.sweeps, args.variant)
            diff = float(np.max(np.abs(u_nb - u_np)))
            rows.append({"n": n, "sweeps": args.sweeps, "numba_s": t_nb, "numpy_s": t_np,
                         "speedup": t_np / t_nb, "max_abs_diff": diff})
            print(f"n={n:5d}  numba {t_nb * 1e3 / args.sweeps:8.3f} ms/sweep  "
                  f"numpy {t_np * 1e3 / args.sweeps:8.3f} ms/sweep  speedup {t_np / t_nb:6.2f}x  "
                  f"max|diff| {diff:.1e}")
    finally:
        _backend.set_backend(previous)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
