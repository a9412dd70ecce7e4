"""Time the compiled and numpy Jacobi kernels on the experiment grids.

    python benchmarks/bench_jacobi.py [--sizes 61 121] [--repeat 3]
"""

import argparse
import time

import numpy as np

from umblt import _backend
from umblt.grid import DirectionSet, Grid2D, ScalarField
from umblt.medium import OpticalMedium
from umblt.transport import SolverSettings, solve_adjoint, solve_forward


def experiment1_medium(n):
    g = Grid2D.square(n, side=0.2)
    sigma = ScalarField.from_function(g, lambda x, y: 0.1 + 0.1 * x)
    return OpticalMedium.henyey_greenstein(sigma, DirectionSet(8), 0.5)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sizes", type=int, nargs="+", default=[61, 121])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"available backends: {', '.join(_backend.AVAILABLE)}")
    print(f"{'grid':>6} {'solve':>8} {'backend':>8} {'sweeps':>7} {'seconds':>9} {'ms/sweep':>9} {'speedup':>8}")
    for n in args.sizes:
        m = experiment1_medium(n)
        S = ScalarField.from_function(m.grid, lambda x, y: np.exp(-100 * ((x - 0.08) ** 2 + (y - 0.12) ** 2)))
        jobs = {
            "forward": lambda st: solve_forward(m, S, settings=st),
            "adjoint": lambda st: solve_adjoint(m, 1.0, st),
        }
        for name, job in jobs.items():
            results = {}
            for backend in _backend.AVAILABLE:
                secs, sol = best_of(lambda: job(SolverSettings(backend=backend)), args.repeat)
                results[backend] = (secs, sol)
            ref = results["python"][0]
            for backend, (secs, sol) in results.items():
                print(
                    f"{n:>6} {name:>8} {backend:>8} {sol.iterations:>7} {secs:>9.3f} "
                    f"{1e3 * secs / sol.iterations:>9.3f} {ref / secs:>7.1f}x"
                )
            if len(results) == 2:
                a, b = (r[1].field.values for r in results.values())
                print(f"{'':>6} max |cython - python| = {np.abs(a - b).max():.2e}")


if __name__ == "__main__":
    main()
