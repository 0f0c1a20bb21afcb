"""Robin convergence study on the unit upper hemisphere.

Solves Lap_S u = f with d_n u + kappa u = g for the degree-2/3 harmonic test
solution and prints the error table, with and without the exact conormal.

    python3 scripts/run_convergence.py --dx 0.1 0.05 0.025 --kappa 1
"""

import argparse
import time

from cpband import UpperHemisphere, build_band, build_operators, solve_robin
from cpband.cli import observed_orders
from cpband.problems import hemisphere_robin_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dx", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    ap.add_argument("--kappa", type=float, default=1.0)
    ap.add_argument("--backend", default="auto")
    args = ap.parse_args()

    surface = UpperHemisphere(1.0)
    problem, exact = hemisphere_robin_problem(args.kappa)
    results = {"approx": [], "analytic": []}
    sizes = []
    for dx in args.dx:
        t0 = time.perf_counter()
        grid, cls = build_band(surface, dx)
        sizes.append(grid.m)
        for mode in results:
            ops = build_operators(grid, cls, surface, conormal=mode)
            rep = solve_robin(ops, problem, cls, backend=args.backend, exact=exact)
            results[mode].append(rep.error_vs_exact)
        print(f"dx={dx:g}  m={grid.m}  ({time.perf_counter() - t0:.1f}s)", flush=True)

    for mode, errs in results.items():
        print(f"\nconormal: {mode}")
        print(f"{'dx':>8} {'m':>9} {'rel. max error':>15} {'order':>7}")
        for dx, m, e, o in zip(args.dx, sizes, errs, observed_orders(args.dx, errs)):
            print(f"{dx:>8g} {m:>9d} {e:>15.4e} {'--' if o is None else f'{o:7.3f}':>7}")


if __name__ == "__main__":
    main()
