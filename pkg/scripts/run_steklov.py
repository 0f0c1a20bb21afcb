"""Steklov eigenvalues on the hemisphere (compared with the unit disk) or the Moebius strip.

    python3 scripts/run_steklov.py --surface hemisphere --dx 0.1 0.05 0.025
    python3 scripts/run_steklov.py --surface mobius --dx 0.05 --k 10
"""

import argparse

import numpy as np

from cpband import build_band, build_operators, make_surface, solve_steklov
from cpband.cli import disk_spectrum, observed_orders


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--surface", default="hemisphere", choices=["hemisphere", "mobius"])
    ap.add_argument("--dx", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    ap.add_argument("--k", type=int, default=7)
    ap.add_argument("--shift", type=float, default=-0.1)
    ap.add_argument("--backend", default="auto")
    args = ap.parse_args()

    surface = make_surface(args.surface)
    ref = disk_spectrum(args.k) if args.surface == "hemisphere" else None
    errs = []
    for dx in args.dx:
        grid, cls = build_band(surface, dx)
        ops = build_operators(grid, cls, surface)
        rep = solve_steklov(ops, args.k, args.shift, backend=args.backend)
        print(f"dx={dx:g} m={grid.m}  max residual {rep.residuals.max():.1e}  "
              f"(factorize {rep.timings['factorize']:.1f}s, arnoldi {rep.timings['arnoldi']:.1f}s)")
        print("   sigma: " + "  ".join(f"{s:.6f}" for s in rep.eigenvalues), flush=True)
        if ref is not None:
            errs.append(np.abs(rep.eigenvalues - ref))
    if ref is not None and len(errs) > 1:
        errs = np.array(errs)
        print("\nper-eigenvalue observed order between consecutive grids")
        for i in range(args.k):
            if np.all(errs[:, i] > 1e-12):
                o = observed_orders(args.dx, errs[:, i])[1:]
                print(f"   sigma_{i} (exact {ref[i]:g}): " + "  ".join(f"{v:.3f}" for v in o))


if __name__ == "__main__":
    main()
