"""Command-line entry point: ``cpband convergence|steklov|grayscott|poisson``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import elliptic
from .band import build_band
from .config import EXPERIMENTS, RunConfig, apply_overrides, load_config
from .errors import CPBandError, NoBoundary
from .geometry import make_surface
from .operators import build_operators
from .output import near_surface, write_csv, write_point_cloud, write_vtk
from .problems import hemisphere_robin_problem
from .reaction_diffusion import GrayScottParams, init_state, run

log = logging.getLogger("cpband")

STEKLOV_RESIDUAL_TOL = 1e-6


def _surface(cfg: RunConfig):
    return make_surface(cfg.surface, radius=cfg.radius, center_radius=cfg.center_radius, half_width=cfg.half_width)


def _setup(cfg: RunConfig, surface, dx):
    grid, cls = build_band(surface, dx)
    dump = Path(cfg.out) / f"matrices_dx{dx:g}" if cfg.dump_matrices else None
    ops = build_operators(grid, cls, surface, conormal=cfg.conormal, dump_dir=dump)
    return grid, cls, ops


def observed_orders(dxs, errors):
    """Order between consecutive rows, ``log(e_prev / e_cur) / log(dx_prev / dx_cur)``."""
    orders = [None]
    for i in range(1, len(dxs)):
        orders.append(math.log(errors[i - 1] / errors[i]) / math.log(dxs[i - 1] / dxs[i]))
    return orders


def _print_table(rows):
    print(f"{'dx':>8}  {'Length(u)':>10}  {'Relative error in max-norm':>27}  {'Order':>7}")
    for dx, m, err, order in rows:
        o = "--" if order is None else f"{order:.4f}"
        print(f"{dx:>8g}  {m:>10,d}  {err:>27.4e}  {o:>7}")


def _require_hemisphere(cfg):
    if cfg.surface not in ("hemisphere", "upper_hemisphere"):
        raise CPBandError("the manufactured Poisson solution is defined on the hemisphere only")


def cmd_convergence(cfg: RunConfig) -> int:
    _require_hemisphere(cfg)
    surface = _surface(cfg)
    problem, exact = hemisphere_robin_problem(cfg.kappa, cfg.radius)
    dxs, ms, errs = [], [], []
    for dx in cfg.dx:
        t0 = time.perf_counter()
        grid, cls, ops = _setup(cfg, surface, dx)
        rep = elliptic.solve_robin(ops, problem, cls, method=cfg.method, backend=cfg.backend, exact=exact)
        log.info("dx=%g m=%d error=%.4e (%.1fs)", dx, grid.m, rep.error_vs_exact, time.perf_counter() - t0)
        dxs.append(dx)
        ms.append(grid.m)
        errs.append(rep.error_vs_exact)
    rows = list(zip(dxs, ms, errs, observed_orders(dxs, errs)))
    write_csv(Path(cfg.out) / "table.csv", ["dx", "m", "relative_max_error", "order"], rows)
    _print_table(rows)
    return 0


def cmd_poisson(cfg: RunConfig) -> int:
    _require_hemisphere(cfg)
    surface = _surface(cfg)
    problem, exact = hemisphere_robin_problem(cfg.kappa, cfg.radius)
    dx = cfg.dx[0]
    grid, cls, ops = _setup(cfg, surface, dx)
    rep = elliptic.solve_robin(ops, problem, cls, method=cfg.method, backend=cfg.backend, exact=exact)
    out = Path(cfg.out)
    write_csv(out / "table.csv", ["dx", "m", "relative_max_error", "order"], [(dx, grid.m, rep.error_vs_exact, None)])
    keep = near_surface(cls.distance, dx)
    pts = grid.points[keep]
    u = (ops.E @ rep.solution)[keep]
    write_point_cloud(out / "solution.csv", pts, u=u, exact=exact(cls.cp[keep]))
    if cfg.vtk:
        write_vtk(out / "solution.vtk", pts, u=u)
    _print_table([(dx, grid.m, rep.error_vs_exact, None)])
    return 0


def disk_spectrum(k):
    """Steklov eigenvalues of the unit disk: 0, 1, 1, 2, 2, ..."""
    return np.array([0.0] + [float((i + 1) // 2) for i in range(1, k)])


def cmd_steklov(cfg: RunConfig) -> int:
    surface = _surface(cfg)
    if not surface.has_boundary:
        raise NoBoundary(f"{cfg.surface} is closed; the Steklov problem needs a boundary")
    out = Path(cfg.out)
    rows, status = [], 0
    reference = disk_spectrum(cfg.n_eigs) / cfg.radius if cfg.surface == "hemisphere" else None
    errors = []
    for dx in cfg.dx:
        grid, cls, ops = _setup(cfg, surface, dx)
        rep = elliptic.solve_steklov(ops, cfg.n_eigs, cfg.shift, backend=cfg.backend, seed=cfg.seed)
        if np.any(rep.residuals > STEKLOV_RESIDUAL_TOL):
            log.error("eigen-residual %.2e exceeds %.0e at dx=%g", rep.residuals.max(), STEKLOV_RESIDUAL_TOL, dx)
            status = 1
        for i, (s, r) in enumerate(zip(rep.eigenvalues, rep.residuals)):
            rows.append((dx, grid.m, i, s, r))
        print(f"dx={dx:g} m={grid.m:,d} sigma=" + " ".join(f"{s:.6f}" for s in rep.eigenvalues))
        if reference is not None:
            errors.append(np.abs(rep.eigenvalues - reference).max())
    write_csv(out / "eigs.csv", ["dx", "m", "index", "sigma", "residual"], rows)

    keep = near_surface(cls.distance, dx)
    for i in range(rep.eigenvectors.shape[1]):
        phi = (ops.E @ rep.eigenvectors[:, i])[keep]
        write_point_cloud(out / f"eigfun_{i}.csv", grid.points[keep], phi=phi)
        if cfg.vtk:
            write_vtk(out / f"eigfun_{i}.vtk", grid.points[keep], phi=phi)
    if reference is not None and len(errors) > 1:
        orders = observed_orders(cfg.dx, errors)
        for dx, e, o in zip(cfg.dx, errors, orders):
            print(f"dx={dx:g} max|sigma - n|={e:.3e} order={'--' if o is None else f'{o:.3f}'}")
    return status


def cmd_grayscott(cfg: RunConfig) -> int:
    surface = _surface(cfg)
    dx = cfg.dx[0]
    params = GrayScottParams(cfg.F, cfg.k, cfg.Du, cfg.Dv, cfg.kappa, cfg.T, cfg.dt)
    grid, cls, ops = _setup(cfg, surface, dx)
    state = init_state(grid, cls, surface, seed=cfg.seed, n_patches=cfg.n_patches, radius=cfg.patch_radius)
    res = run(params, ops, state, cfg.snapshot_times, record_every=cfg.record_every, progress=True)
    out = Path(cfg.out)
    keep = near_surface(cls.distance, dx)
    for snap in res.snapshots:
        name = f"snapshot_{snap.time:g}"
        u = (ops.E @ snap.u)[keep]
        v = (ops.E @ snap.v)[keep]
        write_point_cloud(out / f"{name}.csv", grid.points[keep], u=u, v=v)
        if cfg.vtk:
            write_vtk(out / f"{name}.vtk", grid.points[keep], u=u, v=v)
    write_csv(out / "summary.csv", ["time", "variance_u", "variance_v"], zip(res.times, res.var_u, res.var_v))
    print(f"kappa={params.kappa:g} T={params.T:g} m={grid.m:,d} final var(v)={res.var_v[-1]:.4e} "
          f"peak var(v)={res.var_v.max():.4e}")
    return 0


COMMANDS = {
    "convergence": cmd_convergence,
    "poisson": cmd_poisson,
    "steklov": cmd_steklov,
    "grayscott": cmd_grayscott,
}


def _dx_list(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad dx list {text!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="cpband", description=__doc__)
    p.add_argument("command", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--dx", type=_dx_list, help="grid spacing, or a comma separated list")
    p.add_argument("--kappa", type=float)
    p.add_argument("--surface")
    p.add_argument("--T", type=float, dest="T", help="final time (grayscott)")
    p.add_argument("--out", type=str)
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-matrices", action="store_true", default=None)
    p.add_argument("--vtk", action="store_true", default=None, help="also write legacy VTK point clouds")
    p.add_argument("--dry-run", action="store_true", help="print the resolved configuration and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(experiment=args.command)
        if args.config is not None:
            cfg = load_config(args.config, cfg)
            cfg.experiment = args.command
        cfg = apply_overrides(cfg, dx=args.dx, kappa=args.kappa, surface=args.surface, T=args.T, out=args.out,
                              seed=args.seed, dump_matrices=args.dump_matrices, vtk=args.vtk)
        cfg = cfg.resolved()
        if args.dry_run:
            print("\n".join(cfg.as_lines()))
            return 0
        return COMMANDS[args.command](cfg)
    except NoBoundary as exc:
        print(f"cpband: NoBoundary: {exc}", file=sys.stderr)
        return 3
    except CPBandError as exc:
        print(f"cpband: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
