"""Sparse band operators: closest-point interpolation, Laplacian, boundary diagonal."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.io
import scipy.sparse as sp

from .band import BandGrid, PointClassification, _FACES, block_offsets, stencil_base
from .errors import StencilEscape

log = logging.getLogger(__name__)

#: ||cp - cpbar|| below this leaves the conormal undefined and D_ii = 0
CONORMAL_THRESHOLD = 1e-4


def lagrange_weights_1d(xi: np.ndarray, degree: int = 3) -> np.ndarray:
    """Lagrange basis on nodes 0..degree evaluated at local coordinates ``xi``; shape (n, degree+1)."""
    nodes = np.arange(degree + 1, dtype=float)
    xi = np.asarray(xi, float)[:, None]
    w = np.ones((xi.shape[0], degree + 1))
    for k in range(degree + 1):
        for l in range(degree + 1):
            if l != k:
                w[:, k] *= (xi[:, 0] - nodes[l]) / (nodes[k] - nodes[l])
    return w


def build_interpolation(grid: BandGrid, targets) -> sp.csr_matrix:
    """Tri-cubic interpolation matrix: row i interpolates band data at ``targets[i]``."""
    targets = np.asarray(targets, float).reshape(-1, 3)
    p = grid.interp_degree
    base = stencil_base(targets - grid.origin, grid.dx, p)
    xi = (targets - grid.origin) / grid.dx - base
    wx, wy, wz = (lagrange_weights_1d(xi[:, a], p) for a in range(3))
    W = (wx[:, :, None, None] * wy[:, None, :, None] * wz[:, None, None, :]).reshape(len(targets), -1)

    nodes = base[:, None, :] + block_offsets(p)[None]
    cols = grid.lookup(nodes.reshape(-1, 3)).reshape(W.shape)
    if np.any(cols < 0):
        row = int(np.nonzero((cols < 0).any(axis=1))[0][0])
        raise StencilEscape(f"interpolation stencil of target {targets[row]} leaves the band")
    rows = np.repeat(np.arange(len(targets)), W.shape[1])
    M = sp.csr_matrix((W.ravel(), (rows, cols.ravel())), shape=(len(targets), grid.m))
    M.eliminate_zeros()
    return M


def build_laplacian(grid: BandGrid):
    """7-point Laplacian on the band.

    Returns ``(L, complete)``; rows with a face neighbour outside the band drop
    that neighbour and are marked ``complete=False``.
    """
    m = grid.m
    nb = grid.lookup((grid.ijk[:, None, :] + _FACES[None]).reshape(-1, 3)).reshape(m, 6)
    complete = np.all(nb >= 0, axis=1)
    inv = 1.0 / grid.dx**2
    r, c = np.nonzero(nb >= 0)
    rows = np.concatenate([np.arange(m), r])
    cols = np.concatenate([np.arange(m), nb[r, c]])
    vals = np.concatenate([np.full(m, -6.0 * inv), np.full(len(r), inv)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m)), complete


def approximate_conormal(grid: BandGrid, cls: PointClassification, threshold: float = CONORMAL_THRESHOLD):
    """Conormal estimate ``(cp - cpbar) / ||cp - cpbar||`` at exterior points.

    Returns ``(n, degenerate)``: ``n`` is (m, 3) and zero away from usable
    exterior points; ``degenerate`` flags exterior points whose difference is
    shorter than ``threshold``.
    """
    diff = cls.cp - cls.cpbar
    length = np.linalg.norm(diff, axis=1)
    degenerate = cls.exterior & (length < threshold)
    ok = cls.exterior & ~degenerate
    n = np.zeros((grid.m, 3))
    n[ok] = diff[ok] / length[ok, None]
    return n, degenerate


def build_boundary_diagonal(grid: BandGrid, cls: PointClassification, conormals, degenerate=None) -> sp.dia_matrix:
    """Diagonal with ``2 <x_i - cp(x_i), n_i>`` on exterior rows, zero elsewhere."""
    d = 2.0 * np.einsum("ij,ij->i", grid.points - cls.cp, conormals)
    mask = cls.exterior.copy()
    if degenerate is not None:
        mask &= ~degenerate
    d = np.where(mask, d, 0.0)
    return sp.diags(d, 0, shape=(grid.m, grid.m), format="csr")


@dataclass(frozen=True)
class TubeOperators:
    E: sp.csr_matrix
    Ebar: sp.csr_matrix
    L: sp.csr_matrix
    D: sp.csr_matrix
    conormal: np.ndarray
    degenerate: np.ndarray
    laplacian_complete: np.ndarray
    gamma: float

    @property
    def m(self) -> int:
        return self.E.shape[0]

    @property
    def d(self) -> np.ndarray:
        return self.D.diagonal()


def penalty_gamma(dx: float, dim: int = 3) -> float:
    return 2.0 * dim / dx**2


def build_operators(
    grid: BandGrid,
    cls: PointClassification,
    surface=None,
    conormal: str = "approx",
    dump_dir: Optional[Path] = None,
) -> TubeOperators:
    """Assemble E, Ebar, L and D for a band.

    ``conormal="analytic"`` uses the surface's exact boundary frame instead of
    the cp - cpbar estimate (requires ``surface``).
    """
    E = build_interpolation(grid, cls.cp)
    Ebar = build_interpolation(grid, cls.cpbar)
    L, complete = build_laplacian(grid)
    if conormal == "approx":
        n, degenerate = approximate_conormal(grid, cls)
    elif conormal == "analytic":
        if surface is None:
            raise ValueError("analytic conormals need the surface")
        n = np.zeros((grid.m, 3))
        degenerate = np.zeros(grid.m, bool)
        if cls.exterior.any():
            n[cls.exterior] = surface.boundary_frame(cls.cp[cls.exterior])[1]
    else:
        raise ValueError(f"unknown conormal mode {conormal!r}")
    D = build_boundary_diagonal(grid, cls, n, degenerate)
    if degenerate.any():
        log.info("%d exterior points with degenerate conormal (D_ii = 0)", int(degenerate.sum()))
    ops = TubeOperators(E, Ebar, L, D, n, degenerate, complete, penalty_gamma(grid.dx))
    if dump_dir is not None:
        dump_matrices(ops, dump_dir)
    return ops


def dump_matrices(ops: TubeOperators, out_dir) -> None:
    """Write E, Ebar, L, D in Matrix Market coordinate format."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in ("E", "Ebar", "L", "D"):
        scipy.io.mmwrite(out_dir / f"{name}.mtx", getattr(ops, name), precision=17)
