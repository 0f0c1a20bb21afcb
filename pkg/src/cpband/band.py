"""Narrow computational band of Cartesian lattice points around a surface."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateQuery
from .geometry import Surface, modified_closest_points

log = logging.getLogger(__name__)

_OFF = 1 << 20
_FACES = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]])


def bandwidth_factor(dim: int = 3, interp_degree: int = 3) -> float:
    """Band radius in units of dx needed by degree-p interpolation plus a 7-point stencil."""
    h = (interp_degree + 1) / 2
    return float(np.sqrt((dim - 1) * h**2 + (1 + h) ** 2))


def lattice_keys(ijk) -> np.ndarray:
    ijk = np.asarray(ijk, dtype=np.int64) + _OFF
    return (ijk[..., 0] << 42) | (ijk[..., 1] << 21) | ijk[..., 2]


def stencil_base(points, dx: float, interp_degree: int = 3) -> np.ndarray:
    """Lowest lattice corner of the (p+1)^3 interpolation block for each point.

    The target sits in the middle cell of the block; on a cell face the lower
    cell is used.
    """
    return np.floor(np.asarray(points) / dx).astype(np.int64) - (interp_degree - 1) // 2


def block_offsets(interp_degree: int = 3) -> np.ndarray:
    r = np.arange(interp_degree + 1)
    return np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)


@dataclass(frozen=True)
class PointClassification:
    """Per band point: closest point, modified closest point, distance, boundary flag."""

    cp: np.ndarray
    cpbar: np.ndarray
    distance: np.ndarray
    on_boundary: np.ndarray

    @property
    def exterior(self) -> np.ndarray:
        return self.on_boundary

    @property
    def interior(self) -> np.ndarray:
        return ~self.on_boundary


@dataclass(frozen=True)
class BandGrid:
    dx: float
    bandwidth: float
    ijk: np.ndarray  # (m, 3) lattice coordinates, sorted by key
    interp_degree: int = 3
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    keys: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.keys is None:
            object.__setattr__(self, "keys", lattice_keys(self.ijk))

    @property
    def m(self) -> int:
        return len(self.ijk)

    @property
    def points(self) -> np.ndarray:
        return self.origin + self.ijk * self.dx

    def lookup(self, ijk) -> np.ndarray:
        """Row index of each lattice triple, or -1 when it is not in the band."""
        k = lattice_keys(ijk)
        pos = np.searchsorted(self.keys, k)
        pos = np.minimum(pos, len(self.keys) - 1)
        return np.where(self.keys[pos] == k, pos, -1)

    def index_of(self, ijk) -> int:
        return int(self.lookup(np.asarray(ijk).reshape(1, 3))[0])


def _required_nodes(targets, dx, interp_degree):
    base = stencil_base(targets, dx, interp_degree)
    nodes = (base[:, None, :] + block_offsets(interp_degree)[None]).reshape(-1, 3)
    return np.unique(nodes, axis=0)


def _closure_candidates(cp, cpbar, dx, interp_degree):
    nodes = _required_nodes(np.vstack([cp, cpbar]), dx, interp_degree)
    # the Laplacian is applied at every interpolation node
    nbrs = (nodes[:, None, :] + _FACES[None]).reshape(-1, 3)
    return np.unique(np.vstack([nodes, nbrs]), axis=0)


def build_band(surface: Surface, dx: float, interp_degree: int = 3, stencil_order: int = 2):
    """Flood-fill the lattice band of radius ``lambda * dx`` and close it under the stencils.

    Returns ``(BandGrid, PointClassification)``.
    """
    if not dx > 0:
        raise ValueError("dx must be positive")
    if interp_degree != 3 or stencil_order != 2:
        raise ValueError("only tri-cubic interpolation with the 7-point Laplacian is supported")
    bw = bandwidth_factor(3, interp_degree) * dx

    seeds = np.unique(np.rint(surface.seed_points() / dx).astype(np.int64), axis=0)
    visited = set(lattice_keys(seeds).tolist())
    front = seeds
    accepted = []
    while len(front):
        res = surface.closest_points(front * dx)
        keep = (res.distance <= bw * (1 + 1e-9)) & ~res.degenerate
        front = front[keep]
        accepted.append(front)
        cand = np.unique((front[:, None, :] + _FACES[None]).reshape(-1, 3), axis=0)
        ck = lattice_keys(cand)
        new = np.fromiter((k not in visited for k in ck.tolist()), bool, len(ck))
        cand, ck = cand[new], ck[new]
        visited.update(ck.tolist())
        front = cand
    ijk = np.concatenate(accepted)

    passes = 0
    while True:
        order = np.argsort(lattice_keys(ijk))
        ijk = ijk[order]
        x = ijk * dx
        res = surface.closest_points(x)
        if res.degenerate.any():
            bad = x[res.degenerate][0]
            raise DegenerateQuery(f"band point {bad} has no unique closest point")
        cpbar, refl = modified_closest_points(surface, x, res)
        if refl.degenerate.any():
            bad = x[refl.degenerate][0]
            raise DegenerateQuery(f"reflection of band point {bad} has no unique closest point")
        grid = BandGrid(dx, bw, ijk, interp_degree)
        need = _closure_candidates(res.cp, cpbar, dx, interp_degree)
        missing = need[grid.lookup(need) < 0]
        if not len(missing):
            break
        passes += 1
        log.debug("closure pass %d adds %d points", passes, len(missing))
        ijk = np.vstack([ijk, missing])

    # interior points reflect onto their own closest point
    cpbar = np.where(res.on_boundary[:, None], cpbar, res.cp)
    cls = PointClassification(res.cp, cpbar, res.distance, res.on_boundary.copy())
    log.info("band: dx=%g m=%d exterior=%d closure passes=%d", dx, grid.m, int(cls.exterior.sum()), passes)
    return grid, cls
