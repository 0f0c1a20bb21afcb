"""Surfaces with closest-point queries.

Every surface exposes a vectorised ``closest_points`` returning closest
points, distances, boundary flags, surface parameters and a degeneracy mask
for an ``(n, 3)`` array of query points.  The scalar helpers at the bottom of
the module (``closest_point``, ``modified_closest_point``, ``analytic_frame``,
``parametric_sample``) wrap these for single points and raise on degenerate
input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DegenerateQuery, NotOnBoundary, OutOfDomain

#: parameter distance below which a closest point counts as on the boundary
BOUNDARY_TOL = 1e-10
_TINY = 1e-14


@dataclass(frozen=True)
class ClosestPointResult:
    cp: np.ndarray
    distance: float
    on_boundary: bool
    param: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SurfaceFrame:
    """Unit normal, plus boundary tangent and outward conormal on the boundary."""

    normal: np.ndarray
    boundary_tangent: Optional[np.ndarray] = None
    conormal: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CPBatch:
    """Vectorised closest point data for ``n`` query points."""

    cp: np.ndarray  # (n, 3)
    distance: np.ndarray  # (n,)
    on_boundary: np.ndarray  # (n,) bool
    param: np.ndarray  # (n, 2)
    degenerate: np.ndarray  # (n,) bool


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != 3:
        raise ValueError(f"expected points of shape (n, 3), got {x.shape}")
    return x


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Sphere:
    """Closed sphere centred at the origin."""

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    has_boundary = False

    def closest_points(self, x) -> CPBatch:
        x = _as_points(x)
        r = np.linalg.norm(x, axis=1)
        degenerate = r < _TINY * max(self.radius, 1.0)
        safe = np.where(degenerate, 1.0, r)
        cp = self.radius * x / safe[:, None]
        cp[degenerate] = (0.0, 0.0, self.radius)
        dist = np.abs(r - self.radius)
        phi = np.mod(np.arctan2(cp[:, 1], cp[:, 0]), 2 * np.pi)
        theta = np.arccos(np.clip(cp[:, 2] / self.radius, -1.0, 1.0))
        return CPBatch(cp, dist, np.zeros(len(x), bool), np.column_stack([phi, theta]), degenerate)

    def sample(self, params):
        phi, theta = np.asarray(params, float).T
        if np.any((theta < 0) | (theta > np.pi)):
            raise OutOfDomain("theta must lie in [0, pi]")
        return self.radius * np.column_stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
        )

    def normal(self, y):
        return _unit(_as_points(y))

    def boundary_frame(self, y):
        raise NotOnBoundary("a sphere has no boundary")

    def seed_points(self, n=64):
        phi, theta = np.meshgrid(np.linspace(0, 2 * np.pi, 2 * n, endpoint=False), np.linspace(0, np.pi, n))
        return self.sample(np.column_stack([phi.ravel(), theta.ravel()]))

    def random_params(self, rng, n):
        phi = rng.uniform(0, 2 * np.pi, n)
        theta = np.arccos(rng.uniform(-1, 1, n))
        return np.column_stack([phi, theta])


@dataclass(frozen=True)
class UpperHemisphere:
    """The part of the sphere of given radius with z >= 0; boundary is the equator."""

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    has_boundary = True

    def closest_points(self, x) -> CPBatch:
        x = _as_points(x)
        R = self.radius
        r = np.linalg.norm(x, axis=1)
        rho = np.hypot(x[:, 0], x[:, 1])
        radial = x[:, 2] >= 0
        scale = max(R, 1.0)
        degenerate = (r < _TINY * scale) | (~radial & (rho < _TINY * scale))

        cp = np.empty_like(x)
        with np.errstate(invalid="ignore", divide="ignore"):
            cp[radial] = R * x[radial] / r[radial, None]
            eq = ~radial
            cp[eq, 0] = R * x[eq, 0] / rho[eq]
            cp[eq, 1] = R * x[eq, 1] / rho[eq]
            cp[eq, 2] = 0.0
        cp[degenerate] = (0.0, 0.0, R)

        dist = np.linalg.norm(x - cp, axis=1)
        phi = np.mod(np.arctan2(cp[:, 1], cp[:, 0]), 2 * np.pi)
        theta = np.arccos(np.clip(cp[:, 2] / R, -1.0, 1.0))
        on_boundary = np.abs(theta - np.pi / 2) <= BOUNDARY_TOL
        return CPBatch(cp, dist, on_boundary, np.column_stack([phi, theta]), degenerate)

    def sample(self, params):
        params = np.atleast_2d(np.asarray(params, float))
        phi, theta = params[:, 0], params[:, 1]
        if np.any((theta < 0) | (theta > np.pi / 2 + BOUNDARY_TOL)):
            raise OutOfDomain("theta must lie in [0, pi/2] on the upper hemisphere")
        return self.radius * np.column_stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
        )

    def normal(self, y):
        return _unit(_as_points(y))

    def boundary_frame(self, y):
        y = _as_points(y)
        if np.any(np.abs(y[:, 2]) > BOUNDARY_TOL * self.radius):
            raise NotOnBoundary("point is not on the equator")
        phi = np.arctan2(y[:, 1], y[:, 0])
        T = np.column_stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)])
        n = np.tile([0.0, 0.0, -1.0], (len(y), 1))
        return T, n

    def seed_points(self, n=64):
        phi, theta = np.meshgrid(np.linspace(0, 2 * np.pi, 4 * n, endpoint=False), np.linspace(0, np.pi / 2, n))
        return self.sample(np.column_stack([phi.ravel(), theta.ravel()]))

    def random_params(self, rng, n):
        # area-uniform on the cap z >= 0
        phi = rng.uniform(0, 2 * np.pi, n)
        theta = np.arccos(rng.uniform(0, 1, n))
        return np.column_stack([phi, theta])


@dataclass(frozen=True)
class MobiusStrip:
    """Mobius strip x(s, t) = ((R + t cos(s/2)) cos s, (R + t cos(s/2)) sin s, t sin(s/2)).

    ``s`` runs over [0, 2pi) and ``t`` over [-w, w]; the edge ``|t| = w`` is a
    single closed curve.  There is no closed form for the closest point, so it
    is found by Newton iteration on the squared distance, started from the best
    nodes of a 32 x 8 parameter grid, together with a 1D Newton search along
    the edge curve.  The smallest feasible candidate wins.
    """

    center_radius: float = 1.0
    half_width: float = 0.35
    seed_grid: tuple = (32, 8)
    n_starts: int = 3
    step_tol: float = 1e-12
    max_iter: int = 60

    has_boundary = True

    def __post_init__(self):
        if not (self.center_radius > 0 and self.half_width > 0):
            raise ValueError("dimensions must be positive")
        if not self.center_radius > 2 * self.half_width:
            raise ValueError("center_radius must exceed 2 * half_width")

    # -- parameterisation and derivatives -------------------------------------------------
    def _eval(self, s, t):
        R = self.center_radius
        c, sn = np.cos(s / 2), np.sin(s / 2)
        cs, ss = np.cos(s), np.sin(s)
        A = R + t * c
        Ap = -0.5 * t * sn
        App = -0.25 * t * c
        X = np.stack([A * cs, A * ss, t * sn], axis=-1)
        Xs = np.stack([Ap * cs - A * ss, Ap * ss + A * cs, 0.5 * t * c], axis=-1)
        Xt = np.stack([c * cs, c * ss, sn], axis=-1)
        Xss = np.stack(
            [App * cs - 2 * Ap * ss - A * cs, App * ss + 2 * Ap * cs - A * ss, -0.25 * t * sn], axis=-1
        )
        Xst = np.stack([-0.5 * sn * cs - c * ss, -0.5 * sn * ss + c * cs, 0.5 * c], axis=-1)
        return X, Xs, Xt, Xss, Xst

    def sample(self, params):
        params = np.atleast_2d(np.asarray(params, float))
        s, t = params[:, 0], params[:, 1]
        if np.any(np.abs(t) > self.half_width * (1 + BOUNDARY_TOL)):
            raise OutOfDomain("|t| must not exceed half_width")
        return self._eval(s, t)[0]

    def _canonical(self, s, t):
        # (s + 2pi, t) and (s, -t) are the same point
        k = np.floor(s / (2 * np.pi))
        s = s - 2 * np.pi * k
        t = np.where(np.mod(k, 2) == 1, -t, t)
        return s, t

    def _newton2d(self, x, s, t):
        tmax = 0.9 * self.center_radius
        active = np.ones(len(x), bool)
        for _ in range(self.max_iter):
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            X, Xs, Xt, Xss, Xst = self._eval(s[idx], t[idx])
            r = X - x[idx]
            gs = np.einsum("ij,ij->i", r, Xs)
            gt = np.einsum("ij,ij->i", r, Xt)
            a = np.einsum("ij,ij->i", Xs, Xs)
            b = np.einsum("ij,ij->i", Xs, Xt)
            d = np.einsum("ij,ij->i", Xt, Xt)
            ha = a + np.einsum("ij,ij->i", r, Xss)
            hb = b + np.einsum("ij,ij->i", r, Xst)
            det = ha * d - hb * hb
            # fall back to the Gauss-Newton matrix where the Hessian is indefinite
            bad = (det <= 1e-14) | (ha <= 0)
            ha = np.where(bad, a, ha)
            hb = np.where(bad, b, hb)
            det = ha * d - hb * hb
            ds = -(d * gs - hb * gt) / det
            dt = -(-hb * gs + ha * gt) / det
            scale = np.minimum(1.0, 0.5 / np.maximum(np.maximum(np.abs(ds), np.abs(dt)), 1e-300))
            ds *= scale
            dt *= scale
            s[idx] += ds
            t[idx] = np.clip(t[idx] + dt, -tmax, tmax)
            done = np.maximum(np.abs(ds), np.abs(dt)) <= self.step_tol
            active[idx[done]] = False
        return s, t

    def _newton_edge(self, x, u):
        w = self.half_width
        active = np.ones(len(x), bool)
        tw = np.full(len(x), w)
        for _ in range(self.max_iter):
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            X, Xs, _, Xss, _ = self._eval(u[idx], tw[idx])
            r = X - x[idx]
            g = np.einsum("ij,ij->i", r, Xs)
            a = np.einsum("ij,ij->i", Xs, Xs)
            h = a + np.einsum("ij,ij->i", r, Xss)
            h = np.where(h <= 1e-14, a, h)
            du = np.clip(-g / h, -0.5, 0.5)
            u[idx] += du
            done = np.abs(du) <= self.step_tol
            active[idx[done]] = False
        return u

    def closest_points(self, x, chunk=20000) -> CPBatch:
        x = _as_points(x)
        out = [self._closest_chunk(x[i : i + chunk]) for i in range(0, len(x), chunk)]
        if not out:
            e = np.zeros((0, 3))
            return CPBatch(e, np.zeros(0), np.zeros(0, bool), np.zeros((0, 2)), np.zeros(0, bool))
        return CPBatch(*(np.concatenate([getattr(o, f) for o in out]) for f in CPBatch.__dataclass_fields__))

    def _closest_chunk(self, x) -> CPBatch:
        n = len(x)
        w = self.half_width
        ns, nt = self.seed_grid
        S, T = np.meshgrid(np.linspace(0, 2 * np.pi, ns, endpoint=False), np.linspace(-w, w, nt), indexing="ij")
        seeds = np.column_stack([S.ravel(), T.ravel()])
        seed_pts = self.sample(seeds)
        d2 = (
            np.sum(x**2, axis=1)[:, None]
            - 2 * x @ seed_pts.T
            + np.sum(seed_pts**2, axis=1)[None, :]
        )
        k = min(self.n_starts, len(seeds))
        best = np.argpartition(d2, k - 1, axis=1)[:, :k]

        cands_pt, cands_d, cands_p, cands_edge = [], [], [], []
        for j in range(k):
            s0 = seeds[best[:, j], 0].copy()
            t0 = seeds[best[:, j], 1].copy()
            s, t = self._newton2d(x, s0, t0)
            feasible = np.abs(t) <= w * (1 + 1e-12)
            t = np.clip(t, -w, w)
            p = self._eval(s, t)[0]
            dist = np.linalg.norm(x - p, axis=1)
            cands_pt.append(p)
            cands_d.append(np.where(feasible, dist, np.inf))
            cands_p.append(np.column_stack([s, t]))
            cands_edge.append(np.zeros(n, bool))

        # edge curve u in [0, 4pi) with t = w covers the whole boundary
        ne = 2 * ns
        useeds = np.linspace(0, 4 * np.pi, ne, endpoint=False)
        edge_pts = self._eval(useeds, np.full(ne, w))[0]
        de2 = np.sum(x**2, axis=1)[:, None] - 2 * x @ edge_pts.T + np.sum(edge_pts**2, axis=1)[None, :]
        ke = min(2, ne)
        ebest = np.argpartition(de2, ke - 1, axis=1)[:, :ke]
        for j in range(ke):
            u = self._newton_edge(x, useeds[ebest[:, j]].copy())
            p = self._eval(u, np.full(n, w))[0]
            cands_pt.append(p)
            cands_d.append(np.linalg.norm(x - p, axis=1))
            cands_p.append(np.column_stack([u, np.full(n, w)]))
            cands_edge.append(np.ones(n, bool))

        D = np.stack(cands_d, axis=1)
        P = np.stack(cands_pt, axis=1)
        order = np.argsort(D, axis=1, kind="stable")
        i0 = order[:, 0]
        rows = np.arange(n)
        cp = P[rows, i0]
        dist = D[rows, i0]
        prm = np.stack(cands_p, axis=1)[rows, i0]
        s, t = self._canonical(prm[:, 0], prm[:, 1])
        on_boundary = np.abs(np.abs(t) - w) <= BOUNDARY_TOL

        # a competing candidate at the same distance but elsewhere means no unique minimiser
        degenerate = np.zeros(n, bool)
        for j in range(1, D.shape[1]):
            ij = order[:, j]
            dj = D[rows, ij]
            far = np.linalg.norm(P[rows, ij] - cp, axis=1) > 1e-6
            degenerate |= far & (np.abs(dj - dist) <= 1e-12 * np.maximum(1.0, dist))
        return CPBatch(cp, dist, on_boundary, np.column_stack([s, t]), degenerate)

    def normal(self, y):
        y = _as_points(y)
        prm = self.closest_points(y).param
        _, Xs, Xt, _, _ = self._eval(prm[:, 0], prm[:, 1])
        return _unit(np.cross(Xs, Xt))

    def boundary_frame(self, y):
        y = _as_points(y)
        res = self.closest_points(y)
        if not np.all(res.on_boundary) or np.any(res.distance > 1e-8):
            raise NotOnBoundary("point is not on the strip edge")
        s, t = res.param[:, 0], res.param[:, 1]
        _, Xs, Xt, _, _ = self._eval(s, t)
        T = _unit(Xs)
        n = Xt - np.einsum("ij,ij->i", Xt, T)[:, None] * T
        n = np.sign(t)[:, None] * _unit(n)
        return T, n

    def seed_points(self, n=64):
        S, T = np.meshgrid(np.linspace(0, 2 * np.pi, 8 * n, endpoint=False), np.linspace(-self.half_width, self.half_width, n))
        return self.sample(np.column_stack([S.ravel(), T.ravel()]))

    def random_params(self, rng, n):
        # uniform in parameter space; adequate for seeding patches
        return np.column_stack([rng.uniform(0, 2 * np.pi, n), rng.uniform(-self.half_width, self.half_width, n)])


Surface = Union[Sphere, UpperHemisphere, MobiusStrip]


def make_surface(name: str, **kw) -> Surface:
    """Build a surface from a short name: ``hemisphere``, ``sphere`` or ``mobius``."""
    name = name.lower()
    if name in ("hemisphere", "upper_hemisphere"):
        return UpperHemisphere(kw.get("radius", 1.0))
    if name == "sphere":
        return Sphere(kw.get("radius", 1.0))
    if name in ("mobius", "mobius_strip"):
        return MobiusStrip(kw.get("center_radius", 1.0), kw.get("half_width", 0.35))
    raise ValueError(f"unknown surface {name!r}")


# -- single-point API ----------------------------------------------------------------------


def closest_point(surface: Surface, x) -> ClosestPointResult:
    """Closest point of ``surface`` (boundary included) to the point ``x``."""
    res = surface.closest_points(np.asarray(x, float).reshape(1, 3))
    if res.degenerate[0]:
        raise DegenerateQuery(f"closest point of {tuple(np.ravel(x))} is not unique")
    return ClosestPointResult(res.cp[0], float(res.distance[0]), bool(res.on_boundary[0]), res.param[0])


def modified_closest_points(surface: Surface, x, res: Optional[CPBatch] = None):
    """Vectorised ``cp(2 cp(x) - x)``; returns ``(cpbar, batch_for_reflections)``."""
    x = _as_points(x)
    if res is None:
        res = surface.closest_points(x)
    refl = surface.closest_points(2 * res.cp - x)
    return refl.cp, refl


def modified_closest_point(surface: Surface, x) -> np.ndarray:
    """``cp(r(x))`` with the reflection ``r(x) = 2 cp(x) - x``."""
    x = np.asarray(x, float).reshape(1, 3)
    res = surface.closest_points(x)
    if res.degenerate[0]:
        raise DegenerateQuery("closest point is not unique")
    cpbar, refl = modified_closest_points(surface, x, res)
    if refl.degenerate[0]:
        raise DegenerateQuery("closest point of the reflected point is not unique")
    return cpbar[0]


def analytic_frame(surface: Surface, y, want_boundary: bool = False) -> SurfaceFrame:
    """Normal at ``y`` and, when ``y`` is on the boundary, tangent and outward conormal.

    With ``want_boundary=True`` a point off the boundary raises NotOnBoundary.
    """
    y = np.asarray(y, float).reshape(1, 3)
    res = surface.closest_points(y)
    if res.distance[0] > 1e-10:
        raise ValueError("point is not on the surface")
    y = res.cp
    N = surface.normal(y)[0]
    if surface.has_boundary and res.on_boundary[0]:
        T, n = surface.boundary_frame(y)
        return SurfaceFrame(N, T[0], n[0])
    if want_boundary:
        raise NotOnBoundary("tangent and conormal exist only on the boundary")
    return SurfaceFrame(N)


def parametric_sample(surface: Surface, params) -> np.ndarray:
    """Embedded point for surface parameters ((phi, theta) or (s, t))."""
    return surface.sample(np.asarray(params, float).reshape(1, 2))[0]
