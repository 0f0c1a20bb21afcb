"""Manufactured test problems on the upper hemisphere."""

from __future__ import annotations

import numpy as np

from .elliptic import AffineRobin, EllipticProblem, General


def _unit_coords(p, radius):
    p = np.asarray(p, float) / radius
    return p[:, 0], p[:, 1], p[:, 2]


def hemisphere_exact(radius: float = 1.0):
    """u = cos(2 phi) sin^2(theta) + sin(3 phi) sin^3(theta), written in Cartesian form."""

    def u(p):
        x, y, _ = _unit_coords(p, radius)
        return x * x - y * y + 3 * x * x * y - y**3

    return u


def hemisphere_rhs(radius: float = 1.0, c: float = 0.0):
    """Right-hand side of Lap_S u - c u = f for ``hemisphere_exact``.

    The two terms are spherical harmonics of degree 2 and 3.
    """
    u = hemisphere_exact(radius)

    def f(p):
        x, y, _ = _unit_coords(p, radius)
        lap = (-6 * (x * x - y * y) - 12 * (3 * x * x * y - y**3)) / radius**2
        return lap - c * u(p)

    return f


def hemisphere_robin_problem(kappa: float = 1.0, radius: float = 1.0, c: float = 0.0):
    """Robin problem d_n u + kappa u = g whose solution is ``hemisphere_exact``.

    The exact solution has zero conormal derivative on the equator, so
    ``g = kappa * u``.  Returns ``(problem, exact)``.
    """
    exact = hemisphere_exact(radius)
    g = lambda p: kappa * exact(p)  # noqa: E731
    return EllipticProblem(c, hemisphere_rhs(radius, c), AffineRobin(kappa, g)), exact


def hemisphere_nonlinear_problem(power: int = 2, radius: float = 1.0, c: float = 1.0):
    """``d_n u = u_exact^p - u^p`` on the equator; solved by ``hemisphere_exact``."""
    exact = hemisphere_exact(radius)

    def j(y, u):
        return exact(y) ** power - np.asarray(u) ** power

    def dj(y, u):
        return -power * np.asarray(u) ** (power - 1)

    return EllipticProblem(c, hemisphere_rhs(radius, c), General(j, dj)), exact
