"""Closest point method on narrow Cartesian bands with general Neumann/Robin boundary conditions."""

from .band import BandGrid, PointClassification, build_band
from .elliptic import (
    AffineRobin,
    EigenReport,
    EllipticProblem,
    General,
    SolveReport,
    assemble_robin,
    solve_linear,
    solve_nonlinear,
    solve_robin,
    solve_steklov,
    surface_error,
)
from .geometry import (
    MobiusStrip,
    Sphere,
    UpperHemisphere,
    analytic_frame,
    closest_point,
    make_surface,
    modified_closest_point,
    parametric_sample,
)
from .operators import TubeOperators, build_operators

__all__ = [
    "AffineRobin",
    "BandGrid",
    "EigenReport",
    "EllipticProblem",
    "General",
    "MobiusStrip",
    "PointClassification",
    "SolveReport",
    "Sphere",
    "TubeOperators",
    "UpperHemisphere",
    "analytic_frame",
    "assemble_robin",
    "build_band",
    "build_operators",
    "closest_point",
    "make_surface",
    "modified_closest_point",
    "parametric_sample",
    "solve_linear",
    "solve_nonlinear",
    "solve_robin",
    "solve_steklov",
    "surface_error",
]
