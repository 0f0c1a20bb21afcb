"""Penalty-embedded elliptic solves, Steklov eigenpairs and nonlinear boundary conditions.

Surface functions (``f``, ``g``, exact solutions) are callables taking an
``(n, 3)`` array of surface points.  A general boundary function ``j`` takes
``(points, values)`` and returns the conormal derivative.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .band import PointClassification
from .errors import NoBoundary, NoConvergence, SingularSystem
from .linalg import factorize
from .operators import TubeOperators

log = logging.getLogger(__name__)

SurfaceFunction = Callable[[np.ndarray], np.ndarray]


def _zero(p):
    return np.zeros(len(p))


@dataclass(frozen=True)
class AffineRobin:
    """Boundary function ``j(y, u) = -kappa * u + g(y)``, i.e. d_n u + kappa u = g."""

    kappa: float = 0.0
    g: SurfaceFunction = _zero

    def j(self, y, u):
        return -self.kappa * np.asarray(u) + self.g(y)

    def dj(self, y, u):
        return np.full(len(y), -self.kappa)


@dataclass(frozen=True)
class General:
    """Arbitrary boundary function ``j(y, u)``; ``dj`` (d j / d u) is optional."""

    j: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dj: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None


BoundaryCondition = Union[AffineRobin, General]


@dataclass(frozen=True)
class EllipticProblem:
    """Surface problem ``Lap_S u - c u = f`` with ``d_n u = j(y, u)`` on the boundary."""

    c: float = 0.0
    f: SurfaceFunction = _zero
    bc: BoundaryCondition = field(default_factory=AffineRobin)


@dataclass
class SolveReport:
    solution: np.ndarray
    residual_norm: float
    iterations: int = 1
    error_vs_exact: Optional[float] = None
    timings: dict = field(default_factory=dict)
    history: list = field(default_factory=list)


@dataclass
class EigenReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (m, k)
    residuals: np.ndarray
    max_imag: float = 0.0
    timings: dict = field(default_factory=dict)


def _identity(m):
    return sp.identity(m, format="csr")


def assemble_robin(ops: TubeOperators, problem: EllipticProblem, cls: PointClassification):
    """Linear system for an affine Robin problem, PDE rows interpolated at cpbar.

    ``A = Ebar L - c Ebar - gamma (I - Ebar + kappa D E)`` and
    ``b = Ebar f - gamma D g`` with ``f`` and ``g`` sampled at cp(x_i).
    """
    bc = problem.bc
    if not isinstance(bc, AffineRobin):
        raise TypeError("assemble_robin needs an AffineRobin boundary condition")
    I = _identity(ops.m)
    A = ops.Ebar @ ops.L - ops.gamma * (I - ops.Ebar + bc.kappa * (ops.D @ ops.E))
    if problem.c:
        A = A - problem.c * ops.Ebar
    fv = problem.f(cls.cp)
    gv = np.zeros(ops.m)
    ext = cls.exterior
    if ext.any():
        gv[ext] = bc.g(cls.cp[ext])
    b = ops.Ebar @ fv - ops.gamma * (ops.D @ gv)
    return A.tocsr(), b


def _relres(A, u, b):
    nb = np.abs(b).max()
    r = np.abs(A @ u - b).max()
    return r / nb if nb > 0 else r


def solve_linear(A, b, method: str = "direct", backend: str = "auto", tol: Optional[float] = None) -> SolveReport:
    """Solve ``A u = b`` by sparse LU (``direct``) or ILU-preconditioned GMRES (``iterative``).

    Raises SingularSystem when the direct residual exceeds 1e-10, and
    NoConvergence when GMRES needs more than ``10 sqrt(m)`` iterations.
    """
    m = A.shape[0]
    if A.shape != (m, m) or len(b) != m:
        raise ValueError("A must be square and match b")
    t0 = time.perf_counter()
    if method == "direct":
        tol = 1e-10 if tol is None else tol
        u = factorize(A, backend).solve(b)
        res = _relres(A, u, b)
        if not res <= tol:
            raise SingularSystem(f"direct solve residual {res:.3e} exceeds {tol:.0e}")
        return SolveReport(u, res, 1, timings={"solve": time.perf_counter() - t0})
    if method == "iterative":
        tol = 1e-9 if tol is None else tol
        maxiter = int(10 * math.sqrt(m))
        ilu = spla.spilu(sp.csc_matrix(A), drop_tol=1e-6, fill_factor=30)
        M = spla.LinearOperator(A.shape, ilu.solve)
        history = []
        u, info = spla.gmres(
            A, b, M=M, rtol=tol * 0.1, atol=0.0, restart=min(m, 200), maxiter=maxiter,
            callback=history.append, callback_type="pr_norm",
        )
        res = _relres(A, u, b)
        if info != 0 or not res <= tol:
            raise NoConvergence(f"GMRES stopped with residual {res:.3e}", history, u)
        return SolveReport(u, res, len(history), timings={"solve": time.perf_counter() - t0}, history=history)
    raise ValueError(f"unknown method {method!r}")


def solve_robin(ops, problem, cls, method="direct", backend="auto", exact: Optional[SurfaceFunction] = None):
    t0 = time.perf_counter()
    A, b = assemble_robin(ops, problem, cls)
    t1 = time.perf_counter()
    rep = solve_linear(A, b, method=method, backend=backend)
    rep.timings["assemble"] = t1 - t0
    if exact is not None:
        rep.error_vs_exact = surface_error(rep.solution, exact, ops, cls)
    return rep


def surface_error(u, exact: SurfaceFunction, ops: TubeOperators, cls: PointClassification) -> float:
    """Relative max-norm error of ``E u`` against ``exact`` at all closest points."""
    ue = exact(cls.cp)
    err = np.abs(ops.E @ u - ue).max()
    scale = np.abs(ue).max()
    return float(err / scale) if scale > 0 else float(err)


def steklov_matrices(ops: TubeOperators):
    """``A = Ebar L - gamma (I - Ebar)`` and ``B = -gamma D E``."""
    A = (ops.Ebar @ ops.L - ops.gamma * (_identity(ops.m) - ops.Ebar)).tocsr()
    B = (-ops.gamma * (ops.D @ ops.E)).tocsr()
    return A, B


def solve_steklov(ops: TubeOperators, k: int = 7, shift: float = -0.1, backend: str = "auto",
                  seed: int = 42, tol: float = 1e-12) -> EigenReport:
    """The ``k`` Steklov eigenvalues nearest ``shift`` via shift-invert Arnoldi.

    Arnoldi runs on ``(A - shift B)^{-1} B``; its dominant eigenvalues ``mu``
    map back to ``sigma = shift + 1/mu``.  Infinite eigenvalues from the
    rank-deficient ``B`` have ``mu = 0`` and never appear.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not np.any(ops.d != 0):
        raise NoBoundary("boundary matrix is zero: the surface has no boundary")
    t0 = time.perf_counter()
    A, B = steklov_matrices(ops)
    K = (A - shift * B).tocsr()
    lu = factorize(K, backend)
    t1 = time.perf_counter()
    op = spla.LinearOperator(K.shape, matvec=lambda v: lu.solve(B @ v), dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(ops.m)
    mu, V = spla.eigs(op, k=k, which="LM", v0=v0, tol=tol)
    sigma = shift + 1.0 / mu
    order = np.argsort(sigma.real, kind="stable")
    sigma, V = sigma[order], V[:, order]
    max_imag = float(np.abs(sigma.imag).max())
    # eigenvalues are real; rotate each vector to be real as well
    V = np.real(V * np.exp(-1j * np.angle(V[np.abs(V).argmax(axis=0), np.arange(V.shape[1])])))
    sigma = sigma.real
    res = np.array(
        [np.abs(A @ V[:, i] - sigma[i] * (B @ V[:, i])).max() / np.abs(V[:, i]).max() for i in range(k)]
    )
    return EigenReport(sigma, V, res, max_imag, {"factorize": t1 - t0, "arnoldi": time.perf_counter() - t1})


def nonlinear_residual(ops, problem, cls, u):
    """Residual of ``E(L u - c u - f) - gamma (u - Ebar u - D j(cp, E u))``."""
    w = ops.E @ u
    jv = np.zeros(ops.m)
    ext = cls.exterior
    if ext.any():
        jv[ext] = problem.bc.j(cls.cp[ext], w[ext])
    return ops.E @ (ops.L @ u - problem.c * u - problem.f(cls.cp)) - ops.gamma * (u - ops.Ebar @ u - ops.d * jv)


def _djfun(bc):
    if bc.dj is not None:
        return bc.dj

    def fd(y, u):
        h = 1e-6 * np.maximum(1.0, np.abs(u))
        return (bc.j(y, u + h) - bc.j(y, u - h)) / (2 * h)

    return fd


def solve_nonlinear(ops: TubeOperators, problem: EllipticProblem, cls: PointClassification,
                    u0=None, tol: float = 1e-10, max_iter: int = 100, backend: str = "auto",
                    linearize: bool = True) -> SolveReport:
    """Iterate linear solves with the boundary function frozen at the previous iterate.

    With ``linearize`` the frozen ``j`` keeps its first-order dependence on
    ``u`` (a Newton step), so an affine ``j`` is solved in one iteration.
    Steps that increase the residual are halved.  Stops when the max-norm
    update or the scaled residual drops below ``tol``.
    """
    m = ops.m
    u = np.zeros(m) if u0 is None else np.array(u0, dtype=float)
    I = _identity(m)
    base = ops.E @ ops.L - problem.c * ops.E - ops.gamma * (I - ops.Ebar)
    Ef = ops.E @ problem.f(cls.cp)
    ext = cls.exterior
    yb = cls.cp[ext]
    d = ops.d
    j, dj = problem.bc.j, _djfun(problem.bc)

    def scaled_res(v):
        r = np.abs(nonlinear_residual(ops, problem, cls, v)).max()
        return r / (ops.gamma * max(np.abs(v).max(), 1e-300) + np.abs(Ef).max() + 1e-300)

    history = [scaled_res(u)]
    t0 = time.perf_counter()
    for it in range(1, max_iter + 1):
        w = ops.E @ u
        jk = np.zeros(m)
        sk = np.zeros(m)
        jk[ext] = j(yb, w[ext])
        if linearize:
            sk[ext] = dj(yb, w[ext])
        A = base + ops.gamma * (sp.diags(d * sk) @ ops.E)
        b = Ef - ops.gamma * d * (jk - sk * w)
        new = solve_linear(A.tocsr(), b, backend=backend).solution
        r = scaled_res(new)
        step = new - u
        halvings = 0
        while r > history[-1] and halvings < 10 and it > 1:
            step *= 0.5
            new = u + step
            r = scaled_res(new)
            halvings += 1
        change = np.abs(new - u).max()
        u = new
        history.append(r)
        log.debug("nonlinear iteration %d: change %.3e residual %.3e", it, change, r)
        if change <= tol or r <= tol:
            return SolveReport(u, r, it, timings={"solve": time.perf_counter() - t0}, history=history)
    raise NoConvergence(f"no convergence in {max_iter} iterations", history, u)
