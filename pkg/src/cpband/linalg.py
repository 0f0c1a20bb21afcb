"""Sparse direct factorizations with an optional PARDISO backend.

SuperLU (via scipy) is always available.  When ``pypardiso`` is installed it
is used for the large elliptic and eigenvalue solves; it is several times
faster on band matrices.  Select explicitly with ``backend="superlu"`` or
``backend="pardiso"``, or set ``CPBAND_SOLVER``.
"""

from __future__ import annotations

import glob
import logging
import os
import sys

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FactorizationFailure, SingularSystem

log = logging.getLogger(__name__)

_pardiso = None


def _load_pardiso():
    global _pardiso
    if _pardiso is not None:
        return _pardiso or None
    if "PYPARDISO_MKL_RT" not in os.environ:
        for d in (os.path.join(sys.prefix, "lib"), "/usr/local/lib", "/usr/lib"):
            hits = sorted(glob.glob(os.path.join(d, "libmkl_rt.so*")))
            if hits:
                os.environ["PYPARDISO_MKL_RT"] = hits[0]
                break
    try:
        import pypardiso  # noqa: F401
    except (ImportError, OSError) as exc:
        log.debug("pypardiso unavailable: %s", exc)
        _pardiso = False
        return None
    _pardiso = pypardiso
    return pypardiso


def available_backends():
    return ["superlu"] + (["pardiso"] if _load_pardiso() else [])


def resolve_backend(backend: str = "auto") -> str:
    backend = os.environ.get("CPBAND_SOLVER", backend) if backend == "auto" else backend
    if backend == "auto":
        return "pardiso" if _load_pardiso() else "superlu"
    if backend not in ("superlu", "pardiso"):
        raise ValueError(f"unknown solver backend {backend!r}")
    if backend == "pardiso" and not _load_pardiso():
        raise ValueError("pypardiso is not installed")
    return backend


class Factorization:
    """LU factors of a square sparse matrix; ``solve`` accepts vectors or (m, k) blocks."""

    def __init__(self, A, backend: str = "auto"):
        self.backend = resolve_backend(backend)
        self.shape = A.shape
        if self.backend == "pardiso":
            pypardiso = _load_pardiso()
            self._A = sp.csr_matrix(A)
            self._solver = pypardiso.PyPardisoSolver()
            try:
                self._solver.factorize(self._A)
            except Exception as exc:  # pypardiso raises plain exceptions
                raise FactorizationFailure(str(exc)) from exc
        else:
            try:
                self._lu = spla.splu(sp.csc_matrix(A), permc_spec="COLAMD")
            except RuntimeError as exc:
                raise SingularSystem(str(exc)) from exc

    def free(self):
        if self.backend == "pardiso" and self._solver is not None:
            self._solver.free_memory(everything=True)
            self._solver = None

    def __del__(self):
        try:
            self.free()
        except Exception:
            pass

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if self.backend == "pardiso":
            x = self._solver.solve(self._A, b)
        else:
            x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SingularSystem("solve produced non-finite values")
        return x


def factorize(A, backend: str = "auto") -> Factorization:
    return Factorization(A, backend)
