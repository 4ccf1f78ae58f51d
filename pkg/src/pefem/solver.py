"""Linear solvers for the nonsymmetric extension system."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence, SingularSystem

RESIDUAL_TOL = 1e-10
GMRES_RESTART = 50
GMRES_MAXITER = 10_000


@dataclass
class SolveReport:
    method: str
    relative_residual: float
    iterations: int
    seconds: float


def _matrix(system_or_matrix):
    return getattr(system_or_matrix, "matrix", system_or_matrix)


def relative_residual(A, u, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ u - b)
    return float(r / nb) if nb > 0 else float(r)


def solve(system_or_matrix, b=None, method: str = "direct", maxiter: int = GMRES_MAXITER):
    """Solve ``A u = b``.

    Parameters
    ----------
    system_or_matrix : LinearSystem or sparse matrix
    b : ndarray, optional
        Right-hand side; defaults to ``system.load``.
    method : {"direct", "iterative"}
        Sparse LU with partial pivoting, or Jacobi-preconditioned GMRES(50).
    maxiter : int
        Total GMRES iteration budget.

    Returns
    -------
    u : ndarray
    report : SolveReport
    """
    A = sp.csc_matrix(_matrix(system_or_matrix))
    b = system_or_matrix.load if b is None else np.asarray(b, dtype=float)
    t0 = time.perf_counter()
    if method == "direct":
        try:
            lu = spla.splu(A, permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SingularSystem(f"LU factorisation failed: {exc}") from exc
        u = lu.solve(b)
        iterations = 0
        if not np.all(np.isfinite(u)):
            raise SingularSystem("LU solve produced non-finite values")
    elif method == "iterative":
        diag = A.diagonal()
        if np.any(diag == 0):
            raise SingularSystem("zero diagonal entry; Jacobi preconditioner undefined")
        M = sp.diags(1.0 / diag)
        count = [0]

        def cb(_):
            count[0] += 1

        u, info = spla.gmres(
            A, b, M=M, rtol=1e-11, atol=0.0, restart=GMRES_RESTART,
            maxiter=max(1, maxiter // GMRES_RESTART), callback=cb,
            callback_type="pr_norm",
        )
        iterations = count[0]
        if info != 0 and relative_residual(A, u, b) > RESIDUAL_TOL:
            raise NoConvergence(f"GMRES stopped after {iterations} iterations (info={info})")
    else:
        raise ValueError(f"unknown solver {method!r}")
    res = relative_residual(A, u, b)
    if res > RESIDUAL_TOL:
        if method == "direct":
            raise SingularSystem(f"relative residual {res:.3e} after LU solve")
        raise NoConvergence(f"relative residual {res:.3e} after GMRES")
    return u, SolveReport(method, res, iterations, time.perf_counter() - t0)


def conditioning_probe(system_or_matrix, iterations: int = 20, seed: int = 0) -> dict:
    """Rough extreme singular values by power and inverse iteration on
    ``A^T A``.  Diagnostic only."""
    A = sp.csc_matrix(_matrix(system_or_matrix))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[0])
    for _ in range(iterations):
        x = A.T @ (A @ x)
        x /= np.linalg.norm(x)
    smax = float(np.linalg.norm(A @ x))
    lu = spla.splu(A)
    y = rng.standard_normal(A.shape[0])
    for _ in range(iterations):
        y = lu.solve(lu.solve(y, trans="T"))
        y /= np.linalg.norm(y)
    smin = float(np.linalg.norm(A @ y))
    return {"sigma_max": smax, "sigma_min": smin, "condition": smax / smin}
