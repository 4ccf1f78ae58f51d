"""Error norms over the polygonal domain and estimated orders of convergence."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateErrors, MissingExact
from .fespace import FeSpace
from .quadrature import make_quadrature
from .taylor import FIT_LEVELS, fit_order

NORMS = ("L2", "H1", "W1inf")
DEGENERATE = 1e-13
CHUNK = 8192


def _lattice(r: int) -> np.ndarray:
    return np.array([(i / r, j / r) for j in range(r + 1) for i in range(r + 1 - j)])


def error_norms(space: FeSpace, coefficients, data, degree: int | None = None,
                lattice: int = 0):
    """``(L2, H1 seminorm, W1inf)`` norms of ``u - u_h`` over the mesh.

    Integrals use a triangle rule of exactness ``2k + 4``.  The W1inf value
    is the largest of ``|e|``, ``|d_x e|`` and ``|d_y e|`` sampled at the
    quadrature points and Lagrange nodes of every element; ``lattice > 0``
    adds a uniform barycentric lattice of that order to the sample set.
    """
    exact = getattr(data, "exact", None)
    if exact is None:
        raise MissingExact(f"problem {getattr(data, 'name', '?')!r} has no exact solution")
    degree = 2 * space.k + 4 if degree is None else degree
    rule = make_quadrature("triangle", degree)
    samples = [rule.xy, space.element.nodes]
    if lattice:
        samples.append(_lattice(lattice))
    ref = np.concatenate(samples)
    nq = len(rule.weights)
    el = space.element
    phi, dphi = el.values(ref), el.grads(ref)
    coefficients = np.asarray(coefficients, dtype=float)

    l2 = h1 = 0.0
    w1 = 0.0
    m = space.mesh.n_triangles
    for start in range(0, m, CHUNK):
        sel = np.arange(start, min(start + CHUNK, m))
        c = coefficients[space.cell_dofs[sel]]  # (M, nl)
        x = space.to_physical(sel[:, None], ref[None, :, :])
        uh = c @ phi.T
        g_ref = np.einsum("pnj,mn->mpj", dphi, c)
        guh = np.einsum("mpj,mji->mpi", g_ref, space.inverse_jacobian[sel])
        e = exact(x[..., 0], x[..., 1]) - uh
        ge = exact.gradient(x[..., 0], x[..., 1]) - guh
        w = np.abs(space.jacobian_det[sel])[:, None] * rule.weights
        l2 += float(np.sum(w * e[:, :nq] ** 2))
        h1 += float(np.sum(w * np.sum(ge[:, :nq] ** 2, axis=-1)))
        w1 = max(w1, float(np.max(np.abs(e))), float(np.max(np.abs(ge))))
    return math.sqrt(l2), math.sqrt(h1), w1


@dataclass
class ConvergenceRecord:
    """Errors of one refinement level."""

    level: int
    h: float
    delta_h: float
    dofs: int
    err_L2: float
    err_H1: float
    err_W1inf: float
    eoc_L2: float = float("nan")
    eoc_H1: float = float("nan")
    eoc_W1inf: float = float("nan")
    expected: dict = field(default_factory=dict)

    def error(self, norm: str) -> float:
        return getattr(self, f"err_{norm}")


def expected_orders(k: int, s: int = 1) -> dict:
    return {"L2": k + s, "H1": k, "W1inf": k}


def pairwise_rates(h, e) -> np.ndarray:
    h, e = np.asarray(h, dtype=float), np.asarray(e, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


def eoc(records, last: int = FIT_LEVELS) -> dict:
    """Pairwise rates per norm (also stored on the records) and the
    least-squares slope over the last ``last`` levels.

    Raises
    ------
    DegenerateErrors
        If any error is at or below ``1e-13``.
    """
    if len(records) < 2:
        raise ValueError("need at least two records")
    h = np.array([r.h for r in records])
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must strictly decrease")
    out = {"pairwise": {}, "fitted": {}}
    for norm in NORMS:
        e = np.array([r.error(norm) for r in records])
        if np.any(e <= DEGENERATE):
            raise DegenerateErrors(f"{norm} error at or below {DEGENERATE:g}")
        rates = pairwise_rates(h, e)
        for r, rate in zip(records[1:], rates):
            setattr(r, f"eoc_{norm}", float(rate))
        out["pairwise"][norm] = [float(x) for x in rates]
        out["fitted"][norm] = fit_order(h, e, last)
    return out


CSV_COLUMNS = (
    "level", "h", "delta_h", "dofs", "err_L2", "err_H1", "err_W1inf",
    "eoc_L2", "eoc_H1", "eoc_W1inf",
)


def write_convergence_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            row = asdict(r)
            writer.writerow(
                [row[c] if c in ("level", "dofs") else repr(float(row[c])) for c in CSV_COLUMNS]
            )
