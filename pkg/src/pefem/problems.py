"""Problem data and the manufactured-solution catalog.

Manufactured data are global analytic expressions, so the source used on
the polygon equals the one on the exact domain.  The Neumann datum is a
callable of boundary points and exact outward normals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy

from .taylor import X, Y, SmoothField

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemData:
    """Coefficients and data of ``-div(p grad u) + q u = f``,
    ``p grad u . n = g`` on the curved boundary."""

    name: str
    p: ScalarField
    q: ScalarField
    f: ScalarField
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    exact: SmoothField | None = None
    smoothness: int = 10**6
    p_expr: object = None
    q_expr: object = None

    @property
    def has_exact(self) -> bool:
        return self.exact is not None

    def u(self, x, y):
        return self.exact(x, y)

    def grad_u(self, x, y):
        return self.exact.gradient(x, y)

    def check_coefficients(self, box, samples: int = 101, p0: float = 0.0, q0: float = 0.0):
        """Sampled lower bounds ``min p`` and ``min q`` over a box; raises if
        either is not strictly above the given floors."""
        xs = np.linspace(box[0], box[1], samples)
        ys = np.linspace(box[2], box[3], samples)
        xx, yy = np.meshgrid(xs, ys)
        pmin = float(np.min(self.p(xx, yy)))
        qmin = float(np.min(self.q(xx, yy)))
        if pmin <= p0 or qmin <= q0:
            raise ValueError(f"coefficients not positive: min p={pmin:g}, min q={qmin:g}")
        return pmin, qmin


def _callable(expr):
    return SmoothField(expr)


def manufactured(name: str, u, p=1, q=1, smoothness: int = 10**6) -> ProblemData:
    """Problem whose exact solution is the expression ``u``.

    ``f = -div(p grad u) + q u``; the Neumann datum at a boundary point with
    exact normal ``n`` is ``p grad u . n``.
    """
    loc = {"x": X, "y": Y}
    u_e = sympy.sympify(u, locals=loc)
    p_e = sympy.sympify(p, locals=loc)
    q_e = sympy.sympify(q, locals=loc)
    f_e = -(sympy.diff(p_e * sympy.diff(u_e, X), X) + sympy.diff(p_e * sympy.diff(u_e, Y), Y)) + q_e * u_e
    exact = SmoothField(u_e, name)
    pf, qf, ff = _callable(p_e), _callable(q_e), _callable(sympy.simplify(f_e))

    def g(points, normals):
        points = np.asarray(points, dtype=float)
        x, y = points[..., 0], points[..., 1]
        flux = pf(x, y)[..., None] * exact.gradient(x, y)
        return np.einsum("...i,...i->...", flux, normals)

    return ProblemData(
        name=name, p=pf, q=qf, f=ff, g=g, exact=exact, smoothness=smoothness,
        p_expr=p_e, q_expr=q_e,
    )


POLY_K = {
    1: "2*x - y + 3",
    2: "x**2 - y + 3",
    3: "x**3 - x*y**2 + 2*y**2 - y + 3",
}


def make_problem(name: str, k: int = 1) -> ProblemData:
    """Catalog problems: ``constant``, ``poly_k``, ``exp_sin``, ``trig``."""
    if name == "constant":
        return manufactured("constant", "1")
    if name == "poly_k":
        return manufactured(f"poly_{k}", POLY_K[k])
    if name == "exp_sin":
        return manufactured("exp_sin", "exp(x)*sin(y)")
    if name == "trig":
        return manufactured(
            "trig", "cos(pi*x)*cosh(y)", p="2 + sin(x)*cos(y)", q="1 + x**2"
        )
    raise ValueError(
        f"unknown problem {name!r}; choose from constant, poly_k, exp_sin, trig"
    )


PROBLEM_NAMES = ("constant", "poly_k", "exp_sin", "trig")
