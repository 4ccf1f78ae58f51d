"""Truncated Taylor operators for smooth fields and the extension-rate checks.

A :class:`SmoothField` wraps a sympy expression in ``x, y`` so that every
partial derivative is available in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

from .errors import InsufficientResolution
from .fespace import FeSpace, interpolate
from .geometry import CurvedDomain
from .quadrature import make_quadrature

X, Y = sympy.symbols("x y", real=True)

ROUNDOFF_FLOOR = 1e-14
FIT_LEVELS = 4


def _lambdify(expr):
    fn = sympy.lambdify((X, Y), expr, modules="numpy")
    if expr.free_symbols:
        return fn
    const = float(expr)
    return lambda x, y: np.full(np.shape(x), const)


class SmoothField:
    """Analytic scalar field with closed-form partial derivatives."""

    def __init__(self, expr, name: str | None = None):
        self.expr = sympy.sympify(expr, locals={"x": X, "y": Y})
        self.name = name or str(self.expr)
        self._cache = {}

    def __repr__(self):
        return f"SmoothField({self.name})"

    def __call__(self, x, y):
        return self.derivative(0, 0)(x, y)

    def derivative(self, i: int, j: int):
        """Callable for ``d^(i+j) v / dx^i dy^j``."""
        key = (i, j)
        if key not in self._cache:
            self._cache[key] = _lambdify(sympy.diff(self.expr, X, i, Y, j))
        return self._cache[key]

    def partial(self, i: int, j: int) -> "SmoothField":
        return SmoothField(sympy.diff(self.expr, X, i, Y, j), f"D{i}{j}({self.name})")

    def gradient(self, x, y) -> np.ndarray:
        return np.stack([self.derivative(1, 0)(x, y), self.derivative(0, 1)(x, y)], axis=-1)

    @property
    def polynomial_degree(self) -> int | None:
        try:
            return int(sympy.Poly(self.expr, X, Y).total_degree())
        except sympy.PolynomialError:
            return None

    def seminorm(self, m: int, box, samples: int = 201) -> float:
        """Sampled ``|v|_{W^m_inf}`` over ``box = (xmin, xmax, ymin, ymax)``."""
        xs = np.linspace(box[0], box[1], samples)
        ys = np.linspace(box[2], box[3], samples)
        xx, yy = np.meshgrid(xs, ys)
        return max(
            float(np.max(np.abs(self.derivative(i, m - i)(xx, yy)))) for i in range(m + 1)
        )


FIELD_CATALOG = {
    "exp_sin": "exp(x)*sin(y)",
    "trig": "cos(pi*x)*cosh(y)",
    "quadratic": "x**2 - y + 3",
    "cubic": "x**3 - x*y**2 + 2*y**2 - y + 3",
}


def make_field(name: str) -> SmoothField:
    return SmoothField(FIELD_CATALOG.get(name, name), name)


@lru_cache(maxsize=None)
def _multi_indices(k_lo, k_hi):
    return [(i, n - i) for n in range(k_lo, k_hi + 1) for i in range(n + 1)]


def taylor_band(v: SmoothField, center, target, k_lo: int, k_hi: int) -> np.ndarray:
    """Sum of the Taylor terms of orders ``k_lo..k_hi`` about ``center``."""
    center = np.asarray(center, dtype=float)
    target = np.asarray(target, dtype=float)
    d = target - center
    cx, cy = center[..., 0], center[..., 1]
    total = np.zeros(np.broadcast_shapes(cx.shape, d[..., 0].shape))
    for i, j in _multi_indices(max(k_lo, 0), k_hi):
        coef = v.derivative(i, j)(cx, cy) / (math.factorial(i) * math.factorial(j))
        total = total + coef * d[..., 0] ** i * d[..., 1] ** j
    return total


def taylor_eval(v: SmoothField, center, target, k: int) -> np.ndarray:
    """Degree-``k`` Taylor polynomial of ``v`` about ``center`` at ``target``."""
    return taylor_band(v, center, target, 0, k)


def boundary_quadrature(space_or_mesh, degree: int):
    """Physical segment quadrature on every boundary facet.

    Returns ``(xi, weights, edge_index)`` with ``xi`` of shape (B*nq, 2).
    """
    mesh = getattr(space_or_mesh, "mesh", space_or_mesh)
    rule = make_quadrature("segment", degree)
    a = mesh.vertices[mesh.boundary_edges[:, 0]]
    b = mesh.vertices[mesh.boundary_edges[:, 1]]
    xi = a[:, None, :] + rule.points[None, :, None] * (b - a)[:, None, :]
    length = np.linalg.norm(b - a, axis=1)
    w = length[:, None] * rule.weights[None, :]
    edge = np.repeat(np.arange(len(a)), len(rule.weights))
    return xi.reshape(-1, 2), w.ravel(), edge


def fit_order(x, y, last: int = FIT_LEVELS) -> float:
    """Least-squares slope of ``log y`` against ``log x`` over the last points."""
    x = np.asarray(x, dtype=float)[-last:]
    y = np.asarray(y, dtype=float)[-last:]
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


@dataclass
class LemmaCheck:
    """Per-level discrepancies and the fitted order against ``delta_h``."""

    k: int
    m: int
    rows: list = field(default_factory=list)
    fitted_order: float = float("nan")
    status: str = "ok"

    @property
    def expected_order(self) -> int:
        return self.k + 1 - self.m

    def passed(self, tol: float = 0.25) -> bool:
        if self.status == "exact":
            return True
        return self.status == "ok" and abs(self.fitted_order - self.expected_order) <= tol


def extension_discrepancy(v: SmoothField, domain: CurvedDomain, mesh, k: int, m: int) -> float:
    """Max over facet quadrature points of the ``W^m_inf`` gap between the
    Taylor extension from ``xi`` and ``v`` at ``eta(xi)``."""
    xi, _, _ = boundary_quadrature(mesh, 2 * k + 2)
    _, eta = domain.project(xi)
    disc = np.abs(taylor_eval(v, xi, eta, k) - v(eta[:, 0], eta[:, 1]))
    worst = float(np.max(disc))
    if m >= 1:
        for i, j in ((1, 0), (0, 1)):
            dv = v.partial(i, j)
            gap = np.abs(taylor_eval(dv, xi, eta, k - 1) - dv(eta[:, 0], eta[:, 1]))
            worst = max(worst, float(np.max(gap)))
    return worst


def lemma2_rate_check(v: SmoothField, domain: CurvedDomain, meshes, k: int, m: int) -> LemmaCheck:
    """Observed order of the Taylor extension error against ``delta_h``.

    The fitted slope uses the last four levels whose discrepancy is above
    the round-off floor; the expected value is ``k + 1 - m``.
    """
    if len(meshes) < 4:
        raise ValueError("need at least four meshes")
    result = LemmaCheck(k=k, m=m)
    for mesh in meshes:
        disc = extension_discrepancy(v, domain, mesh, k, m)
        result.rows.append(
            {
                "level": mesh.level,
                "h": mesh.h,
                "delta_h": mesh.delta_h,
                "discrepancy": disc,
                "usable": disc > ROUNDOFF_FLOOR,
            }
        )
    deg = v.polynomial_degree
    if deg is not None and deg <= k:
        # every Taylor expansion is exact
        result.status = "exact"
        return result
    usable = [r for r in result.rows if r["usable"]]
    if len(usable) < FIT_LEVELS:
        result.status = "insufficient"
        raise InsufficientResolution(
            f"only {len(usable)} discrepancies above {ROUNDOFF_FLOOR:g} for k={k}, m={m}"
        )
    result.fitted_order = fit_order(
        [r["delta_h"] for r in usable], [r["discrepancy"] for r in usable]
    )
    return result


def _facet_samples(mesh, per_edge: int = 32):
    s = (np.arange(per_edge) + 0.5) / per_edge
    a = mesh.vertices[mesh.boundary_edges[:, 0]]
    b = mesh.vertices[mesh.boundary_edges[:, 1]]
    return (a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)


def _sampled_sup(v: SmoothField, mesh, facet_points) -> float:
    """``sup |v|`` over the polygon, sampled at vertices, dense facet points
    and volume quadrature points."""
    rule = make_quadrature("triangle", 6)
    p = mesh.vertices[mesh.triangles]
    vol = np.einsum("qa,mad->mqd", rule.points, p).reshape(-1, 2)
    pts = np.concatenate([mesh.vertices, facet_points, vol])
    return float(np.max(np.abs(v(pts[:, 0], pts[:, 1]))))


def lemma1_stability(v: SmoothField, domain: CurvedDomain, meshes, k: int):
    """Growth of the extended field beyond ``sup |v|`` per level.

    Rows carry ``ratio = max|T^k v (xi -> eta)| / sup|v|`` over 32 points
    per facet, the excess ``ratio - 1`` (clamped at 0) and
    ``constant = excess / delta_h``.
    """
    rows = []
    for mesh in meshes:
        xi = _facet_samples(mesh)
        _, eta = domain.project(xi)
        ext = float(np.max(np.abs(taylor_eval(v, xi, eta, k))))
        ratio = ext / _sampled_sup(v, mesh, xi)
        excess = max(ratio - 1.0, 0.0)
        rows.append(
            {
                "level": mesh.level,
                "h": mesh.h,
                "delta_h": mesh.delta_h,
                "ratio": ratio,
                "excess": excess,
                "constant": excess / mesh.delta_h,
            }
        )
    return rows


def lemma3_inverse_scaling(v: SmoothField, domain: CurvedDomain, meshes, k: int):
    """Band ``1..k`` of the extended FE interpolant, scaled by ``delta_h / h``.

    For an element polynomial the full Taylor expansion is exact, so the
    band equals ``P(eta) - P(xi)`` for the owner element's polynomial ``P``.
    """
    rows = []
    for mesh in meshes:
        space = FeSpace(mesh, k)
        coeffs = interpolate(space, v)
        xi, _, edge = boundary_quadrature(mesh, 2 * k + 2)
        _, eta = domain.project(xi)
        owner = mesh.boundary_owner[edge]
        at_eta, _ = space.evaluate(coeffs, owner, eta)
        at_xi, _ = space.evaluate(coeffs, owner, xi)
        band = float(np.max(np.abs(at_eta - at_xi)))
        sup = float(np.max(np.abs(coeffs)))
        rows.append(
            {
                "level": mesh.level,
                "h": mesh.h,
                "delta_h": mesh.delta_h,
                "band": band,
                "constant": band / (mesh.delta_h / mesh.h * sup),
            }
        )
    return rows
