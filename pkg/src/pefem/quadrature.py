"""Gauss rules on the reference triangle and the unit segment.

Triangle rules of degree <= 9 are fully symmetric (Dunavant orbit
structure).  The tabulated seeds are polished at first use by a
least-squares solve of the moment equations, so every rule is exact to
round-off.  Degrees 10-12 use the conical product (collapsed Gauss-Jacobi)
rule, which is exact but not symmetric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares
from scipy.special import roots_jacobi

from .errors import UnsupportedDegree

MAX_DEGREE = 12


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference cell.

    For triangles ``points`` holds barycentric coordinates (n, 3) and
    :attr:`xy` the Cartesian reference coordinates; for segments ``points``
    are parameters in ``[0, 1]``.
    """

    kind: str
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def xy(self) -> np.ndarray:
        if self.kind != "triangle":
            raise AttributeError("xy is only defined for triangle rules")
        return self.points[:, 1:3]

    def __len__(self):
        return len(self.weights)


# (orbit type, parameters, weight) with Dunavant weights normalised to 1.
_SEEDS = {
    1: [("s3", (), 1.0)],
    2: [("s21", (1 / 6,), 1 / 3)],
    3: [("s3", (), -0.5625), ("s21", (0.2,), 0.520833333333333)],
    4: [
        ("s21", (0.445948490915965,), 0.223381589678011),
        ("s21", (0.091576213509771,), 0.109951743655322),
    ],
    5: [
        ("s3", (), 0.225),
        ("s21", (0.470142064105115,), 0.132394152788506),
        ("s21", (0.101286507323456,), 0.125939180544827),
    ],
    6: [
        ("s21", (0.249286745170910,), 0.116786275726379),
        ("s21", (0.063089014491502,), 0.050844906370207),
        ("s111", (0.053145049844817, 0.310352451033784), 0.082851075618374),
    ],
    7: [
        ("s3", (), -0.149570044467682),
        ("s21", (0.260345966079040,), 0.175615257433208),
        ("s21", (0.065130102902216,), 0.053347235608838),
        ("s111", (0.048690315425316, 0.312865496004874), 0.077113760890257),
    ],
    8: [
        ("s3", (), 0.144315607677787),
        ("s21", (0.459292588292723,), 0.095091634267285),
        ("s21", (0.170569307751760,), 0.103217370534718),
        ("s21", (0.050547228317031,), 0.032458497623198),
        ("s111", (0.008394777409958, 0.263112829634638), 0.027230314174435),
    ],
    9: [
        ("s3", (), 0.097135796282799),
        ("s21", (0.489682519198738,), 0.031334700227139),
        ("s21", (0.437089591492937,), 0.077827541004774),
        ("s21", (0.188203535619033,), 0.079647738927210),
        ("s21", (0.044729513394453,), 0.025577675658698),
        ("s111", (0.036838412054736, 0.221962989160766), 0.043283539377289),
    ],
}


def _orbit(kind, params):
    if kind == "s3":
        return np.full((1, 3), 1.0 / 3.0)
    if kind == "s21":
        (a,) = params
        c = 1.0 - 2.0 * a
        return np.array([[c, a, a], [a, c, a], [a, a, c]])
    a, b = params
    c = 1.0 - a - b
    return np.array([[a, b, c], [b, c, a], [c, a, b], [b, a, c], [a, c, b], [c, b, a]])


def _assemble(structure, theta):
    pts, wts = [], []
    pos = 0
    for kind, nparam in structure:
        params = theta[pos : pos + nparam]
        w = theta[pos + nparam]
        pos += nparam + 1
        orb = _orbit(kind, params)
        pts.append(orb)
        wts.append(np.full(len(orb), w))
    return np.concatenate(pts), np.concatenate(wts)


def monomial_integral(i: int, j: int) -> float:
    """Exact integral of ``x**i * y**j`` over the reference triangle."""
    return math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)


def _moments(degree):
    return [(i, d - i) for d in range(degree + 1) for i in range(d + 1)]


@lru_cache(maxsize=None)
def _symmetric_rule(degree):
    seed = _SEEDS[degree]
    structure = [(kind, len(params)) for kind, params, _ in seed]
    theta0 = np.concatenate([np.r_[params, 0.5 * w] for _, params, w in seed])
    mono = _moments(degree)
    exact = np.array([monomial_integral(i, j) for i, j in mono])

    def residual(theta):
        bary, w = _assemble(structure, theta)
        x, y = bary[:, 1], bary[:, 2]
        return np.array([np.dot(w, x**i * y**j) for i, j in mono]) - exact

    sol = least_squares(residual, theta0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    bary, w = _assemble(structure, sol.x)
    return bary, w


@lru_cache(maxsize=None)
def _conical_rule(degree):
    n = (degree + 2) // 2
    # collapsed coordinates: x = u (1 - v), y = v, Jacobian (1 - v)
    gv, wv = roots_jacobi(n, 1.0, 0.0)
    gu, wu = np.polynomial.legendre.leggauss(n)
    v = 0.5 * (gv + 1.0)
    u = 0.5 * (gu + 1.0)
    wv = wv / 4.0
    wu = wu / 2.0
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    x = (U * (1.0 - V)).ravel()
    y = V.ravel()
    bary = np.stack([1.0 - x - y, x, y], axis=1)
    return bary, W.ravel()


def make_quadrature(kind: str, degree: int) -> QuadratureRule:
    """Quadrature rule on the reference triangle or unit segment.

    Parameters
    ----------
    kind : {"triangle", "segment"}
    degree : int
        Requested polynomial exactness, at most 12.
    """
    degree = max(int(degree), 1)
    if degree > MAX_DEGREE:
        raise UnsupportedDegree(f"no rule of degree {degree} (max {MAX_DEGREE})")
    if kind == "segment":
        n = math.ceil((degree + 1) / 2)
        x, w = np.polynomial.legendre.leggauss(n)
        return QuadratureRule("segment", 0.5 * (x + 1.0), 0.5 * w, degree)
    if kind == "triangle":
        if degree in _SEEDS:
            bary, w = _symmetric_rule(degree)
        else:
            bary, w = _conical_rule(degree)
        return QuadratureRule("triangle", bary.copy(), w.copy(), degree)
    raise ValueError(f"unknown quadrature kind {kind!r}")
