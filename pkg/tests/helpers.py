"""Test doubles and independent oracles shared by several test modules."""
import numpy as np

from pefem.problems import ProblemData
from pefem.quadrature import _conical_rule


class FlatDomain:
    """Boundary double whose curve is the polygon itself: ``eta(xi) = xi``
    and ``n = n_h``.  The parameter is the index of the facet."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.a = mesh.vertices[mesh.boundary_edges[:, 0]]
        self.b = mesh.vertices[mesh.boundary_edges[:, 1]]

    def project(self, x):
        x = np.asarray(x, dtype=float)
        d = self.b - self.a
        s = np.clip(np.einsum("pej,ej->pe", x[:, None, :] - self.a, d) / np.sum(d * d, axis=1), 0, 1)
        foot = self.a + s[..., None] * d
        edge = np.argmin(np.linalg.norm(x[:, None, :] - foot, axis=2), axis=1)
        return edge.astype(float), x.copy()

    def normal(self, t):
        return self.mesh.facet_normals()[np.asarray(t).astype(int)]


def constant_data(p=1.0, q=1.0, f=0.0, g=0.0, name="const"):
    def const(c):
        return lambda x, y: np.full(np.shape(x), float(c))

    return ProblemData(
        name=name, p=const(p), q=const(q), f=const(f),
        g=lambda pts, normals: np.full(np.shape(pts)[:-1], float(g)),
    )


def dense_triangle_rule():
    """Degree-40 collapsed Gauss rule (independent of the shipped tables)."""
    xg, wg = np.polynomial.legendre.leggauss(21)
    u = 0.5 * (xg + 1.0)
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wg, wg) / 4.0 * (1.0 - V)
    pts = np.stack([(U * (1.0 - V)).ravel(), V.ravel()], axis=1)
    return pts, W.ravel()


def p1_barycentric(tri, x):
    """Barycentric coordinates of points ``x`` in triangle ``tri`` (3, 2)."""
    T = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    rs = np.linalg.solve(T, (np.asarray(x) - tri[0]).T).T
    return np.column_stack([1 - rs.sum(axis=1), rs])
