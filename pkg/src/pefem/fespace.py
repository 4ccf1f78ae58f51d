"""Continuous Lagrange spaces of degree 1-3 on straight triangles.

Element polynomials may be evaluated anywhere in the plane: a point is
pulled back through the inverse affine map (possibly landing outside the
reference triangle) and the shape functions are evaluated there.  This is
the polynomial extension used by the boundary correction.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import SingularElement
from .mesh import PolygonalMesh, triangle_diameters


def reference_nodes(k: int) -> np.ndarray:
    """Lagrange nodes: vertices, then edge nodes (edge i runs from vertex i
    to vertex i+1), then interior nodes."""
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes = [verts]
    for i in range(3):
        a, b = verts[i], verts[(i + 1) % 3]
        s = np.arange(1, k)[:, None] / k
        nodes.append(a + s * (b - a))
    interior = [
        (i / k, j / k) for j in range(1, k) for i in range(1, k - j)
    ]
    if interior:
        nodes.append(np.array(interior))
    return np.concatenate(nodes)


_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def _factor_table(k, lam, a):
    """``L_a(lam) = prod_{j<a} (k lam - j)/(j + 1)`` and its derivative."""
    val = np.ones_like(lam)
    der = np.zeros_like(lam)
    for j in range(a):
        f = (k * lam - j) / (j + 1)
        der = der * f + val * (k / (j + 1))
        val = val * f
    return val, der


class LagrangeElement:
    """Degree-``k`` nodal basis on the reference triangle.

    Shape functions are evaluated in the barycentric product form, which
    stays well conditioned far outside the reference triangle.
    """

    def __init__(self, k: int):
        if k not in (1, 2, 3):
            raise ValueError("polynomial degree must be 1, 2 or 3")
        self.k = k
        self.nodes = reference_nodes(k)
        ij = np.rint(self.nodes * k).astype(int)
        self.multi = np.stack([k - ij.sum(axis=1), ij[:, 0], ij[:, 1]], axis=1)

    @property
    def n_local(self) -> int:
        return (self.k + 1) * (self.k + 2) // 2

    def _factors(self, xi):
        xi = np.asarray(xi, dtype=float)
        lam = np.stack([1.0 - xi[..., 0] - xi[..., 1], xi[..., 0], xi[..., 1]], axis=-1)
        lam = lam[..., None, :]  # (..., 1, 3) against (n_local, 3)
        vals = np.empty(lam.shape[:-2] + self.multi.shape)
        ders = np.empty_like(vals)
        for m in range(3):
            for a in np.unique(self.multi[:, m]):
                sel = self.multi[:, m] == a
                v, d = _factor_table(self.k, lam[..., m], a)
                vals[..., sel, m] = v
                ders[..., sel, m] = d
        return vals, ders

    def values(self, xi) -> np.ndarray:
        """Shape functions at reference points, shape (..., n_local)."""
        vals, _ = self._factors(xi)
        return vals.prod(axis=-1)

    def grads(self, xi) -> np.ndarray:
        """Reference gradients, shape (..., n_local, 2)."""
        vals, ders = self._factors(xi)
        dphi = np.stack(
            [
                ders[..., 0] * vals[..., 1] * vals[..., 2],
                vals[..., 0] * ders[..., 1] * vals[..., 2],
                vals[..., 0] * vals[..., 1] * ders[..., 2],
            ],
            axis=-1,
        )
        return dphi @ _DLAMBDA


@lru_cache(maxsize=None)
def lagrange_element(k: int) -> LagrangeElement:
    return LagrangeElement(k)


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Global continuous Lagrange space ``V_h^k`` on a mesh."""

    mesh: PolygonalMesh
    k: int

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ValueError("polynomial degree must be 1, 2 or 3")
        det = self.jacobian_det
        diam = triangle_diameters(self.mesh.vertices, self.mesh.triangles)
        bad = np.abs(det) < 1e-14 * diam**2
        if np.any(bad):
            raise SingularElement(
                f"{int(bad.sum())} degenerate triangle(s), first index "
                f"{int(np.argmax(bad))}"
            )

    @property
    def element(self) -> LagrangeElement:
        return lagrange_element(self.k)

    @property
    def n_local(self) -> int:
        return self.element.n_local

    @cached_property
    def n_dofs(self) -> int:
        m = self.mesh
        n_int = (self.k - 1) * (self.k - 2) // 2
        return m.n_vertices + (self.k - 1) * len(m.edges) + n_int * m.n_triangles

    @cached_property
    def cell_dofs(self) -> np.ndarray:
        """Local-to-global DOF map, shape (M, n_local)."""
        m, k = self.mesh, self.k
        cols = [m.triangles]
        nv, ne = m.n_vertices, len(m.edges)
        for i in range(3):
            e = m.triangle_edges[:, i]
            forward = m.triangles[:, i] == m.edges[e, 0]
            base = nv + e * (k - 1)
            steps = np.arange(k - 1)
            idx = np.where(
                forward[:, None], base[:, None] + steps, base[:, None] + (k - 2 - steps)
            )
            cols.append(idx)
        n_int = (k - 1) * (k - 2) // 2
        if n_int:
            start = nv + (k - 1) * ne
            cols.append(
                start + np.arange(m.n_triangles)[:, None] * n_int + np.arange(n_int)
            )
        return np.concatenate(cols, axis=1).astype(np.int64)

    # -- affine geometry ---------------------------------------------------
    @cached_property
    def origin(self) -> np.ndarray:
        return self.mesh.vertices[self.mesh.triangles[:, 0]]

    @cached_property
    def jacobian(self) -> np.ndarray:
        """Columns ``v1 - v0`` and ``v2 - v0``, shape (M, 2, 2)."""
        p = self.mesh.vertices[self.mesh.triangles]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)

    @cached_property
    def jacobian_det(self) -> np.ndarray:
        J = self.jacobian
        return J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]

    @cached_property
    def inverse_jacobian(self) -> np.ndarray:
        J, det = self.jacobian, self.jacobian_det
        inv = np.empty_like(J)
        inv[:, 0, 0] = J[:, 1, 1]
        inv[:, 1, 1] = J[:, 0, 0]
        inv[:, 0, 1] = -J[:, 0, 1]
        inv[:, 1, 0] = -J[:, 1, 0]
        return inv / det[:, None, None]

    def to_physical(self, elements, xi) -> np.ndarray:
        elements = np.asarray(elements)
        return self.origin[elements] + np.einsum("...ij,...j->...i", self.jacobian[elements], xi)

    def to_reference(self, elements, x) -> np.ndarray:
        elements = np.asarray(elements)
        return np.einsum(
            "...ij,...j->...i", self.inverse_jacobian[elements], x - self.origin[elements]
        )

    @cached_property
    def node_coords(self) -> np.ndarray:
        """Physical coordinates of every global DOF."""
        coords = np.empty((self.n_dofs, 2))
        phys = self.origin[:, None, :] + np.einsum(
            "mij,nj->mni", self.jacobian, self.element.nodes
        )
        coords[self.cell_dofs.ravel()] = phys.reshape(-1, 2)
        return coords

    # -- evaluation ------------------------------------------------------------
    def basis_at(self, elements, x, derivative_order: int = 1):
        """Shape functions of ``elements[i]`` at physical points ``x[i]``.

        Points may lie outside their element; the element polynomial is
        then continued.  Returns ``values`` (P, n_local) and, for
        ``derivative_order=1``, physical gradients (P, n_local, 2).
        """
        elements = np.asarray(elements)
        xi = self.to_reference(elements, np.asarray(x, dtype=float))
        vals = self.element.values(xi)
        if derivative_order == 0:
            return vals
        g_ref = self.element.grads(xi)
        grads = np.einsum("pnj,pji->pni", g_ref, self.inverse_jacobian[elements])
        return vals, grads

    def evaluate(self, coefficients, elements, x):
        """FE function (and gradient) of ``elements[i]``'s polynomial at ``x[i]``."""
        vals, grads = self.basis_at(elements, x)
        c = np.asarray(coefficients)[self.cell_dofs[np.asarray(elements)]]
        return np.einsum("pn,pn->p", vals, c), np.einsum("pni,pn->pi", grads, c)


def eval_basis(space: FeSpace, element: int, x, derivative_order: int = 0):
    """Basis of one element at one or more physical points (extrapolating)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = space.basis_at(np.full(len(x), element), x, derivative_order)
    return out


def interpolate(space: FeSpace, v) -> np.ndarray:
    """Nodal interpolant coefficients of a callable ``v(x, y)``."""
    x = space.node_coords
    vals = v(x[:, 0], x[:, 1])
    return np.broadcast_to(np.asarray(vals, dtype=float), (space.n_dofs,)).copy()
