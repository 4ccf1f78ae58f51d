"""Assembly of the polynomial-extension Neumann system.

The discrete form is the conforming volume part

    N_h(w, v) = int_{Omega_h} p grad w . grad v + q w v

plus the facet correction

    < p(eta) grad w_E(eta) . n(eta) - p(xi) grad w_E(xi) . n_h , v >_{Gamma_h}

where ``w_E`` is the polynomial of the element owning the facet, continued
to the projected point ``eta(xi)``.  Matrix rows are test functions and
columns trial functions, so ``A u = b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from .fespace import FeSpace
from .problems import ProblemData
from .quadrature import make_quadrature
from .taylor import boundary_quadrature

CHUNK = 8192


@dataclass(frozen=True, eq=False)
class FacetTraces:
    """Facet quadrature points with their closest-point data."""

    xi: np.ndarray
    weights: np.ndarray
    owner: np.ndarray
    t: np.ndarray
    eta: np.ndarray
    normal: np.ndarray
    facet_normal: np.ndarray


def facet_traces(space: FeSpace, domain, degree: int | None = None) -> FacetTraces:
    degree = 2 * space.k + 2 if degree is None else degree
    mesh = space.mesh
    xi, w, edge = boundary_quadrature(mesh, degree)
    t, eta = domain.project(xi)
    return FacetTraces(
        xi=xi,
        weights=w,
        owner=mesh.boundary_owner[edge],
        t=t,
        eta=eta,
        normal=domain.normal(t),
        facet_normal=mesh.facet_normals()[edge],
    )


@dataclass(eq=False)
class LinearSystem:
    """Volume and extension operators kept apart, plus the load vector."""

    volume: sp.csr_matrix
    extension: sp.csr_matrix
    load: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def matrix(self) -> sp.csr_matrix:
        return (self.volume + self.extension).tocsr()

    @property
    def n_dofs(self) -> int:
        return self.volume.shape[0]


def _scatter(space, local, rows_of=None, cols_of=None):
    rows_of = space.cell_dofs if rows_of is None else rows_of
    cols_of = rows_of if cols_of is None else cols_of
    nl = local.shape[1]
    rows = np.repeat(rows_of[:, :, None], nl, axis=2)
    cols = np.repeat(cols_of[:, None, :], nl, axis=1)
    n = space.n_dofs
    return sp.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)
    ).tocsr()


def element_matrices(space: FeSpace, data: ProblemData, degree: int | None = None,
                     elements=None) -> np.ndarray:
    """Local matrices of ``N_h`` for the selected elements, shape (M, nl, nl)."""
    degree = 2 * space.k + 2 if degree is None else degree
    rule = make_quadrature("triangle", degree)
    el = space.element
    phi = el.values(rule.xy)  # (nq, nl)
    dphi = el.grads(rule.xy)  # (nq, nl, 2)
    nq, nl = phi.shape
    stiff_tab = np.einsum("qia,qjb->qabij", dphi, dphi).reshape(nq * 4, nl * nl)
    mass_tab = np.einsum("qi,qj->qij", phi, phi).reshape(nq, nl * nl)

    if elements is None:
        elements = np.arange(space.mesh.n_triangles)
    out = np.empty((len(elements), nl, nl))
    for start in range(0, len(elements), CHUNK):
        sel = elements[start : start + CHUNK]
        xq = space.to_physical(sel[:, None], rule.xy[None, :, :])
        detw = np.abs(space.jacobian_det[sel])[:, None] * rule.weights[None, :]
        pq = data.p(xq[..., 0], xq[..., 1]) * detw
        qq = data.q(xq[..., 0], xq[..., 1]) * detw
        inv = space.inverse_jacobian[sel]
        metric = np.einsum("mai,mbi->mab", inv, inv)  # invJ invJ^T
        s = (pq[:, :, None, None] * metric[:, None, :, :]).reshape(len(sel), nq * 4)
        out[start : start + CHUNK] = (s @ stiff_tab + qq @ mass_tab).reshape(-1, nl, nl)
    return out


def assemble_volume(space: FeSpace, data: ProblemData, degree: int | None = None) -> sp.csr_matrix:
    """Matrix of ``N_h(phi_j, phi_i)``."""
    return _scatter(space, element_matrices(space, data, degree))


def extension_facet_matrices(space: FeSpace, traces: FacetTraces, data: ProblemData):
    """Per-quadrature-point products ``w * test_i * trial_j``, shape (P, nl, nl)."""
    phi_xi, grad_xi = space.basis_at(traces.owner, traces.xi)
    _, grad_eta = space.basis_at(traces.owner, traces.eta)
    p_eta = data.p(traces.eta[:, 0], traces.eta[:, 1])
    p_xi = data.p(traces.xi[:, 0], traces.xi[:, 1])
    trial = p_eta[:, None] * np.einsum("pni,pi->pn", grad_eta, traces.normal) - p_xi[
        :, None
    ] * np.einsum("pni,pi->pn", grad_xi, traces.facet_normal)
    return traces.weights[:, None, None] * phi_xi[:, :, None] * trial[:, None, :]


def assemble_extension_boundary(space: FeSpace, domain, data: ProblemData,
                                traces: FacetTraces | None = None) -> sp.csr_matrix:
    """Nonsymmetric facet correction from the polynomial extension."""
    traces = facet_traces(space, domain) if traces is None else traces
    local = extension_facet_matrices(space, traces, data)
    return _scatter(space, local, space.cell_dofs[traces.owner])


def _volume_load(space, data, degree):
    rule = make_quadrature("triangle", degree)
    phi = space.element.values(rule.xy)
    b = np.zeros(space.n_dofs)
    m = space.mesh.n_triangles
    for start in range(0, m, CHUNK):
        sel = np.arange(start, min(start + CHUNK, m))
        xq = space.to_physical(sel[:, None], rule.xy[None, :, :])
        fw = data.f(xq[..., 0], xq[..., 1]) * (
            np.abs(space.jacobian_det[sel])[:, None] * rule.weights
        )
        np.add.at(b, space.cell_dofs[sel], fw @ phi)
    return b


def _facet_load(space, traces, gvals):
    phi = space.basis_at(traces.owner, traces.xi, derivative_order=0)
    b = np.zeros(space.n_dofs)
    np.add.at(b, space.cell_dofs[traces.owner], (traces.weights * gvals)[:, None] * phi)
    return b


def assemble_load(space: FeSpace, domain, data: ProblemData,
                  traces: FacetTraces | None = None, degree: int | None = None) -> np.ndarray:
    """``(f, phi_i)`` plus ``<g(eta(xi)), phi_i>`` on the facets."""
    degree = 2 * space.k + 2 if degree is None else degree
    traces = facet_traces(space, domain) if traces is None else traces
    return _volume_load(space, data, degree) + _facet_load(
        space, traces, data.g(traces.eta, traces.normal)
    )


def assemble_baseline_boundary(space: FeSpace, domain, data: ProblemData,
                               traces: FacetTraces | None = None, degree: int | None = None):
    """Classical polygonal Neumann FEM: no facet operator, and the datum is
    taken at the facet point itself (with the normal of its projection).

    Returns ``(operator, load)``.
    """
    degree = 2 * space.k + 2 if degree is None else degree
    traces = facet_traces(space, domain) if traces is None else traces
    n = space.n_dofs
    load = _volume_load(space, data, degree) + _facet_load(
        space, traces, data.g(traces.xi, traces.normal)
    )
    return sp.csr_matrix((n, n)), load


def assemble_system(space: FeSpace, domain, data: ProblemData, method: str = "pefem") -> LinearSystem:
    """Full linear system for ``method`` in {"pefem", "baseline"}."""
    degree = 2 * space.k + 2
    traces = facet_traces(space, domain, degree)
    volume = assemble_volume(space, data, degree)
    if method == "pefem":
        extension = assemble_extension_boundary(space, domain, data, traces)
        load = assemble_load(space, domain, data, traces, degree)
    elif method == "baseline":
        extension, load = assemble_baseline_boundary(space, domain, data, traces, degree)
    else:
        raise ValueError(f"unknown method {method!r}")
    return LinearSystem(
        volume=volume,
        extension=extension,
        load=load,
        metadata={
            "method": method,
            "k": space.k,
            "volume_quadrature_degree": degree,
            "facet_quadrature_degree": degree,
            "n_dofs": space.n_dofs,
        },
    )


def export_matrix_market(system: LinearSystem, path) -> None:
    scipy.io.mmwrite(str(path), system.matrix)
