"""Straight-edged triangulations of the catalog domains.

Boundary vertices always lie on the exact curve; interior vertices come
from scaled copies of the boundary polygon (radial layers).  Refinement is
uniform red refinement with boundary midpoints re-projected onto the curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .errors import QualityFailure
from .geometry import CurvedDomain, chord_gaps

MIN_ANGLE_DEG = 15.0
MESH_HEADER = "pefem-mesh v1"


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """Conforming triangulation with counterclockwise triangles.

    Attributes
    ----------
    vertices : (N, 2) float array
    triangles : (M, 3) int array
    vertex_param : (N,) float array
        Curve parameter of each boundary vertex, NaN for interior vertices.
    boundary_edges : (B, 2) int array
        Boundary edges oriented like their owner triangle, so the outward
        facet normal is the clockwise rotation of ``v1 - v0``.
    boundary_owner : (B,) int array
        Index of the unique triangle containing each boundary edge.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    vertex_param: np.ndarray
    boundary_edges: np.ndarray
    boundary_owner: np.ndarray
    h: float
    delta_h: float = float("nan")
    level: int = 0
    edges: np.ndarray = field(repr=False, default=None)
    triangle_edges: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_arrays(cls, vertices, triangles, vertex_param=None, level=0,
                    delta_h=float("nan")):
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        area = _signed_areas(vertices, triangles)
        flip = area < 0
        if np.any(flip):
            triangles = triangles.copy()
            triangles[flip] = triangles[flip][:, [0, 2, 1]]
        edges, tri_edges = _edge_structure(triangles)
        bedges, owner = _boundary_edges(triangles, edges, tri_edges)
        if vertex_param is None:
            vertex_param = np.full(len(vertices), np.nan)
        return cls(
            vertices=vertices,
            triangles=triangles,
            vertex_param=np.asarray(vertex_param, dtype=float),
            boundary_edges=bedges,
            boundary_owner=owner,
            h=float(np.max(triangle_diameters(vertices, triangles))),
            delta_h=float(delta_h),
            level=level,
            edges=edges,
            triangle_edges=tri_edges,
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def boundary_t(self) -> np.ndarray:
        return self.vertex_param[self.boundary_edges]

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def facet_normals(self) -> np.ndarray:
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        tau = b - a
        n = np.stack([tau[:, 1], -tau[:, 0]], axis=1)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def areas(self) -> np.ndarray:
        return _signed_areas(self.vertices, self.triangles)

    def min_angle(self) -> float:
        return float(np.min(triangle_angles(self.vertices, self.triangles)))


def _signed_areas(vertices, triangles):
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangle_diameters(vertices, triangles):
    p = vertices[triangles]
    lengths = np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)
    return lengths.max(axis=1)


def triangle_angles(vertices, triangles):
    """Interior angles in degrees, shape (M, 3)."""
    p = vertices[triangles]
    out = np.empty(triangles.shape)
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        v = p[:, (i + 2) % 3] - p[:, i]
        cosang = np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        out[:, i] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return out


def _edge_structure(triangles):
    """Unique edges (sorted vertex pairs) and the per-triangle edge indices.

    Local edge ``i`` of a triangle joins local vertices ``i`` and ``i+1``.
    """
    local = np.stack(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1
    ).reshape(-1, 2)
    keys = np.sort(local, axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    return edges, inverse.reshape(-1, 3)


def _boundary_edges(triangles, edges, tri_edges):
    counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
    if np.any(counts > 2):
        raise ValueError("non-manifold triangulation: edge shared by >2 triangles")
    flat = tri_edges.ravel()
    on_boundary = counts[flat] == 1
    slots = np.nonzero(on_boundary)[0]
    owner = slots // 3
    local = slots % 3
    v0 = triangles[owner, local]
    v1 = triangles[owner, (local + 1) % 3]
    order = np.argsort(flat[slots], kind="stable")
    return np.stack([v0, v1], axis=1)[order], owner[order]


def _inside_polygon(points, polygon):
    """Even-odd ray test of points against a closed polygon."""
    x, y = points[:, 0:1], points[:, 1:2]
    x0, y0 = polygon[None, :, 0], polygon[None, :, 1]
    x1, y1 = np.roll(x0, -1, axis=1), np.roll(y0, -1, axis=1)
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(straddle & (x < x_cross), axis=1) % 2 == 1


def _finish(domain, vertices, triangles, vertex_param, level, check=True):
    mesh = PolygonalMesh.from_arrays(vertices, triangles, vertex_param, level=level)
    if check:
        angle = mesh.min_angle()
        if angle < MIN_ANGLE_DEG:
            raise QualityFailure(
                f"minimum angle {angle:.2f} deg below {MIN_ANGLE_DEG} deg"
            )
    return _with_delta(mesh, measure_delta_h(mesh, domain))


def _with_delta(mesh, delta):
    return PolygonalMesh(
        vertices=mesh.vertices,
        triangles=mesh.triangles,
        vertex_param=mesh.vertex_param,
        boundary_edges=mesh.boundary_edges,
        boundary_owner=mesh.boundary_owner,
        h=mesh.h,
        delta_h=float(delta),
        level=mesh.level,
        edges=mesh.edges,
        triangle_edges=mesh.triangle_edges,
    )


def generate_mesh(domain: CurvedDomain, n_boundary: int) -> PolygonalMesh:
    """Radial-layer triangulation with ``n_boundary`` vertices on the curve.

    Interior vertices sit on ``ceil(n_boundary * inradius / (2 pi)) - 1``
    scaled copies of the boundary curve, each ring staggered by half a
    spacing against its neighbour; the point set is Delaunay-triangulated
    and clipped to the boundary polygon.
    """
    if n_boundary < 8:
        raise ValueError("n_boundary must be at least 8")
    t_bdry = domain.arclength_parameters(n_boundary)
    boundary = domain.point(t_bdry)
    c = np.asarray(domain.center, dtype=float)
    layers = max(1, math.ceil(n_boundary * domain.inradius / (2 * math.pi)))
    edges, cum = domain._arclength_table

    points = [c[None, :]]
    for j in range(1, layers):
        n_j = max(3, int(round(n_boundary * j / layers)))
        s = (np.arange(n_j) + 0.5 * ((layers - j) % 2)) / n_j
        t_j = np.interp(s * domain.perimeter, cum, edges)
        points.append(c + (j / layers) * (domain.point(t_j) - c))
    n_interior = sum(len(p) for p in points)
    points.append(boundary)
    vertices = np.concatenate(points)
    vertex_param = np.concatenate([np.full(n_interior, np.nan), t_bdry])

    tris = Delaunay(vertices).simplices
    keep = _inside_polygon(vertices[tris].mean(axis=1), boundary)
    mesh = PolygonalMesh.from_arrays(vertices, tris[keep], vertex_param)
    if len(mesh.boundary_edges) != n_boundary or not np.all(
        mesh.boundary_edges >= n_interior
    ):
        raise QualityFailure("triangulation does not conform to the boundary polygon")
    return _finish(domain, mesh.vertices, mesh.triangles, vertex_param, level=0)


def refine(mesh: PolygonalMesh, domain: CurvedDomain) -> PolygonalMesh:
    """Uniform red refinement; boundary midpoints are projected onto the curve."""
    nv = mesh.n_vertices
    edges = mesh.edges
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    mid_param = np.full(len(edges), np.nan)

    bsorted = np.sort(mesh.boundary_edges, axis=1)
    bidx = mesh.triangle_edges[
        mesh.boundary_owner,
        _local_edge_of(mesh.triangles[mesh.boundary_owner], bsorted),
    ]
    t_mid, eta = domain.project(mid[bidx])
    mid[bidx] = eta
    mid_param[bidx] = t_mid

    vertices = np.concatenate([mesh.vertices, mid])
    vertex_param = np.concatenate([mesh.vertex_param, mid_param])
    a, b, c = mesh.triangles.T
    e_ab, e_bc, e_ca = (mesh.triangle_edges + nv).T
    tris = np.concatenate(
        [
            np.stack([a, e_ab, e_ca], axis=1),
            np.stack([e_ab, b, e_bc], axis=1),
            np.stack([e_ca, e_bc, c], axis=1),
            np.stack([e_ab, e_bc, e_ca], axis=1),
        ]
    )
    return _finish(domain, vertices, tris, vertex_param, level=mesh.level + 1)


def _local_edge_of(tris, sorted_pairs):
    """Local edge index (0, 1, 2) of each sorted vertex pair in its triangle."""
    out = np.full(len(tris), -1)
    for i in range(3):
        pair = np.sort(tris[:, [i, (i + 1) % 3]], axis=1)
        out[np.all(pair == sorted_pairs, axis=1)] = i
    return out


def mesh_sequence(domain: CurvedDomain, n_boundary: int, levels: int):
    """Coarse mesh followed by ``levels - 1`` refinements."""
    meshes = [generate_mesh(domain, n_boundary)]
    for _ in range(levels - 1):
        meshes.append(refine(meshes[-1], domain))
    return meshes


def measure_delta_h(mesh: PolygonalMesh, domain: CurvedDomain) -> float:
    """Largest chord gap over all boundary edges."""
    a = mesh.vertices[mesh.boundary_edges[:, 0]]
    b = mesh.vertices[mesh.boundary_edges[:, 1]]
    return float(np.max(chord_gaps(domain, a, b)))


def with_measured_delta(mesh: PolygonalMesh, domain: CurvedDomain) -> PolygonalMesh:
    return _with_delta(mesh, measure_delta_h(mesh, domain))


def write_mesh(mesh: PolygonalMesh, path) -> None:
    lines = [MESH_HEADER, f"vertices {mesh.n_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"boundary_edges {len(mesh.boundary_edges)}")
    for (i, j), (ti, tj) in zip(mesh.boundary_edges, mesh.boundary_t):
        lines.append(f"{i} {j} {ti:.17g} {tj:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path, domain: CurvedDomain | None = None) -> PolygonalMesh:
    """Parse the ASCII mesh format.

    When ``domain`` is given, boundary vertices must lie on its curve to
    1e-10 and ``delta_h`` is measured.
    """
    with open(path) as fh:
        tokens = [ln.split() for ln in fh if ln.strip()]
    if " ".join(tokens[0]) != MESH_HEADER:
        raise ValueError(f"{path}: missing '{MESH_HEADER}' header")
    pos = 1

    def block(name, width, dtype):
        nonlocal pos
        head = tokens[pos]
        if head[0] != name:
            raise ValueError(f"{path}: expected '{name}' block, found {head[0]!r}")
        count = int(head[1])
        rows = tokens[pos + 1 : pos + 1 + count]
        pos += 1 + count
        if len(rows) != count or any(len(r) != width for r in rows):
            raise ValueError(f"{path}: malformed '{name}' block")
        return np.array(rows, dtype=dtype).reshape(count, width)

    vertices = block("vertices", 2, float)
    triangles = block("triangles", 3, np.int64)
    bdata = block("boundary_edges", 4, float)
    vertex_param = np.full(len(vertices), np.nan)
    bverts = bdata[:, :2].astype(np.int64)
    vertex_param[bverts[:, 0]] = bdata[:, 2]
    vertex_param[bverts[:, 1]] = bdata[:, 3]
    mesh = PolygonalMesh.from_arrays(vertices, triangles, vertex_param)
    if set(map(tuple, np.sort(bverts, axis=1))) != set(
        map(tuple, np.sort(mesh.boundary_edges, axis=1))
    ):
        raise ValueError(f"{path}: boundary_edges block does not match topology")
    if domain is not None:
        bv = mesh.boundary_vertices
        _, eta = domain.project(mesh.vertices[bv])
        off = np.max(np.linalg.norm(eta - mesh.vertices[bv], axis=1))
        if off > 1e-10:
            raise ValueError(f"{path}: boundary vertex off the curve by {off:.3e}")
        mesh = with_measured_delta(mesh, domain)
    return mesh
