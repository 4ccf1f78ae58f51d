"""Legacy ASCII VTK export of vertex fields on a triangulation."""
from __future__ import annotations

import numpy as np


def write_vtk(path, vertices, triangles, point_data: dict, title: str = "pefem solution") -> None:
    """Write a POLYDATA file with one SCALARS block per entry of ``point_data``.

    Parameters
    ----------
    vertices : (N, 2) array
    triangles : (M, 3) int array
    point_data : dict
        Name to (N,) array.  Insertion order is kept.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    n = len(vertices)
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {n} double",
    ]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in vertices]
    lines.append(f"POLYGONS {len(triangles)} {4 * len(triangles)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in triangles]
    lines.append(f"POINT_DATA {n}")
    for name, values in point_data.items():
        values = np.asarray(values, dtype=float)
        if values.shape != (n,):
            raise ValueError(f"field {name!r} has shape {values.shape}, expected ({n},)")
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in values]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk_scalars(path) -> dict:
    """Point scalars of a file written by :func:`write_vtk`."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    out = {}
    i = 0
    n = None
    while i < len(tokens):
        line = tokens[i]
        if line.startswith("POINT_DATA"):
            n = int(line.split()[1])
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            out[name] = np.array([float(v) for v in tokens[i + 2 : i + 2 + n]])
            i += 1 + n
        i += 1
    return out
