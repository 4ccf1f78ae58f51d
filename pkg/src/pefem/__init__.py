"""Polynomial-extension finite elements for Neumann problems on curved domains."""

__version__ = "0.1.0"

from .assembly import LinearSystem, assemble_system
from .errors import PefemError
from .fespace import FeSpace, interpolate
from .geometry import Disk, Ellipse, Star, make_domain
from .mesh import PolygonalMesh, generate_mesh, mesh_sequence, refine
from .problems import make_problem
from .solver import solve

__all__ = [
    "Disk", "Ellipse", "Star", "FeSpace", "LinearSystem", "PefemError", "PolygonalMesh",
    "assemble_system", "generate_mesh", "interpolate", "make_domain", "make_problem",
    "mesh_sequence", "refine", "solve",
]
