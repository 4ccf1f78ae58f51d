"""Refinement studies shared by the command line and the acceptance tests."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .analysis import ConvergenceRecord, eoc, error_norms, expected_orders
from .assembly import LinearSystem, assemble_system
from .errors import DegenerateErrors
from .fespace import FeSpace
from .solver import solve


@dataclass
class LevelResult:
    mesh: object
    space: FeSpace
    system: LinearSystem
    coefficients: np.ndarray
    report: object


@dataclass
class ConvergenceStudy:
    method: str
    k: int
    records: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    perturbation: list = field(default_factory=list)
    rates: dict | None = None
    status: str = "ok"

    def fitted(self, norm: str) -> float:
        return self.rates["fitted"][norm]


def solve_level(mesh, domain, data, k: int, method: str = "pefem", solver: str = "direct",
                keep: bool = True) -> LevelResult:
    space = FeSpace(mesh, k)
    system = assemble_system(space, domain, data, method)
    u, report = solve(system, method=solver)
    if not keep:
        system = None
    return LevelResult(mesh, space, system, u, report)


def convergence_study(meshes, domain, data, k: int, method: str = "pefem",
                      solver: str = "direct", keep_systems: bool = False) -> ConvergenceStudy:
    """Solve on every mesh and collect errors and rates."""
    study = ConvergenceStudy(method=method, k=k)
    for mesh in meshes:
        res = solve_level(mesh, domain, data, k, method, solver, keep=True)
        study.perturbation.append(perturbation_ratio(res.system) if method == "pefem" else 0.0)
        if not keep_systems:
            res.system = None
        l2, h1, w1 = error_norms(res.space, res.coefficients, data)
        study.records.append(
            ConvergenceRecord(
                level=mesh.level, h=mesh.h, delta_h=mesh.delta_h, dofs=res.space.n_dofs,
                err_L2=l2, err_H1=h1, err_W1inf=w1, expected=expected_orders(k),
            )
        )
        study.levels.append(res)
    try:
        study.rates = eoc(study.records)
    except DegenerateErrors:
        study.status = "exact"
    return study


def max_norm(A) -> float:
    A = sp.csr_matrix(A)
    return float(np.max(np.abs(A.data))) if A.nnz else 0.0


def perturbation_ratio(system: LinearSystem) -> float:
    """Largest extension entry over the largest volume entry."""
    return max_norm(system.extension) / max_norm(system.volume)
