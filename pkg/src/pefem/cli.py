"""Command line driver: ``pefem {mesh,solve,convergence,lemma-check}``.

Exit codes: 0 success, 1 usage or unwritable output, 2 mesh quality
failure, 3 projection failure, 4 solver failure, 5 rates outside tolerance.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .analysis import error_norms, write_convergence_csv
from .errors import (
    InsufficientResolution,
    NoConvergence,
    ProjectionFailure,
    QualityFailure,
    SingularSystem,
)
from .experiments import convergence_study, solve_level
from .fespace import interpolate
from .geometry import CATALOG, make_domain
from .mesh import mesh_sequence, write_mesh
from .problems import PROBLEM_NAMES, make_problem
from .taylor import (
    SmoothField,
    lemma1_stability,
    lemma2_rate_check,
    lemma3_inverse_scaling,
)
from .vtk import write_vtk

EXIT_USAGE, EXIT_QUALITY, EXIT_PROJECTION, EXIT_SOLVER, EXIT_RATES = 1, 2, 3, 4, 5
TOLERANCE = {"L2": 0.25, "H1": 0.25, "W1inf": 0.3}
LEMMA2_PAIRS = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1))


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    domain: str = "disk"
    domain_params: tuple = ()
    degree: int = 1
    n_boundary: int = 8
    levels: int = 5
    problem: str = "exp_sin"
    method: str = "pefem"
    solver: str = "direct"
    out: str = "pefem_out"
    seed: int = 0

    def validate(self, command: str) -> None:
        if self.domain not in CATALOG:
            raise UsageError(f"unknown domain {self.domain!r}; choose from {sorted(CATALOG)}")
        if self.problem not in PROBLEM_NAMES:
            raise UsageError(f"unknown problem {self.problem!r}; choose from {PROBLEM_NAMES}")
        if self.degree not in (1, 2, 3):
            raise UsageError("degree must be 1, 2 or 3")
        if self.method not in ("pefem", "baseline", "both"):
            raise UsageError("method must be pefem, baseline or both")
        if self.solver not in ("direct", "iterative"):
            raise UsageError("solver must be direct or iterative")
        if self.levels < 1 or self.n_boundary < 8:
            raise UsageError("need levels >= 1 and n_boundary >= 8")
        if command in ("convergence", "lemma-check") and self.levels < 3:
            raise UsageError(f"{command} needs at least 3 levels")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["domain_params"] = list(self.domain_params)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def methods(self) -> tuple:
        return ("pefem", "baseline") if self.method == "both" else (self.method,)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pefem",
        description="Polynomial-extension FEM for Neumann problems on curved domains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("mesh", "solve", "convergence", "lemma-check"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with run settings")
        p.add_argument("--domain")
        p.add_argument("--degree", type=int)
        p.add_argument("--levels", type=int, help="number of meshes (coarse + refinements)")
        p.add_argument("--n-boundary", type=int, dest="n_boundary")
        p.add_argument("--problem")
        p.add_argument("--method")
        p.add_argument("--solver")
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
    return parser


def load_config(args) -> RunConfig:
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for name in known:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if "domain_params" in values:
        values["domain_params"] = tuple(values["domain_params"])
    return RunConfig(**values)


def _provenance(config: RunConfig) -> dict:
    return {"config": config.as_dict(), "config_hash": config.digest(), "version": __version__}


def _prepare_out(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _meshes(config):
    domain = make_domain(config.domain, config.domain_params)
    return domain, mesh_sequence(domain, config.n_boundary, config.levels)


def cmd_mesh(config: RunConfig) -> int:
    out = _prepare_out(config.out)
    domain, meshes = _meshes(config)
    report = []
    for mesh in meshes:
        write_mesh(mesh, os.path.join(out, f"mesh_level{mesh.level}.txt"))
        report.append(
            {
                "level": mesh.level,
                "h": mesh.h,
                "delta_h": mesh.delta_h,
                "delta_over_h2": mesh.delta_h / mesh.h**2,
                "min_angle": mesh.min_angle(),
                "n_vertices": mesh.n_vertices,
                "n_triangles": mesh.n_triangles,
            }
        )
    _write_json(os.path.join(out, "geometry.json"), {**_provenance(config), "levels": report})
    return 0


def cmd_solve(config: RunConfig) -> int:
    out = _prepare_out(config.out)
    domain, meshes = _meshes(config)
    mesh = meshes[-1]
    data = make_problem(config.problem, config.degree)
    blocks = {}
    for method in config.methods:
        res = solve_level(mesh, domain, data, config.degree, method, config.solver)
        u = res.coefficients
        nv = mesh.n_vertices
        point_data = {"u_h": u[:nv]}
        block = {
            "method": method,
            "level": mesh.level,
            "dofs": res.space.n_dofs,
            "relative_residual": res.report.relative_residual,
            "iterations": res.report.iterations,
            "timing": {"solve_seconds": res.report.seconds},
        }
        if data.has_exact:
            point_data["error"] = np.abs(data.u(mesh.vertices[:, 0], mesh.vertices[:, 1]) - u[:nv])
            l2, h1, w1 = error_norms(res.space, u, data)
            block.update(err_L2=l2, err_H1=h1, err_W1inf=w1,
                         max_nodal_error=float(np.max(np.abs(u - interpolate(res.space, data.u)))))
        write_vtk(os.path.join(out, f"solution_{method}.vtk"), mesh.vertices, mesh.triangles,
                  point_data)
        blocks[method] = block
    _write_json(os.path.join(out, "solve_report.json"), {**_provenance(config), "runs": blocks})
    return 0


def _rate_verdict(study) -> dict:
    if study.status == "exact":
        return {"status": "exact", "passed": True}
    verdict = {"status": "ok", "fitted": study.rates["fitted"], "pairwise": study.rates["pairwise"],
               "checks": {}}
    expected = study.records[0].expected
    for norm, tol in TOLERANCE.items():
        slope = study.rates["fitted"][norm]
        verdict["checks"][norm] = {
            "expected": expected[norm],
            "fitted": slope,
            "tolerance": tol,
            "passed": bool(abs(slope - expected[norm]) <= tol),
        }
    verdict["passed"] = all(c["passed"] for c in verdict["checks"].values())
    return verdict


def cmd_convergence(config: RunConfig) -> int:
    out = _prepare_out(config.out)
    domain, meshes = _meshes(config)
    data = make_problem(config.problem, config.degree)
    blocks = {}
    timing = {}
    for method in config.methods:
        t0 = time.perf_counter()
        study = convergence_study(meshes, domain, data, config.degree, method, config.solver)
        timing[method] = time.perf_counter() - t0
        write_convergence_csv(study.records, os.path.join(out, f"convergence_{method}.csv"))
        block = _rate_verdict(study)
        block["records"] = [
            {key: val for key, val in asdict(r).items() if key != "expected"} for r in study.records
        ]
        block["expected"] = study.records[0].expected
        blocks[method] = block
    payload = {**_provenance(config), "methods": blocks, "timing": timing}
    _write_json(os.path.join(out, "convergence.json"), payload)
    # only the primary method gates the exit code; the baseline is a comparator
    gate = blocks.get("pefem", next(iter(blocks.values())))
    return 0 if gate["passed"] else EXIT_RATES


def _write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row[c] if isinstance(row[c], (int, str)) else repr(float(row[c]))
                             for c in columns])


def cmd_lemma_check(config: RunConfig) -> int:
    out = _prepare_out(config.out)
    domain, meshes = _meshes(config)
    data = make_problem(config.problem, config.degree)
    field = data.exact if data.has_exact else SmoothField("exp(x)*sin(y)", "exp_sin")
    rows, summary, passed = [], [], True
    for k, m in LEMMA2_PAIRS:
        try:
            check = lemma2_rate_check(field, domain, meshes, k, m)
            status, order = check.status, check.fitted_order
            ok = check.passed()
            check_rows = check.rows
        except InsufficientResolution as exc:
            status, order, ok, check_rows = "insufficient", float("nan"), True, []
            summary.append({"k": k, "m": m, "note": str(exc)})
        passed &= ok
        summary.append({"k": k, "m": m, "expected": k + 1 - m, "fitted_order": order,
                        "status": status, "passed": bool(ok)})
        for r in check_rows:
            rows.append({"k": k, "m": m, "level": r["level"], "h": r["h"], "delta_h": r["delta_h"],
                         "discrepancy": r["discrepancy"], "fitted_order": order})
    _write_rows(os.path.join(out, "lemma2.csv"),
                ("k", "m", "level", "h", "delta_h", "discrepancy", "fitted_order"), rows)
    lemma1 = [dict(r, k=k) for k in (1, 2, 3) for r in lemma1_stability(field, domain, meshes, k)]
    _write_rows(os.path.join(out, "lemma1.csv"),
                ("k", "level", "h", "delta_h", "ratio", "excess", "constant"), lemma1)
    lemma3 = [dict(r, k=k) for k in (1, 2, 3)
              for r in lemma3_inverse_scaling(field, domain, meshes, k)]
    _write_rows(os.path.join(out, "lemma3.csv"),
                ("k", "level", "h", "delta_h", "band", "constant"), lemma3)
    _write_json(os.path.join(out, "lemma_check.json"),
                {**_provenance(config), "lemma2": summary, "passed": bool(passed)})
    return 0 if passed else EXIT_RATES


COMMANDS = {
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "lemma-check": cmd_lemma_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    try:
        config = load_config(args)
        config.validate(args.command)
        return COMMANDS[args.command](config)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pefem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QualityFailure as exc:
        print(f"pefem: mesh quality failure: {exc}", file=sys.stderr)
        return EXIT_QUALITY
    except ProjectionFailure as exc:
        print(f"pefem: projection failure: {exc}", file=sys.stderr)
        return EXIT_PROJECTION
    except (SingularSystem, NoConvergence) as exc:
        print(f"pefem: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"pefem: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
