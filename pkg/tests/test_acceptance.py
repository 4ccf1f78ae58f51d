"""Acceptance criteria, one test each.

Every test appends a single PASS/FAIL line to the terminal summary.  The
convergence studies use the disk meshes of levels 0..6 grown from an 8-gon;
rates are least-squares slopes over the last four levels.
"""
import json

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from pefem import cli
from pefem.analysis import pairwise_rates
from pefem.assembly import assemble_system
from pefem.experiments import convergence_study
from pefem.fespace import FeSpace, interpolate
from pefem.geometry import Disk, Ellipse, Star
from pefem.mesh import mesh_sequence
from pefem.problems import make_problem
from pefem.solver import solve
from pefem.taylor import SmoothField, fit_order, lemma2_rate_check

RATE_LEVELS = slice(2, 7)


def report(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
    return ok


@pytest.fixture(scope="module")
def studies(disk, disk_meshes):
    """exp(x) sin(y) on levels 2..6 for both methods and k = 1, 2, 3."""
    data = make_problem("exp_sin")
    return {
        (method, k): convergence_study(disk_meshes[RATE_LEVELS], disk, data, k, method)
        for k in (1, 2, 3)
        for method in ("pefem", "baseline")
    }


def test_01_patch_test(disk, disk_meshes):
    worst = {}
    for k in (1, 2, 3):
        data = make_problem("poly_k", k)
        errs = []
        for mesh in disk_meshes:
            space = FeSpace(mesh, k)
            u, _ = solve(assemble_system(space, disk, data))
            errs.append(np.max(np.abs(u - interpolate(space, data.u))))
        worst[k] = max(errs)
    ok = all(e <= 1e-8 for e in worst.values())
    detail = ", ".join(f"k={k} max nodal error {e:.1e}" for k, e in worst.items())
    assert report(1, "patch test (levels 0-6)", ok, detail + " (<= 1e-8)")


def test_02_w1inf_rate(studies):
    slopes = {k: studies["pefem", k].fitted("W1inf") for k in (1, 2, 3)}
    ok = all(k - 0.3 <= s <= k + 0.5 for k, s in slopes.items())
    detail = ", ".join(f"k={k} slope {s:.3f} in [{k - 0.3}, {k + 0.5}]" for k, s in slopes.items())
    assert report(2, "W1inf rate", ok, detail)


def test_03_l2_rate(studies):
    lines, ok = [], True
    for k in (1, 2, 3):
        st = studies["pefem", k]
        l2, h1 = st.fitted("L2"), st.fitted("H1")
        good = k + 0.75 <= l2 <= k + 1.5 and l2 - h1 >= 0.7
        ok &= good
        lines.append(f"k={k} L2 {l2:.3f}, L2-H1 {l2 - h1:.3f}")
    assert report(3, "L2 rate and L2-H1 gap", ok, "; ".join(lines))


def test_04_h1_rate(studies):
    slopes = {k: studies["pefem", k].fitted("H1") for k in (1, 2, 3)}
    ok = all(k - 0.25 <= s <= k + 0.5 for k, s in slopes.items())
    detail = ", ".join(f"k={k} slope {s:.3f}" for k, s in slopes.items())
    assert report(4, "H1 rate", ok, detail)


def test_05_geometric_assumption(disk_meshes, ellipse_meshes):
    ratios = {
        name: [m.delta_h / m.h**2 for m in meshes]
        for name, meshes in (("disk", disk_meshes), ("ellipse", ellipse_meshes))
    }
    ok = all(0.05 <= r <= 0.5 for rs in ratios.values() for r in rs)
    detail = ", ".join(f"{n} delta/h^2 in [{min(r):.3f}, {max(r):.3f}]" for n, r in ratios.items())
    assert report(5, "delta_h ~ h^2 (levels 0-6)", ok, detail)


def test_06_lemma2_rates(disk, disk_meshes):
    v = SmoothField("exp(x)*sin(y)")
    parts, ok = [], True
    for k, m in ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1)):
        check = lemma2_rate_check(v, disk, disk_meshes, k, m)
        ok &= check.passed(0.25)
        parts.append(f"({k},{m}) {check.fitted_order:.3f}/{k + 1 - m}")
    assert report(6, "Taylor extension rates", ok, ", ".join(parts))


def test_07_perturbation_smallness(studies, disk_meshes):
    hs = [m.h for m in disk_meshes[3:7]]
    slopes = {k: fit_order(hs, studies["pefem", k].perturbation[1:]) for k in (1, 2, 3)}
    ok = all(s >= 0.8 for s in slopes.values())
    detail = ", ".join(f"k={k} slope {s:.3f}" for k, s in slopes.items())
    assert report(7, "extension/volume ratio decays like h (levels 3-6)", ok, detail + " (>= 0.8)")


def test_08_baseline_separation(studies):
    pe, base = studies["pefem", 3], studies["baseline", 3]
    h = [r.h for r in pe.records]
    eoc_pe = pairwise_rates(h, [r.err_L2 for r in pe.records])[-1]
    eoc_base = pairwise_rates(h, [r.err_L2 for r in base.records])[-1]
    factor = base.records[-1].err_L2 / pe.records[-1].err_L2
    ok = eoc_pe - eoc_base >= 1.0 and factor >= 10.0
    detail = (f"k=3 final-pair L2 EOC {eoc_pe:.3f} vs baseline {eoc_base:.3f}, "
              f"finest error {factor:.0f}x smaller")
    assert report(8, "baseline separation", ok, detail)


def test_09_solver_health(studies):
    """Direct and GMRES agree on every catalog domain, problem and degree
    (disk and ellipse levels 0-3, star levels 0-1); the direct solves of the
    rate studies above all succeeded."""
    sweep = [(Disk(), 8, 4), (Ellipse(), 8, 4), (Star(), 64, 2)]
    failures, worst, count = [], 0.0, 0
    for domain, n0, levels in sweep:
        for mesh in mesh_sequence(domain, n0, levels):
            for k in (1, 2, 3):
                for name in ("constant", "poly_k", "exp_sin", "trig"):
                    system = assemble_system(FeSpace(mesh, k), domain, make_problem(name, k))
                    try:
                        u1, _ = solve(system, method="direct")
                        u2, _ = solve(system, method="iterative")
                    except Exception as exc:  # noqa: BLE001 - every failure is counted
                        failures.append(f"{domain.name} L{mesh.level} k={k} {name}: {exc}")
                        continue
                    worst = max(worst, float(np.max(np.abs(u1 - u2))))
                    count += 1
    ok = not failures and worst <= 1e-8 and len(studies) == 6
    detail = f"{count} systems, 0 failures" if not failures else f"{len(failures)} failures"
    assert report(9, "solver health", ok, f"{detail}, max |direct - GMRES| {worst:.1e}"), failures


def test_10_determinism(tmp_path):
    """Same config, output directory included, run twice; snapshot after each."""
    out = tmp_path / "run"
    outputs = []
    for _ in range(2):
        code = cli.main(["convergence", "--levels", "5", "--degree", "2", "--method", "both",
                         "--out", str(out)])
        payload = json.loads((out / "convergence.json").read_text())
        payload.pop("timing")
        csvs = [(out / f"convergence_{m}.csv").read_bytes() for m in ("pefem", "baseline")]
        outputs.append((code, payload, csvs))
    ok = outputs[0] == outputs[1]
    assert report(10, "determinism", ok, "two CLI runs identical apart from timing" if ok
                  else "outputs differ")
