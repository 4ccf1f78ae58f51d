import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pefem.errors import InsufficientResolution
from pefem.taylor import (
    FIELD_CATALOG,
    SmoothField,
    fit_order,
    lemma1_stability,
    lemma2_rate_check,
    lemma3_inverse_scaling,
    make_field,
    taylor_band,
    taylor_eval,
)

EXP_SIN = SmoothField("exp(x)*sin(y)")


@pytest.mark.parametrize("name", sorted(FIELD_CATALOG))
def test_derivatives_match_finite_differences(name, rng):
    v = make_field(name)
    x = rng.uniform(-1, 1, 100)
    y = rng.uniform(-1, 1, 100)
    h = 1e-6
    for i, j in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)]:
        d = v.derivative(i, j)
        fdx = (v.derivative(i, j)(x + h, y) - v.derivative(i, j)(x - h, y)) / (2 * h)
        exact = v.derivative(i + 1, j)(x, y)
        scale = np.maximum(np.abs(exact), 1.0)
        assert np.max(np.abs(fdx - exact) / scale) < 1e-6
        assert np.shape(d(x, y)) == x.shape


def test_taylor_eval_examples():
    sq = SmoothField("x**2")
    c, t = np.array([0.3, -0.2]), np.array([1.1, 0.7])
    assert taylor_eval(sq, c, t, 2) == pytest.approx(1.1**2, abs=1e-15)
    e = SmoothField("exp(x)")
    delta = 1e-3
    val = taylor_eval(e, [0.0, 0.0], [delta, 0.0], 1)
    assert val == pytest.approx(1 + delta, abs=1e-15)
    assert np.exp(delta) - val == pytest.approx(delta**2 / 2, rel=1e-3)
    assert taylor_eval(EXP_SIN, c, t, 0) == pytest.approx(EXP_SIN(*c), abs=1e-15)


def test_taylor_band_examples():
    assert taylor_band(EXP_SIN, [0.4, 0.1], [0.4, 0.1], 1, 3) == 0.0
    v = SmoothField("x + x**2")
    d = 0.37
    assert taylor_band(v, [0.0, 0.0], [d, 0.0], 2, 2) == pytest.approx(d**2, abs=1e-15)
    e = SmoothField("exp(x)")
    assert taylor_band(e, [0.0, 0.0], [d, 0.0], 1, 3) == pytest.approx(
        d + d**2 / 2 + d**3 / 6, abs=1e-15
    )


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=2, max_size=2),
    st.lists(st.floats(-1, 1), min_size=2, max_size=2),
    st.integers(1, 4),
)
def test_eval_splits_into_value_and_band(center, target, k):
    lhs = taylor_eval(EXP_SIN, center, target, k)
    rhs = EXP_SIN(*center) + taylor_band(EXP_SIN, center, target, 1, k)
    assert lhs == pytest.approx(rhs, abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=2, max_size=2),
    st.lists(st.floats(-1, 1), min_size=2, max_size=2),
)
def test_polynomial_taylor_exactness(center, target):
    cubic = make_field("cubic")
    assert taylor_eval(cubic, center, target, 3) == pytest.approx(cubic(*target), abs=1e-12)


def test_fit_order_power_law():
    h = np.array([0.4, 0.2, 0.1, 0.05, 0.025])
    assert fit_order(h, 7 * h**3) == pytest.approx(3.0, abs=1e-12)


@pytest.mark.parametrize("k, m", [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1)])
def test_lemma2_rates_on_disk(k, m, disk, disk_meshes):
    check = lemma2_rate_check(EXP_SIN, disk, disk_meshes, k, m)
    assert check.status == "ok"
    assert check.fitted_order == pytest.approx(k + 1 - m, abs=0.25)
    assert check.passed()
    # discrepancies decrease with the gap
    disc = [r["discrepancy"] for r in check.rows if r["usable"]]
    assert all(b < a for a, b in zip(disc[:-1], disc[1:]))


def test_lemma2_polynomial_flagged_exact(disk, disk_meshes):
    check = lemma2_rate_check(make_field("quadratic"), disk, disk_meshes[:4], 2, 0)
    assert check.status == "exact"
    assert max(r["discrepancy"] for r in check.rows) <= 1e-12


def test_lemma2_insufficient_resolution(disk, disk_meshes):
    # a cubic field at k=2 has a tiny remainder that the floor swallows early
    weak = SmoothField("1e-9*x**3")
    with pytest.raises(InsufficientResolution):
        lemma2_rate_check(weak, disk, disk_meshes[:5], 2, 0)


def test_lemma2_needs_four_meshes(disk, disk_meshes):
    with pytest.raises(ValueError):
        lemma2_rate_check(EXP_SIN, disk, disk_meshes[:3], 1, 0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_lemma1_stability_constant_uniform(k, disk, disk_meshes):
    """The excess over sup|v| stays below C * delta_h with one C for all
    levels (the excess itself need not shrink monotonically)."""
    rows = lemma1_stability(EXP_SIN, disk, disk_meshes[:6], k)
    consts = [r["constant"] for r in rows]
    assert max(consts) < 5.0
    assert all(r["ratio"] <= 1 + 5.0 * r["delta_h"] for r in rows)
    assert rows[-1]["excess"] <= rows[0]["excess"] + 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_lemma3_inverse_scaling(k, disk, disk_meshes):
    """The constant in ``band <= C (delta_h / h) sup|v_h|`` stays bounded.

    For a smooth interpolant the band is ``grad P . (eta - xi) ~ delta_h``,
    so the constant even shrinks like ``h``; the bound itself decays like h.
    """
    rows = lemma3_inverse_scaling(EXP_SIN, disk, disk_meshes[1:6], k)
    consts = np.array([r["constant"] for r in rows])
    assert np.all(np.diff(consts) <= 1e-12)
    assert consts.max() < 1.0
    hs = [r["h"] for r in rows]
    bands = [r["band"] for r in rows]
    assert fit_order(hs, bands) >= 1.0 - 0.25
