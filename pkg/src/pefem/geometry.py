"""Exact smooth domains, closest-point projection and chord gaps.

Every catalog domain is star-shaped about the origin and its boundary is a
closed, counterclockwise, regular parametric curve ``gamma(t)`` with
``t`` in ``[0, 1)``.  The outward normal is the clockwise rotation of the
unit tangent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import AmbiguousProjection, ProjectionNotConverged

TWO_PI = 2.0 * math.pi

SWEEP_POINTS = 256
NEWTON_MAXITER = 50
NEWTON_TOL = 1e-12


class CurvedDomain:
    """Smooth simply connected domain bounded by a closed parametric curve.

    Subclasses implement :meth:`_angle_curve`, returning the curve and its
    first two derivatives with respect to the angle ``theta = 2*pi*t``.
    """

    name = "curved"
    center = np.zeros(2)

    def params(self) -> tuple[float, ...]:
        return ()

    def _angle_curve(self, theta):
        raise NotImplementedError

    def inside(self, x) -> np.ndarray:
        raise NotImplementedError

    # -- parametrization ------------------------------------------------
    def point(self, t) -> np.ndarray:
        g, _, _ = self._angle_curve(TWO_PI * np.asarray(t, dtype=float))
        return g

    def d1(self, t) -> np.ndarray:
        _, g1, _ = self._angle_curve(TWO_PI * np.asarray(t, dtype=float))
        return TWO_PI * g1

    def d2(self, t) -> np.ndarray:
        _, _, g2 = self._angle_curve(TWO_PI * np.asarray(t, dtype=float))
        return TWO_PI**2 * g2

    def normal(self, t) -> np.ndarray:
        """Outward unit normal at parameter(s) ``t``."""
        tau = self.d1(t)
        nrm = np.stack([tau[..., 1], -tau[..., 0]], axis=-1)
        return nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)

    def project(self, x):
        """Vectorized closest-point map, returns ``(t, eta)``."""
        return project_points(self, x)

    # -- derived geometric quantities ------------------------------------
    @cached_property
    def _arclength_table(self):
        panels = 2048
        gx, gw = np.polynomial.legendre.leggauss(8)
        edges = np.linspace(0.0, 1.0, panels + 1)
        half = 0.5 / panels
        tq = (edges[:-1, None] + half) + half * gx[None, :]
        speed = np.linalg.norm(self.d1(tq), axis=-1)
        seg = half * speed @ gw
        return edges, np.concatenate([[0.0], np.cumsum(seg)])

    def arclength(self, t) -> np.ndarray:
        """Arclength of the curve from parameter 0 to ``t`` in ``[0, 1]``."""
        t = np.asarray(t, dtype=float)
        edges, cum = self._arclength_table
        panels = len(edges) - 1
        idx = np.clip(np.floor(t * panels).astype(int), 0, panels - 1)
        t0 = edges[idx]
        gx, gw = np.polynomial.legendre.leggauss(8)
        half = 0.5 * (t - t0)
        tq = (t0 + half)[..., None] + half[..., None] * gx
        speed = np.linalg.norm(self.d1(tq), axis=-1)
        return cum[idx] + half * (speed @ gw)

    @cached_property
    def perimeter(self) -> float:
        return float(self._arclength_table[1][-1])

    @cached_property
    def area(self) -> float:
        gx, gw = np.polynomial.legendre.leggauss(8)
        panels = 2048
        edges = np.linspace(0.0, 1.0, panels + 1)
        half = 0.5 / panels
        tq = ((edges[:-1, None] + half) + half * gx[None, :]).ravel()
        g = self.point(tq)
        dg = self.d1(tq)
        integrand = (g[:, 0] * dg[:, 1] - g[:, 1] * dg[:, 0]).reshape(panels, -1)
        return float(0.5 * half * np.sum(integrand @ gw))

    @cached_property
    def inradius(self) -> float:
        """Distance from ``center`` to the nearest boundary point."""
        t = np.arange(1 << 15) / (1 << 15)
        return float(np.min(np.linalg.norm(self.point(t) - self.center, axis=-1)))

    def arclength_parameters(self, n: int) -> np.ndarray:
        """Parameters of ``n`` boundary points equispaced in arclength."""
        target = self.perimeter * np.arange(n) / n
        edges, cum = self._arclength_table
        t = np.interp(target, cum, edges)
        for _ in range(8):
            speed = np.linalg.norm(self.d1(t), axis=-1)
            t = t - (self.arclength(t) - target) / speed
        return t

    def __repr__(self):
        args = ", ".join(f"{p:g}" for p in self.params())
        return f"{type(self).__name__}({args})"


class Disk(CurvedDomain):
    name = "disk"

    def __init__(self, radius: float = 1.0):
        self.radius = float(radius)

    def params(self):
        return (self.radius,)

    def _angle_curve(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        r = self.radius
        g = np.stack([r * c, r * s], axis=-1)
        return g, np.stack([-r * s, r * c], axis=-1), -g

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 0], x[..., 1]) < self.radius

    def arclength_parameters(self, n):
        return np.arange(n) / n


class Ellipse(CurvedDomain):
    name = "ellipse"

    def __init__(self, a: float = 1.5, b: float = 1.0):
        self.a, self.b = float(a), float(b)

    def params(self):
        return (self.a, self.b)

    def _angle_curve(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        a, b = self.a, self.b
        return (
            np.stack([a * c, b * s], axis=-1),
            np.stack([-a * s, b * c], axis=-1),
            np.stack([-a * c, -b * s], axis=-1),
        )

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] / self.a) ** 2 + (x[..., 1] / self.b) ** 2 < 1.0


class Star(CurvedDomain):
    """Smooth star ``r(theta) = base + amplitude*cos(lobes*theta)``."""

    name = "star"

    def __init__(self, base: float = 1.0, amplitude: float = 0.2, lobes: int = 5):
        self.base, self.amplitude, self.lobes = float(base), float(amplitude), int(lobes)

    def params(self):
        return (self.base, self.amplitude, float(self.lobes))

    def _radius(self, theta):
        m, eps = self.lobes, self.amplitude
        return (
            self.base + eps * np.cos(m * theta),
            -eps * m * np.sin(m * theta),
            -eps * m * m * np.cos(m * theta),
        )

    def _angle_curve(self, theta):
        r, r1, r2 = self._radius(theta)
        c, s = np.cos(theta), np.sin(theta)
        g = np.stack([r * c, r * s], axis=-1)
        g1 = np.stack([r1 * c - r * s, r1 * s + r * c], axis=-1)
        g2 = np.stack(
            [r2 * c - 2 * r1 * s - r * c, r2 * s + 2 * r1 * c - r * s], axis=-1
        )
        return g, g1, g2

    def inside(self, x):
        x = np.asarray(x, dtype=float)
        theta = np.arctan2(x[..., 1], x[..., 0])
        return np.hypot(x[..., 0], x[..., 1]) < self._radius(theta)[0]


CATALOG = {"disk": Disk, "ellipse": Ellipse, "star": Star}


def make_domain(name: str, params=()) -> CurvedDomain:
    """Build a catalog domain from its name and (optional) parameters."""
    try:
        cls = CATALOG[name]
    except KeyError:
        raise ValueError(
            f"unknown domain {name!r}; choose from {sorted(CATALOG)}"
        ) from None
    return cls(*params)


@dataclass(frozen=True)
class BoundaryTrace:
    """Closest-point data for a single point ``xi`` near the boundary."""

    xi: np.ndarray
    eta: np.ndarray
    t: float
    normal: np.ndarray
    facet_normal: np.ndarray | None = None

    @property
    def offset(self) -> np.ndarray:
        return self.eta - self.xi

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.offset))


def _periodic_gap(t1, t2):
    d = np.abs(t1 - t2) % 1.0
    return np.minimum(d, 1.0 - d)


def _newton(domain, x, t):
    """Newton iteration on ``(gamma(t) - x) . gamma'(t) = 0``; vectorized."""
    step_cap = 2.0 / SWEEP_POINTS
    for _ in range(NEWTON_MAXITER):
        r = domain.point(t) - x
        g1 = domain.d1(t)
        f = np.einsum("...i,...i->...", r, g1)
        if np.all(np.abs(f) <= NEWTON_TOL):
            return t % 1.0, f
        fp = np.einsum("...i,...i->...", g1, g1) + np.einsum(
            "...i,...i->...", r, domain.d2(t)
        )
        step = np.where(fp > 0, f / np.where(fp > 0, fp, 1.0), np.sign(f) * step_cap)
        t = t - np.clip(step, -step_cap, step_cap)
    r = domain.point(t) - x
    f = np.einsum("...i,...i->...", r, domain.d1(t))
    return t % 1.0, f


def project_points(domain: CurvedDomain, x):
    """Closest boundary points for an array of query points.

    Seeds Newton from the two best local minima of a 256-point parameter
    sweep and keeps the closer refined candidate.

    Returns
    -------
    t : (N,) array
        Curve parameters of the projections.
    eta : (N, 2) array
        Projected points on the boundary.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    ts = np.arange(SWEEP_POINTS) / SWEEP_POINTS
    gs = domain.point(ts)
    d2 = np.sum((x[:, None, :] - gs[None, :, :]) ** 2, axis=-1)
    prev, nxt = np.roll(d2, 1, axis=1), np.roll(d2, -1, axis=1)
    is_min = (d2 <= prev) & (d2 < nxt)
    masked = np.where(is_min, d2, np.inf)
    order = np.argsort(masked, axis=1, kind="stable")[:, :2]
    rows = np.arange(n)
    second_ok = np.isfinite(masked[rows, order[:, 1]])

    seeds = ts[order]  # (n, 2)
    t_ref, f = _newton(domain, np.repeat(x[:, None, :], 2, axis=1), seeds)
    bad = np.abs(f) > NEWTON_TOL
    bad[:, 1] &= second_ok
    if np.any(bad):
        raise ProjectionNotConverged(
            f"closest-point Newton failed for {int(bad.any(axis=1).sum())} point(s)"
        )
    dist = np.linalg.norm(domain.point(t_ref) - x[:, None, :], axis=-1)
    dist[:, 1] = np.where(second_ok, dist[:, 1], np.inf)
    best = np.argmin(dist, axis=1)
    ambiguous = (
        second_ok
        & (np.abs(dist[rows, 0] - dist[rows, 1]) < 1e-10)
        & (_periodic_gap(t_ref[:, 0], t_ref[:, 1]) > 0.01)
    )
    if np.any(ambiguous):
        raise AmbiguousProjection(
            f"{int(ambiguous.sum())} point(s) have two equidistant boundary points"
        )
    t = t_ref[rows, best]
    return t, domain.point(t)


def closest_point(domain: CurvedDomain, x, facet_normal=None) -> BoundaryTrace:
    """Project a single point onto the boundary of ``domain``."""
    x = np.asarray(x, dtype=float)
    t, eta = project_points(domain, x[None, :])
    return BoundaryTrace(
        xi=x,
        eta=eta[0],
        t=float(t[0]),
        normal=domain.normal(t[0]),
        facet_normal=None if facet_normal is None else np.asarray(facet_normal, float),
    )


def exact_normal(domain: CurvedDomain, t: float) -> np.ndarray:
    return domain.normal(float(t))


CHORD_SAMPLES = 33


def chord_gaps(domain: CurvedDomain, a, b) -> np.ndarray:
    """Maximal chord-to-curve distance for many chords at once.

    The maximum of ``|eta(xi) - xi|`` over each segment ``[a_i, b_i]`` is
    bracketed on 33 Chebyshev-Lobatto samples and then refined by
    golden-section search.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n = a.shape[0]
    s = 0.5 * (1.0 - np.cos(np.pi * np.arange(CHORD_SAMPLES) / (CHORD_SAMPLES - 1)))

    def gap(sv):
        xi = a + sv[:, None] * (b - a)
        _, eta = domain.project(xi)
        return np.linalg.norm(eta - xi, axis=1)

    samples = np.stack([gap(np.full(n, sj)) for sj in s], axis=1)
    j = np.argmax(samples, axis=1)
    lo = s[np.maximum(j - 1, 0)]
    hi = s[np.minimum(j + 1, CHORD_SAMPLES - 1)]
    best = samples[np.arange(n), j]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = gap(c), gap(d)
    for _ in range(80):
        if np.all(hi - lo < 1e-13):
            break
        left = fc > fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        probe = np.where(left, hi - invphi * (hi - lo), lo + invphi * (hi - lo))
        fp = gap(probe)
        c, d = np.where(left, probe, d), np.where(left, c, probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
    return np.maximum(best, np.maximum(fc, fd))


def chord_gap(domain: CurvedDomain, a, b) -> float:
    """Largest distance from the segment ``[a, b]`` to the boundary curve."""
    return float(chord_gaps(domain, np.asarray(a)[None], np.asarray(b)[None])[0])
