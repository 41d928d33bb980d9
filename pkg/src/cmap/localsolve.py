"""Admissible boundary neighborhoods and their local Dirichlet solvers.

Each neighborhood carries a chart that maps its region D onto the upper unit
half-disc, with the piece of the domain boundary going to the diameter.  The
local solution with zero data on the domain boundary is the Poisson integral
of the oddly reflected arc data.

Charts:
  * polygon vertex of interior angle alpha*pi: rotate, then power 1/alpha
  * polygon edge point: rigid motion and scaling
  * circle point: Moebius map taking the circle to the real axis; D is the
    part of G inside a circle orthogonal to the boundary
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Union

import numpy as np

from . import geometry as geo
from .geometry import Disc, DomainError, DomainSpec, Polygon, PuncturedDomain
from .harmonic import AnnulusPatch, _herglotz_gradient, _unit_kernel, circle_angles

CORE_OVERLAP = 0.9


class ConstructionError(RuntimeError):
    pass


class UnsupportedDataError(ValueError):
    """Only zero Dirichlet data on the domain boundary is supported by local solvers."""


@dataclass(frozen=True)
class WedgeChart:
    vertex: complex
    scale: float
    gamma: float  # direction of the outgoing edge
    alpha: float  # interior angle / pi

    def forward(self, w):
        t = (np.asarray(w, dtype=complex) - self.vertex) * np.exp(-1j * self.gamma) / self.scale
        cut = self.alpha * math.pi / 2 - math.pi
        ang = np.mod(np.angle(t) - cut, 2 * math.pi) + cut
        return np.abs(t) ** (1 / self.alpha) * np.exp(1j * ang / self.alpha)

    def inverse(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        ang = np.angle(zeta)
        return self.vertex + self.scale * np.exp(1j * self.gamma) * np.abs(zeta) ** self.alpha \
            * np.exp(1j * self.alpha * ang)

    def derivative(self, w):
        w = np.asarray(w, dtype=complex)
        return self.forward(w) / (self.alpha * (w - self.vertex))


@dataclass(frozen=True)
class EdgeChart:
    point: complex
    scale: float
    gamma: float

    def forward(self, w):
        return (np.asarray(w, dtype=complex) - self.point) * np.exp(-1j * self.gamma) / self.scale

    def inverse(self, zeta):
        return self.point + self.scale * np.exp(1j * self.gamma) * np.asarray(zeta, dtype=complex)

    def derivative(self, w):
        return np.full(np.shape(w), np.exp(-1j * self.gamma) / self.scale)


@dataclass(frozen=True)
class CircleChart:
    center: complex
    radius: float
    unit_point: complex  # boundary point, normalized to the unit circle
    scale: float  # half-disc radius in the Moebius plane

    def forward(self, w):
        wp = (np.asarray(w, dtype=complex) - self.center) / self.radius
        p = self.unit_point
        return 1j * (p - wp) / (p + wp) / self.scale

    def inverse(self, zeta):
        t = self.scale * np.asarray(zeta, dtype=complex)
        p = self.unit_point
        return self.center + self.radius * p * (1j - t) / (1j + t)

    def derivative(self, w):
        wp = (np.asarray(w, dtype=complex) - self.center) / self.radius
        p = self.unit_point
        return -2j * p / (p + wp) ** 2 / (self.radius * self.scale)


Chart = Union[WedgeChart, EdgeChart, CircleChart]


@dataclass(frozen=True)
class AdmissibleNeighborhood:
    """Boundary point ``z`` with core radius ``r``; the region D is the chart preimage of the half-disc."""

    z: complex
    r: float
    kind: str
    chart: Chart
    domain: DomainSpec = field(repr=False, compare=False, default=None)
    n: int = 0

    @cached_property
    def covering(self) -> tuple:
        """Admissible n-covering of the free arc: end balls of diameter <= 2^{-3n} plus interior balls."""
        return _covering(self.chart, self.domain, self.n)

    @property
    def core(self) -> Disc:
        return Disc(self.z, self.r)

    def in_region(self, w) -> np.ndarray:
        zeta = self.chart.forward(w)
        return (np.abs(zeta) < 1.0) & (zeta.imag > 0.0)

    def arc_points(self, m_half: int) -> np.ndarray:
        """Points of the free arc (boundary of D inside G) at the reflected quadrature angles."""
        return self.chart.inverse(np.exp(1j * circle_angles(2 * m_half, 0.5)[:m_half]))

    def region_bound(self) -> float:
        """Radius about ``z`` of a disc containing D."""
        pts = self.chart.inverse(np.exp(1j * np.linspace(0, math.pi, 257)))
        return float(np.max(np.abs(pts - self.z)))


@dataclass(frozen=True)
class LocalPatch:
    """Local solution on a neighborhood, authoritative on the tripled core intersected with D."""

    nb: AdmissibleNeighborhood
    data: np.ndarray
    owner_factor: float = 3.0

    @property
    def m_half(self) -> int:
        return len(self.data)

    @property
    def bound(self) -> Disc:
        return Disc(self.nb.z, self.owner_factor * self.nb.r)

    def contains(self, w):
        w = np.asarray(w, dtype=complex)
        return (np.abs(w - self.nb.z) < self.owner_factor * self.nb.r) & self.nb.in_region(w)

    def sample_points(self) -> np.ndarray:
        return self.nb.arc_points(self.m_half)

    def _nodes(self):
        return np.exp(1j * circle_angles(2 * self.m_half, 0.5))

    def weights(self, w):
        zeta = np.atleast_1d(self.nb.chart.forward(w)).ravel()
        if np.any(np.abs(zeta) >= 1.0):
            raise DomainError("point outside the local region")
        k = _unit_kernel(zeta, self._nodes())
        h = self.m_half
        wts = (k[:, :h] - k[:, ::-1][:, :h]) / k.sum(axis=1, keepdims=True)
        return wts, np.zeros(len(zeta))

    def evaluate(self, w):
        wts, const = self.weights(w)
        return wts @ self.data + const

    def gradient(self, w):
        w = np.atleast_1d(np.asarray(w, dtype=complex)).ravel()
        zeta = self.nb.chart.forward(w)
        values = np.concatenate([self.data, -self.data[::-1]])
        return _herglotz_gradient(zeta, self._nodes(), values) * self.nb.chart.derivative(w)

    def with_data(self, data):
        return replace(self, data=np.asarray(data, dtype=float))


def _phi_is_zero(phi) -> bool:
    if phi is None:
        return True
    if isinstance(phi, (int, float)):
        return phi == 0
    const = getattr(phi, "constant", None)
    return const is not None and const == 0


def solve_local(nb: AdmissibleNeighborhood, arc_values, z, phi=0.0):
    """Value at ``z`` of the harmonic function on D with ``arc_values`` on the free arc and 0 on the domain boundary.

    ``arc_values`` are the data at ``nb.arc_points(len(arc_values))``.

    Raises
    ------
    UnsupportedDataError
        If ``phi`` is not identically zero.
    DomainError
        If ``z`` is outside D.
    """
    if not _phi_is_zero(phi):
        raise UnsupportedDataError("local solvers support only zero data on the domain boundary")
    z = np.asarray(z, dtype=complex)
    if not np.all(nb.in_region(z)):
        raise DomainError("z is outside the neighborhood region")
    out = LocalPatch(nb, np.asarray(arc_values, dtype=float)).evaluate(z)
    return out.reshape(z.shape) if z.ndim else float(out[0])


@dataclass
class LocalSolution:
    domain: DomainSpec
    n: int
    neighborhoods: list = field(default_factory=list)

    def __len__(self):
        return len(self.neighborhoods)

    def __iter__(self):
        return iter(self.neighborhoods)

    def uncovered_boundary(self, samples: int = 10_000) -> np.ndarray:
        """Boundary samples not inside any core (should be empty)."""
        pts = geo.sample_boundary(self.domain, samples)
        centers = np.array([nb.z for nb in self.neighborhoods])
        radii = np.array([nb.r for nb in self.neighborhoods])
        inside = np.abs(pts[:, None] - centers[None, :]) < radii[None, :]
        return pts[~inside.any(axis=1)]


# -- construction -------------------------------------------------------------

def _end_covering(chart, domain: DomainSpec, n: int, from_end: int) -> list:
    """Covering balls of one half of the free arc, walking in from an end point.

    The arc is sampled on a grid that is geometric towards the end point, so
    balls shrinking like the distance to the boundary are resolved.
    """
    half_d = 2.0 ** (-3 * n - 1)
    speed = abs(complex(chart.inverse(np.exp(1e-6j))) - complex(chart.inverse(1.0))) / 1e-6
    theta = np.concatenate([[0.0], np.geomspace(0.05 * half_d / speed, math.pi / 2, 6000)])
    th = theta if from_end == 0 else math.pi - theta
    arc = chart.inverse(np.exp(1j * th))
    rad = geo.distance_to_boundary(domain, arc) / 8.0
    start = arc[0]
    chord = np.abs(arc - start)
    balls = []
    j = int(np.searchsorted(chord, half_d)) - 1
    balls.append(Disc(complex(arc[j]), 0.999 * half_d))
    covered = int(np.searchsorted(chord, 1.9 * half_d)) - 1
    last = len(arc) - 1
    while covered < last:
        reach = np.abs(arc[covered:] - arc[covered]) < CORE_OVERLAP * rad[covered:]
        j = covered + int(np.flatnonzero(reach)[-1])
        c, r = complex(arc[j]), float(rad[j])
        inside = np.abs(arc[j:] - c) < CORE_OVERLAP * r
        stop = j + int(np.argmin(inside)) - 1 if not inside.all() else last
        if stop <= covered:
            raise ConstructionError("arc covering stalled")
        balls.append(Disc(c, r))
        covered = stop
    return balls


def _covering(chart, domain, n) -> tuple:
    return tuple(_end_covering(chart, domain, n, 0)) + tuple(
        reversed(_end_covering(chart, domain, n, 1)))


def _polygon_neighborhoods(domain: DomainSpec, n: int, vertex_divisor: float,
                           edge_divisor: float) -> list:
    poly: Polygon = domain.shape
    v = poly.array
    k = len(v)
    a, b = poly.edges()
    lengths = np.abs(b - a)
    nbs = []
    vertex_r = np.zeros(k)

    def dist_to_edges(p, skip):
        keep = np.array([j not in skip for j in range(k)])
        proj, _ = geo._segment_projection(np.atleast_1d(p), a[keep], b[keep])
        return np.min(np.abs(np.atleast_1d(p)[:, None] - proj), axis=1)

    for i in range(k):
        prev_len, next_len = lengths[i - 1], lengths[i]
        r = min(prev_len, next_len) / vertex_divisor
        far = dist_to_edges(v[i], {i - 1 if i > 0 else k - 1, i})
        if far.size and 5 * r >= CORE_OVERLAP * far[0]:
            r = CORE_OVERLAP * far[0] / 5
        gamma = float(np.angle(v[(i + 1) % k] - v[i]))
        back = float(np.angle(v[i - 1] - v[i]))
        alpha = float(np.mod(back - gamma, 2 * math.pi)) / math.pi
        if not 0 < alpha < 2:
            raise ConstructionError(f"degenerate angle at vertex {i}")
        vertex_r[i] = r
        nbs.append(AdmissibleNeighborhood(complex(v[i]), float(r), "vertex",
                                          WedgeChart(complex(v[i]), 5 * r, gamma, alpha),
                                          domain, n))

    for i in range(k):
        p0, p1 = v[i], v[(i + 1) % k]
        L = lengths[i]
        gamma = float(np.angle(p1 - p0))
        r_cap = L / vertex_divisor

        def rad(s):
            p = p0 + (p1 - p0) * (s / L)
            return min(float(dist_to_edges(p, {i})[0]) / edge_divisor, r_cap)

        covered = CORE_OVERLAP * vertex_r[i]
        target = L - CORE_OVERLAP * vertex_r[(i + 1) % k]
        guard = 0
        while covered < target:
            guard += 1
            if guard > 10_000:
                raise ConstructionError("edge covering did not terminate")
            lo, hi = covered, min(L, covered + 3 * r_cap)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if mid - CORE_OVERLAP * rad(mid) <= covered:
                    lo = mid
                else:
                    hi = mid
            s = lo
            r = rad(s)
            if r <= 0 or s + CORE_OVERLAP * r <= covered:
                raise ConstructionError("edge covering stalled; reduce the radius scale")
            p = complex(p0 + (p1 - p0) * (s / L))
            nbs.append(AdmissibleNeighborhood(p, r, "edge", EdgeChart(p, 5 * r, gamma), domain, n))
            covered = s + CORE_OVERLAP * r
    return nbs


def _disc_neighborhoods(domain: DomainSpec, n: int, divisor: float) -> list:
    shape: Disc = domain.shape
    rho = shape.radius
    r = rho / divisor
    half_angle = 2 * math.asin(r / (2 * rho))
    count = int(math.ceil(2 * math.pi / (2 * CORE_OVERLAP * half_angle)))
    a = 5 * r / rho
    scale = a / (2 - a)
    nbs = []
    for j in range(count):
        u = complex(np.exp(2j * math.pi * j / count))
        p = shape.center + rho * u
        nbs.append(AdmissibleNeighborhood(p, r, "arc", CircleChart(shape.center, rho, u, scale),
                                          domain, n))
    return nbs


def build_neighborhoods(domain: DomainSpec, n: int, vertex_divisor: float = 20.0,
                        edge_divisor: float = 6.0, disc_divisor: float = 15.0) -> LocalSolution:
    """Admissible neighborhoods whose cores cover the boundary.

    Polygons get one wedge per vertex (radius = shortest adjacent edge /
    ``vertex_divisor``) and edge neighborhoods whose radius is the distance
    to the rest of the boundary over ``edge_divisor``.  Discs get equal arcs.
    """
    if domain.is_polygon:
        nbs = _polygon_neighborhoods(domain, n, vertex_divisor, edge_divisor)
    else:
        nbs = _disc_neighborhoods(domain, n, disc_divisor)
    sol = LocalSolution(domain, n, nbs)
    if len(sol.uncovered_boundary(4096)):
        raise ConstructionError("cores do not cover the boundary")
    return sol


def verify_neighborhood(nb: AdmissibleNeighborhood, domain: DomainSpec, n: int,
                        samples: int = 2000) -> list:
    """Check the admissibility conditions; returns a list of violations."""
    problems = []
    # D contains D_{5r}(z) n G: sample that set and test region membership
    rng = np.random.default_rng(0)
    pts = nb.z + 5 * nb.r * np.sqrt(rng.random(samples)) * np.exp(2j * math.pi * rng.random(samples))
    pts = pts[geo.contains(domain, pts) & (np.abs(pts - nb.z) < 5 * nb.r * (1 - 1e-9))]
    if not np.all(nb.in_region(pts)):
        problems.append("D does not contain D_5r(z) n G")
    # region inside G
    zeta = 0.999 * np.sqrt(rng.random(samples)) * np.exp(1j * math.pi * rng.random(samples))
    zeta = zeta[zeta.imag > 1e-6]
    inside = geo.contains(domain, nb.chart.inverse(zeta))
    if not np.all(inside):
        problems.append("region leaves the domain")
    cov = nb.covering
    if cov:
        if cov[0].radius * 2 > 2.0 ** (-3 * n) or cov[-1].radius * 2 > 2.0 ** (-3 * n):
            problems.append("end balls too large")
        for ball in cov[1:-1]:
            if geo.distance_to_boundary(domain, ball.center) <= 2 * ball.radius:
                problems.append(f"covering ball at {ball.center} has 2B outside G")
                break
        arc = nb.chart.inverse(np.exp(1j * np.linspace(0, math.pi, 4001)))
        centers = np.array([b.center for b in cov])
        radii = np.array([b.radius for b in cov])
        hit = (np.abs(arc[:, None] - centers[None, :]) < radii[None, :]).any(axis=1)
        # the arc end points themselves lie on the domain boundary
        if not np.all(hit[1:-1]):
            problems.append("covering does not cover the free arc")
    return problems


def annulus_neighborhood(pdomain: PuncturedDomain, m: int = 64) -> AnnulusPatch:
    """Puncture node: annulus e^{-2n} < |w - z0| < 2^{-n}/2 with inner data 1 and outer data 0."""
    if not geo.distance_to_boundary(pdomain.base, pdomain.z0) > 2.0 ** -pdomain.n:
        raise DomainError("z0 too close to the boundary")
    outer = pdomain.annulus_outer
    return AnnulusPatch(pdomain.z0, pdomain.inner_radius, outer, 0.5 * outer, np.zeros(m))
