"""Planar domains, boundary distances and the noisy distance oracle.

Points are Python/numpy complex numbers throughout.  Every distance routine
accepts a scalar or an array of points and returns the matching shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

ArrayLike = Union[complex, np.ndarray]

INNER_CLASS_RADIUS = 0.6
OUTER_CLASS_RADIUS = 0.8
BOUNDARY_EPS = 1e-14
_NOISE_SEED = np.uint64(0x9E3779B97F4A7C15)


class DomainError(ValueError):
    """Raised for queries outside the domain of an operation."""


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disc radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", complex(self.center))

    def contains(self, z: ArrayLike) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius

    def scaled(self, factor: float) -> "Disc":
        return Disc(self.center, self.radius * factor)


@dataclass(frozen=True)
class Polygon:
    """Simple polygon; vertices are stored counterclockwise."""

    vertices: tuple

    def __post_init__(self):
        v = tuple(complex(p) for p in self.vertices)
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        if _signed_area(np.array(v)) < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", v)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=complex)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        a = self.array
        return a, np.roll(a, -1)

    def perimeter(self) -> float:
        a, b = self.edges()
        return float(np.sum(np.abs(b - a)))


@dataclass(frozen=True)
class DomainSpec:
    """A Jordan domain (polygon or disc) plus the noise level of its oracle."""

    shape: Union[Polygon, Disc]
    oracle_noise: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.oracle_noise < 0.25:
            raise ValueError("oracle_noise must lie in [0, 1/4)")

    @classmethod
    def polygon(cls, vertices, oracle_noise: float = 0.0) -> "DomainSpec":
        return cls(Polygon(tuple(complex(*p) if isinstance(p, (tuple, list)) else complex(p)
                                 for p in vertices)), oracle_noise)

    @classmethod
    def disc(cls, center=0j, radius: float = 0.6, oracle_noise: float = 0.0) -> "DomainSpec":
        return cls(Disc(complex(center), radius), oracle_noise)

    @property
    def is_polygon(self) -> bool:
        return isinstance(self.shape, Polygon)


def square(half_side: float = 0.55, oracle_noise: float = 0.0) -> DomainSpec:
    s = half_side
    return DomainSpec.polygon([s - s * 1j, s + s * 1j, -s + s * 1j, -s - s * 1j], oracle_noise)


@dataclass(frozen=True)
class PuncturedDomain:
    """``base`` with the closed disc of radius ``inner_radius`` about ``z0`` removed."""

    base: DomainSpec
    z0: complex
    n: int
    inner_radius: float = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "z0", complex(self.z0))
        if self.inner_radius is None:
            object.__setattr__(self, "inner_radius", math.exp(-2 * self.n))
        if not distance_to_boundary(self.base, self.z0) > 2.0 ** -self.n:
            raise DomainError(f"z0={self.z0} must be farther than 2^-{self.n} from the boundary")
        if not self.inner_radius < 0.5 * 2.0 ** -self.n:
            raise DomainError("inner radius must be below 2^-n / 2")

    @property
    def annulus_outer(self) -> float:
        """Outer radius of the puncture annulus node."""
        return 0.5 * 2.0 ** -self.n

    def distance(self, z: ArrayLike) -> np.ndarray:
        z = np.asarray(z)
        dg = distance_to_boundary(self.base, z)
        dp = np.maximum(np.abs(z - self.z0) - self.inner_radius, 0.0)
        return np.minimum(dg, dp)

    def oracle(self, z: ArrayLike) -> np.ndarray:
        z = np.asarray(z)
        d = self.distance(z)
        if np.any(d <= BOUNDARY_EPS):
            raise DomainError("oracle queried outside the punctured domain")
        return d * (1.0 + _noise(z, self.base.oracle_noise))

    def contains(self, z: ArrayLike) -> np.ndarray:
        z = np.asarray(z)
        return contains(self.base, z) & (np.abs(z - self.z0) > self.inner_radius)

    def step_radius(self, z: ArrayLike) -> np.ndarray:
        return 0.5 * self.oracle(z)

    def node_radius(self, z: ArrayLike) -> np.ndarray:
        return 0.25 * self.oracle(z)


# -- polygon primitives -------------------------------------------------------

def _signed_area(v: np.ndarray) -> float:
    w = np.roll(v, -1)
    return 0.5 * float(np.sum(v.real * w.imag - w.real * v.imag))


def _segment_projection(z: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Nearest points on segments a->b for every (point, segment) pair."""
    d = b - a
    zz = z[..., None]
    t = ((zz - a) * np.conj(d)).real / (np.abs(d) ** 2)
    t = np.clip(t, 0.0, 1.0)
    return a + t * d, t


def _polygon_contains(poly: Polygon, z: np.ndarray) -> np.ndarray:
    a, b = poly.edges()
    x, y = z.real[..., None], z.imag[..., None]
    ay, by = a.imag, b.imag
    crosses = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a.real + (y - ay) * (b.real - a.real) / (by - ay)
    inside = np.count_nonzero(crosses & (x < xint), axis=-1) % 2 == 1
    return inside


def _polygon_distance(poly: Polygon, z: np.ndarray) -> np.ndarray:
    a, b = poly.edges()
    p, _ = _segment_projection(z, a, b)
    return np.min(np.abs(z[..., None] - p), axis=-1)


def polygon_self_intersects(poly: Polygon) -> bool:
    a, b = poly.edges()
    k = len(a)

    def orient(p, q, r):
        return np.sign(((q - p) * np.conj(r - p)).imag)

    for i in range(k):
        for j in range(i + 1, k):
            if j == i + 1 or (i == 0 and j == k - 1):
                continue
            o1 = orient(a[i], b[i], a[j])
            o2 = orient(a[i], b[i], b[j])
            o3 = orient(a[j], b[j], a[i])
            o4 = orient(a[j], b[j], b[i])
            if o1 != o2 and o3 != o4:
                return True
    return False


# -- public queries -----------------------------------------------------------

def contains(domain: DomainSpec, z: ArrayLike) -> np.ndarray:
    """True iff ``z`` lies in the open domain (points within 1e-14 of the boundary excluded)."""
    z = np.asarray(z, dtype=complex)
    shape = domain.shape
    if isinstance(shape, Disc):
        inside = np.abs(z - shape.center) < shape.radius
    else:
        inside = _polygon_contains(shape, z)
    return inside & (_raw_distance(domain, z) > BOUNDARY_EPS)


def _raw_distance(domain: DomainSpec, z: np.ndarray) -> np.ndarray:
    shape = domain.shape
    if isinstance(shape, Disc):
        return np.abs(np.abs(z - shape.center) - shape.radius)
    return _polygon_distance(shape, z)


def distance_to_boundary(domain: DomainSpec, z: ArrayLike) -> np.ndarray:
    """Euclidean distance to the boundary; zero outside the closure."""
    z = np.asarray(z, dtype=complex)
    shape = domain.shape
    if isinstance(shape, Disc):
        inside = np.abs(z - shape.center) <= shape.radius
    else:
        inside = _polygon_contains(shape, z)
    return np.where(inside, _raw_distance(domain, z), 0.0)


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _noise(z: np.ndarray, level: float) -> np.ndarray:
    """Deterministic perturbation in [-level, level] keyed on rounded coordinates."""
    if level == 0.0:
        return np.zeros(np.shape(z))
    scale = 2.0 ** 40
    xi = np.round(np.asarray(z).real * scale).astype(np.int64).view(np.uint64)
    yi = np.round(np.asarray(z).imag * scale).astype(np.int64).view(np.uint64)
    with np.errstate(over="ignore"):
        h = _mix64(_mix64(xi ^ _NOISE_SEED) ^ yi)
    u = (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return level * (2.0 * u - 1.0)


def oracle_F(domain: DomainSpec, z: ArrayLike) -> np.ndarray:
    """Distance oracle with (3/4) d < F < (5/4) d.

    Raises
    ------
    DomainError
        If any query point is not inside the domain.
    """
    z = np.asarray(z, dtype=complex)
    if not np.all(contains(domain, z)):
        raise DomainError("oracle_F queried outside the domain")
    return distance_to_boundary(domain, z) * (1.0 + _noise(z, domain.oracle_noise))


def step_radius(domain: DomainSpec, z: ArrayLike) -> np.ndarray:
    return 0.5 * oracle_F(domain, z)


def node_radius(domain: DomainSpec, z: ArrayLike) -> np.ndarray:
    return 0.25 * oracle_F(domain, z)


def nearest_boundary_point(domain: DomainSpec, z: ArrayLike) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    shape = domain.shape
    if isinstance(shape, Disc):
        rel = z - shape.center
        mod = np.abs(rel)
        direction = np.where(mod > 0, rel / np.where(mod > 0, mod, 1.0), 1.0)
        return shape.center + shape.radius * direction
    a, b = shape.edges()
    p, _ = _segment_projection(z, a, b)
    idx = np.argmin(np.abs(z[..., None] - p), axis=-1)
    return np.take_along_axis(p, idx[..., None], axis=-1)[..., 0]


def boundary_length(domain: DomainSpec) -> float:
    shape = domain.shape
    if isinstance(shape, Disc):
        return 2 * math.pi * shape.radius
    return shape.perimeter()


def boundary_point(domain: DomainSpec, s: ArrayLike) -> np.ndarray:
    """Boundary point at arclength ``s`` (mod the perimeter), counterclockwise.

    Polygons start at the first vertex; discs start at angle 0.
    """
    s = np.mod(np.asarray(s, dtype=float), boundary_length(domain))
    shape = domain.shape
    if isinstance(shape, Disc):
        return shape.center + shape.radius * np.exp(1j * s / shape.radius)
    a, b = shape.edges()
    lengths = np.abs(b - a)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(a) - 1)
    t = (s - cum[k]) / lengths[k]
    return a[k] + t * (b[k] - a[k])


def boundary_arclength(domain: DomainSpec, p: ArrayLike) -> np.ndarray:
    """Arclength coordinate in [0, L) of boundary points ``p``."""
    p = np.asarray(p, dtype=complex)
    shape = domain.shape
    if isinstance(shape, Disc):
        return np.mod(np.angle(p - shape.center), 2 * math.pi) * shape.radius
    a, b = shape.edges()
    lengths = np.abs(b - a)
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    proj, t = _segment_projection(p, a, b)
    k = np.argmin(np.abs(p[..., None] - proj), axis=-1)
    tk = np.take_along_axis(t, k[..., None], axis=-1)[..., 0]
    return np.mod(cum[k] + tk * lengths[k], cum[-1])


def sample_boundary(domain: DomainSpec, count: int) -> np.ndarray:
    L = boundary_length(domain)
    return boundary_point(domain, np.arange(count) * (L / count))


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"violation: {v}" for v in self.violations)


def validate_domain(domain: DomainSpec, samples: int = 4096) -> ValidationReport:
    """Check membership in the class D_{3/5} <= G <= D_{4/5} and polygon simplicity.

    Never raises; problems are collected in the returned report.
    """
    report = ValidationReport()
    shape = domain.shape
    lo, hi = INNER_CLASS_RADIUS, OUTER_CLASS_RADIUS
    tol = 1e-12
    if isinstance(shape, Polygon):
        if polygon_self_intersects(shape):
            report.violations.append("polygon is self-intersecting")
        mods = np.abs(shape.array)
        for i, m in enumerate(mods):
            if m > hi + tol:
                report.violations.append(f"vertex {i} has modulus {m:.6g} > 4/5 (circumradius)")
        if not _polygon_contains(shape, np.array([0j]))[0]:
            report.violations.append("origin is not inside the polygon")
        else:
            inr = float(_polygon_distance(shape, np.array([0j]))[0])
            if inr < lo - tol:
                report.violations.append(f"inradius {inr:.6g} < 3/5")
    pts = sample_boundary(domain, samples)
    mods = np.abs(pts)
    if mods.min() < lo - tol and not any("inradius" in v for v in report.violations):
        report.violations.append(f"boundary comes within {mods.min():.6g} of 0 (inradius < 3/5)")
    if mods.max() > hi + tol:
        if not any("circumradius" in v for v in report.violations):
            report.violations.append(f"boundary reaches modulus {mods.max():.6g} > 4/5 (circumradius)")
    if isinstance(shape, Disc):
        # exact checks for discs
        c, r = abs(shape.center), shape.radius
        if r - c < lo - tol and not any("inradius" in v for v in report.violations):
            report.violations.append(f"inradius {r - c:.6g} < 3/5")
        if r + c > hi + tol and not any("circumradius" in v for v in report.violations):
            report.violations.append(f"circumradius {r + c:.6g} > 4/5")
    return report
