"""Walk-on-spheres Monte Carlo for the Dirichlet problem.

Each walk jumps to a uniform point on the circle of radius R(x) = F(x)/2 and
is absorbed at the nearest boundary point once its distance to the boundary
drops below ``absorption_threshold``.  Walks still alive after ``max_steps``
score zero.

Randomness is counter-based: the angle used by sample ``i`` at step ``t`` is
a hash of ``(seed, i, t)``, so results do not depend on batching or order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry as geo
from .geometry import DomainError, DomainSpec, PuncturedDomain

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STEP_KEY = np.uint64(0xD1B54A32D192ED03)


def _mix64(x):
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def uniform(seed: int, sample, step) -> np.ndarray:
    """Counter-based uniform variates in [0, 1) keyed by (seed, sample index, step index)."""
    with np.errstate(over="ignore"):
        s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        i = np.asarray(sample, dtype=np.uint64)
        t = np.asarray(step, dtype=np.uint64)
        key = _mix64(s ^ _mix64(i * _GOLDEN + _GOLDEN))
        h = _mix64(key + (t + np.uint64(1)) * _STEP_KEY)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass
class WalkConfig:
    n: int
    absorption_threshold: Optional[float] = None
    max_steps: Optional[int] = None
    k2: float = 20.0
    seed: int = 0
    samples: int = 10_000

    def __post_init__(self):
        if self.absorption_threshold is None:
            self.absorption_threshold = 2.0 ** (-3 * self.n)
        if self.max_steps is None:
            self.max_steps = int(math.ceil(self.k2 * self.n ** 3))
        if not self.absorption_threshold > 0:
            raise ValueError("absorption_threshold must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class WalkOutcome:
    terminal: complex
    absorbed: bool
    steps_taken: int
    path: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class Estimate:
    mean: float
    std_error: float
    samples: int
    absorbed_fraction: float

    def csv_row(self, z: complex) -> str:
        return ",".join(f"{v:.17g}" for v in (z.real, z.imag, self.mean, self.std_error,
                                              self.absorbed_fraction))


CSV_HEADER = "z_re,z_im,mean,std_error,absorbed_fraction"


@dataclass(frozen=True)
class BoundaryData:
    """Boundary values as a vectorized function of boundary points.

    ``constant`` is set for constant data; local solvers use it to recognise
    the zero case.
    """

    fn: Callable
    name: str = "custom"
    constant: Optional[float] = None
    holder_k1: Optional[float] = None

    def __call__(self, p):
        return np.asarray(self.fn(np.asarray(p, dtype=complex)), dtype=float)

    @classmethod
    def const(cls, value: float) -> "BoundaryData":
        return cls(lambda p, v=float(value): np.full(np.shape(p), v), f"const:{value}", float(value))

    def holder_ok(self, points: np.ndarray) -> bool:
        """Check |phi(x) - phi(y)| <= k1 |x - y|^(2/3) over all sample pairs."""
        if self.holder_k1 is None:
            return True
        v = self(points)
        dv = np.abs(v[:, None] - v[None, :])
        dx = np.abs(points[:, None] - points[None, :]) ** (2 / 3)
        return bool(np.all(dv <= self.holder_k1 * dx + 1e-15))


def upper_half(center: complex = 0j) -> BoundaryData:
    return BoundaryData(lambda p: (np.asarray(p).imag > center.imag).astype(float), "upper-half")


def cos_data(center: complex = 0j) -> BoundaryData:
    """(1 + cos theta)/2 with theta the polar angle about ``center``."""
    return BoundaryData(lambda p: 0.5 * (1 + np.cos(np.angle(np.asarray(p) - center))), "cos",
                        holder_k1=1.0)


def arc_data(domain: DomainSpec, a: float, b: float, value: float) -> BoundaryData:
    """Constant ``value`` on the arclength interval [a, b) of the boundary, 0 elsewhere."""
    def fn(p):
        s = geo.boundary_arclength(domain, p)
        return np.where((s >= a) & (s < b), value, 0.0)
    return BoundaryData(fn, f"arc:{a},{b}:{value}")


class _Geometry:
    """Distance, oracle and nearest-point functions for a (possibly punctured) domain."""

    def __init__(self, domain: DomainSpec, pdomain: Optional[PuncturedDomain] = None):
        self.domain = domain
        self.pdomain = pdomain

    def distance(self, z):
        if self.pdomain is None:
            return geo.distance_to_boundary(self.domain, z)
        return self.pdomain.distance(z)

    def step_radius(self, z):
        d = self.distance(z)
        return 0.5 * d * (1.0 + geo._noise(z, self.domain.oracle_noise))

    def hit(self, z, threshold):
        """Absorption test.

        On the puncture circle the threshold is min(threshold, 2^{-n} eps): the
        inner radius eps = e^{-2n} is itself comparable to 2^{-3n}, and absorbing
        at a distance comparable to eps biases the estimate upward.
        """
        if self.pdomain is None:
            return geo.distance_to_boundary(self.domain, z) < threshold
        pd = self.pdomain
        return ((geo.distance_to_boundary(self.domain, z) < threshold)
                | (np.abs(z - pd.z0) - pd.inner_radius < min(threshold, 2.0 ** -pd.n * pd.inner_radius)))

    def contains(self, z):
        if self.pdomain is None:
            return geo.contains(self.domain, z)
        return self.pdomain.contains(z)

    def absorb(self, z):
        """Nearest boundary point and whether it lies on the puncture circle."""
        near = geo.nearest_boundary_point(self.domain, z)
        if self.pdomain is None:
            return near, np.zeros(np.shape(z), dtype=bool)
        pd = self.pdomain
        dg = geo.distance_to_boundary(self.domain, z)
        rel = z - pd.z0
        mod = np.abs(rel)
        on_inner = (mod - pd.inner_radius) < dg
        inner_pt = pd.z0 + pd.inner_radius * rel / np.where(mod > 0, mod, 1.0)
        return np.where(on_inner, inner_pt, near), on_inner


def walk_step(domain: DomainSpec, x: complex, theta: float) -> complex:
    """x + R(x) e^{2 pi i theta} with R = F/2."""
    if not geo.contains(domain, x):
        raise DomainError(f"walk position {x} is outside the domain")
    return complex(x + geo.step_radius(domain, x) * np.exp(2j * math.pi * theta))


def run_walk(domain: DomainSpec, z: complex, cfg: WalkConfig, sample: int = 0,
             record: bool = False, pdomain: Optional[PuncturedDomain] = None) -> WalkOutcome:
    """One walk, using substream ``sample`` of ``cfg.seed``."""
    g = _Geometry(domain, pdomain)
    x = complex(z)
    if not g.contains(np.array([x]))[0]:
        raise DomainError(f"start point {z} is outside the domain")
    path = [x] if record else None
    for t in range(cfg.max_steps):
        if g.hit(np.array([x]), cfg.absorption_threshold)[0]:
            p, _ = g.absorb(np.array([x]))
            return WalkOutcome(complex(p[0]), True, t + 1, np.array(path) if record else None)
        theta = float(uniform(cfg.seed, sample, t))
        x = complex(x + g.step_radius(np.array([x]))[0] * np.exp(2j * math.pi * theta))
        if record:
            path.append(x)
    return WalkOutcome(x, False, cfg.max_steps, np.array(path) if record else None)


def _walks(g: _Geometry, z: complex, cfg: WalkConfig, batch: int = 1 << 16, on_step=None):
    """Vectorized walks; returns terminals, absorbed flags, inner-circle flags, step counts.

    ``on_step(positions)``, if given, sees the live positions after every step.
    """
    N = cfg.samples
    terminal = np.empty(N, dtype=complex)
    absorbed = np.zeros(N, dtype=bool)
    inner = np.zeros(N, dtype=bool)
    steps = np.full(N, cfg.max_steps, dtype=np.int64)
    for start in range(0, N, batch):
        idx = np.arange(start, min(N, start + batch), dtype=np.int64)
        pos = np.full(idx.shape, complex(z))
        live = np.arange(len(idx))
        for t in range(cfg.max_steps):
            if not live.size:
                break
            hit = g.hit(pos[live], cfg.absorption_threshold)
            if hit.any():
                h = live[hit]
                p, on_inner = g.absorb(pos[h])
                terminal[idx[h]] = p
                absorbed[idx[h]] = True
                inner[idx[h]] = on_inner
                steps[idx[h]] = t + 1
                live = live[~hit]
                if not live.size:
                    break
            theta = uniform(cfg.seed, idx[live], t)
            pos[live] = pos[live] + g.step_radius(pos[live]) * np.exp(2j * math.pi * theta)
            if on_step is not None:
                on_step(pos[live])
        if live.size:
            terminal[idx[live]] = pos[live]
    return terminal, absorbed, inner, steps


def _summarize(values: np.ndarray, absorbed: np.ndarray) -> Estimate:
    n = len(values)
    mean = float(np.sum(values) / n)
    std = float(np.sqrt(np.sum((values - mean) ** 2) / max(n - 1, 1)))
    return Estimate(mean, std / math.sqrt(n), n, float(np.count_nonzero(absorbed) / n))


def estimate(domain: DomainSpec, z: complex, phi: BoundaryData, cfg: WalkConfig) -> Estimate:
    """Monte Carlo estimate of the Dirichlet solution with data ``phi`` at ``z``."""
    g = _Geometry(domain)
    if not g.contains(complex(z)):
        raise DomainError(f"{z} is outside the domain")
    terminal, absorbed, _, _ = _walks(g, z, cfg)
    values = np.where(absorbed, phi(terminal), 0.0)
    return _summarize(values, absorbed)


def estimate_punctured(pdomain: PuncturedDomain, z: complex, cfg: WalkConfig) -> Estimate:
    """Estimate of the function that is 0 on the boundary of G and 1 on the puncture circle."""
    g = _Geometry(pdomain.base, pdomain)
    if not g.contains(complex(z)):
        raise DomainError(f"{z} is outside the punctured domain")
    _, absorbed, inner, _ = _walks(g, z, cfg)
    values = (absorbed & inner).astype(float)
    return _summarize(values, absorbed)


def green_function(domain: DomainSpec, z0: complex, w: complex, cfg: WalkConfig) -> Estimate:
    """Estimate of the Green's function g(w, z0) = E[log|X - z0|] - log|w - z0|.

    X is the exit point of a walk started at ``w``; the Riemann map then has
    modulus exp(-g).
    """
    g = _Geometry(domain)
    if not g.contains(complex(w)):
        raise DomainError(f"{w} is outside the domain")
    terminal, absorbed, _, _ = _walks(g, w, cfg)
    values = np.where(absorbed, np.log(np.abs(terminal - z0)), 0.0) - math.log(abs(w - z0))
    return _summarize(values, absorbed)


def positions_inside(domain: DomainSpec, z: complex, cfg: WalkConfig) -> bool:
    """True if every position of every walk stays inside the domain."""
    g = _Geometry(domain)
    ok = [True]

    def check(p):
        ok[0] = ok[0] and bool(np.all(g.contains(p)))

    _walks(g, z, cfg, on_step=check)
    return ok[0]


def step_counts(domain: DomainSpec, z: complex, cfg: WalkConfig) -> np.ndarray:
    """Steps to absorption of every sample (max_steps for walks that were not absorbed)."""
    _, _, _, steps = _walks(_Geometry(domain), z, cfg)
    return steps
