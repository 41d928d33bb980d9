"""Riemann map from the punctured-domain Dirichlet solution.

With h the harmonic function on G minus D_eps(z0) that is 0 on the boundary
of G and 1 on the small circle, the Green's function is g = c h for a
constant c fixed by the logarithmic singularity at z0.  The map is

    f(w) = exp(-(u(w) + i u~(w))),   u = c h,

where u~ is the harmonic conjugate of u, obtained by integrating the
analytic gradient of the field along a path from an anchor next to z0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import DomainSpec, PuncturedDomain, contains, distance_to_boundary
from .harmonic import PiecewiseHarmonic
from .relax import RelaxConfig, build_system, run_relaxation

CALIBRATION_ANGLES = 64
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


class CalibrationError(RuntimeError):
    pass


class PathError(ValueError):
    pass


@dataclass
class GreenCalibration:
    c: float
    delta: float
    residual: float

    def derivative_at_z0(self, inner_radius: float) -> float:
        """f'(z0) = exp(log(1/eps) - c)."""
        return math.exp(math.log(1.0 / inner_radius) - self.c)


def calibrate_green(field: PiecewiseHarmonic, pdomain: PuncturedDomain, n: int) -> GreenCalibration:
    """Fit g = c h from the samples of h on the circle |w - z0| = 2^{-n-2}.

    Near z0, g(w) = log(1/|w - z0|) - log f'(z0) + o(1), while c (1 - h)
    equals g(on the eps circle) - g(w) = log(|w - z0|/eps).
    """
    delta = 2.0 ** (-n - 2)
    eps = pdomain.inner_radius
    pts = pdomain.z0 + delta * np.exp(2j * math.pi * np.arange(CALIBRATION_ANGLES) / CALIBRATION_ANGLES)
    h = np.asarray(field(pts))
    if np.any(h >= 1.0):
        raise CalibrationError(f"field overshoot: h = {h.max():.6g} >= 1 on the calibration circle")
    est = math.log(delta / eps) / (1.0 - h)
    return GreenCalibration(float(np.mean(est)), delta, float(est.max() - est.min()))


@dataclass
class MapEvaluation:
    w: complex
    value: complex
    u: float
    conjugate: float
    path: np.ndarray = field(repr=False)


def _anchor(pdomain: PuncturedDomain) -> complex:
    return pdomain.z0 + 2.0 ** (-pdomain.n - 1)


def _path_margin(pdomain: PuncturedDomain) -> float:
    # the anchor sits 2^{-n-1} from z0, so it may be closer than 2^{-n} to the boundary
    return min(2.0 ** -pdomain.n, float(distance_to_boundary(pdomain.base, _anchor(pdomain))))


def _segment_ok(pdomain: PuncturedDomain, a: complex, b: complex) -> bool:
    t = np.linspace(0.0, 1.0, 257)
    p = a + (b - a) * t
    hole = 2.0 ** (-pdomain.n - 2)
    far = np.abs(p - pdomain.z0) >= hole * (1 - 1e-12)
    return bool(far.all() and np.all(distance_to_boundary(pdomain.base, p) >= _path_margin(pdomain) * (1 - 1e-12)))


def default_path(pdomain: PuncturedDomain, w: complex) -> np.ndarray:
    """Polyline from the anchor to ``w``.

    The straight segment when it keeps its margins; otherwise an arc of
    radius 2^{-n-1} around z0 to the direction of w followed by the radial
    segment out to w.
    """
    a = _anchor(pdomain)
    w = complex(w)
    if _segment_ok(pdomain, a, w):
        return np.array([a, w])
    t = 2.0 ** (-pdomain.n - 1)
    theta = math.atan2((w - pdomain.z0).imag, (w - pdomain.z0).real)
    k = max(1, int(math.ceil(abs(theta) / (math.pi / 16))))
    arc = pdomain.z0 + t * np.exp(1j * np.linspace(0.0, theta, k + 1))
    path = np.concatenate([arc, [w]])
    for p, q in zip(path[:-1], path[1:]):
        if not _segment_ok(pdomain, p, q):
            raise PathError(f"no valid path from the anchor to {w}")
    return path


def _segment_nodes(pdomain: PuncturedDomain, a: complex, b: complex):
    """Gauss nodes and complex weights (dz) on [a, b], refined near z0 and the boundary."""
    length = abs(b - a)
    if length == 0:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=complex)
    floor = 2.0 ** (-pdomain.n - 6)
    cuts = [0.0]
    while cuts[-1] < 1.0:
        p = a + (b - a) * cuts[-1]
        scale = min(abs(p - pdomain.z0), float(distance_to_boundary(pdomain.base, p)))
        step = max(0.25 * scale, floor) / length
        cuts.append(min(1.0, cuts[-1] + step))
    cuts = np.array(cuts)
    lo, hi = cuts[:-1], cuts[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    s = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return a + (b - a) * s, (b - a) * wts


@dataclass
class RiemannMap:
    """Approximate Riemann map built from a relaxed Dirichlet field."""

    pdomain: PuncturedDomain
    field: PiecewiseHarmonic = field(repr=False)
    calibration: GreenCalibration

    @property
    def n(self) -> int:
        return self.pdomain.n

    @property
    def derivative_at_z0(self) -> float:
        return self.calibration.derivative_at_z0(self.pdomain.inner_radius)

    def u(self, w):
        return self.calibration.c * np.asarray(self.field(w))

    def gradient(self, w):
        """u_x - i u_y, i.e. the complex derivative of u + i u~."""
        return self.calibration.c * self.field.gradient(w)

    def anchor_conjugate(self) -> float:
        """u~ at the anchor: -arg f(anchor), to first order -u_y(anchor) t."""
        t = 2.0 ** (-self.n - 1)
        g = complex(self.gradient(np.array([_anchor(self.pdomain)]))[0])
        return float(g.imag * t)

    def conjugate(self, w: complex, path: Optional[np.ndarray] = None) -> float:
        path = default_path(self.pdomain, w) if path is None else np.asarray(path, dtype=complex)
        if abs(path[0] - _anchor(self.pdomain)) > 1e-15:
            raise PathError("paths must start at the anchor z0 + 2^{-n-1}")
        nodes, dz = zip(*(_segment_nodes(self.pdomain, p, q) for p, q in zip(path[:-1], path[1:])))
        nodes, dz = np.concatenate(nodes), np.concatenate(dz)
        integral = np.sum(self.gradient(nodes) * dz)
        return self.anchor_conjugate() + float(integral.imag)

    def evaluate(self, w: complex) -> MapEvaluation:
        w = complex(w)
        pd = self.pdomain
        if not contains(pd.base, w):
            raise PathError(f"{w} is outside the domain")
        if abs(w - pd.z0) <= 2.0 ** -self.n:
            value = self.derivative_at_z0 * (w - pd.z0)
            return MapEvaluation(w, complex(value), float(-math.log(abs(value))) if value else math.inf,
                                 float(-np.angle(value)) if value else 0.0, np.array([pd.z0, w]))
        path = default_path(pd, w)
        u = float(self.u(np.array([w]))[0])
        ut = self.conjugate(w, path)
        return MapEvaluation(w, complex(np.exp(-(u + 1j * ut))), u, ut, path)

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.array([self.evaluate(x).value for x in np.atleast_1d(w).ravel()])
        return out.reshape(w.shape) if w.ndim else complex(out[0])


def build_map(domain: DomainSpec, z0: complex, n: int, cfg: Optional[RelaxConfig] = None) -> RiemannMap:
    """Relax the punctured-domain problem and calibrate the Green's function."""
    system = build_system(domain, z0, n, cfg)
    result = run_relaxation(system, probes=np.zeros(0, dtype=complex))
    return RiemannMap(system.pdomain, result.field, calibrate_green(result.field, system.pdomain, n))


def harmonic_conjugate(field: PiecewiseHarmonic, cal: GreenCalibration, pdomain: PuncturedDomain,
                       w: complex, base_path: Optional[np.ndarray] = None) -> float:
    return RiemannMap(pdomain, field, cal).conjugate(w, base_path)


def riemann_eval(domain: DomainSpec, z0: complex, w: complex, n: int,
                 cfg: Optional[RelaxConfig] = None) -> MapEvaluation:
    return build_map(domain, z0, n, cfg).evaluate(w)


def conformality_check(rmap: RiemannMap, probes) -> float:
    """Max over probes of |f_x + i f_y| by central differences at step 2^{-n-3}."""
    h = 2.0 ** (-rmap.n - 3)
    worst = 0.0
    for w in np.atleast_1d(np.asarray(probes, dtype=complex)):
        fx = (rmap(w + h) - rmap(w - h)) / (2 * h)
        fy = (rmap(w + 1j * h) - rmap(w - 1j * h)) / (2 * h)
        worst = max(worst, abs(fx + 1j * fy))
    return worst


def mobius_disc_map(center: complex, radius: float, z0: complex, w):
    """Riemann map of the disc D_radius(center) sending z0 to 0 with positive derivative."""
    a = (np.asarray(w) - center) / radius
    b = (z0 - center) / radius
    return (a - b) / (1 - np.conj(b) * a)
