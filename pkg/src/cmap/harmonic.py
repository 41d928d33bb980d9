"""Poisson-kernel machinery and piecewise-harmonic fields.

A harmonic function on a disc is stored as its trace on a circle, sampled at
``m`` equispaced angles ``2*pi*k/m``.  Values inside the circle are obtained by
trapezoidal quadrature of the Poisson integral, which converges geometrically
for points well inside the circle.

The discrete kernel weights are divided by their sum.  This keeps every
evaluation an exact convex combination of the samples (so constants are
reproduced to rounding and the maximum principle holds sample-wise) while only
changing the result by O((|z-c|/r)^m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Disc, DomainError

EVAL_LIMIT = 0.9


class PrecisionError(ValueError):
    """Evaluation point too close to the sample circle for spectral accuracy."""


class CoverageError(RuntimeError):
    """A point required by a quadrature rule is not covered by any patch."""


def circle_angles(m: int, offset: float = 0.0) -> np.ndarray:
    return 2 * math.pi * (np.arange(m) + offset) / m


def poisson_kernel(w, z, c: complex = 0j, r: float = 1.0):
    """Poisson kernel of the disc D_r(c) as a density w.r.t. arclength on the circle.

    Raises
    ------
    DomainError
        If ``z`` is not inside the disc or ``w`` is not on its circle.
    """
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z - c) >= r):
        raise DomainError("z must lie inside the disc")
    if np.any(np.abs(np.abs(w - c) - r) > 1e-9 * max(r, 1.0)):
        raise DomainError("w must lie on the circle")
    return (r * r - np.abs(z - c) ** 2) / (2 * math.pi * r * np.abs(w - z) ** 2)


def _unit_kernel(s: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Unnormalized discrete Poisson weights (1 - |s|^2)/|nodes - s|^2, shape (len(s), len(nodes))."""
    s = s[:, None]
    return (1.0 - np.abs(s) ** 2) / np.abs(nodes[None, :] - s) ** 2


def poisson_weights(z, center: complex, radius: float, m: int) -> np.ndarray:
    """Normalized trapezoid weights of the Poisson integral, one row per point in ``z``."""
    s = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    s = (s - center) / radius
    k = _unit_kernel(s, np.exp(1j * circle_angles(m)))
    return k / k.sum(axis=1, keepdims=True)


def poisson_integral(samples, z, center: complex = 0j, radius: float = 1.0):
    """Harmonic extension of equispaced circle ``samples`` evaluated at ``z``.

    Raises
    ------
    PrecisionError
        If some ``|z - center| > 0.9 * radius``.
    """
    samples = np.asarray(samples, dtype=float)
    z = np.asarray(z, dtype=complex)
    dist = np.abs(z - center)
    if np.any(dist > EVAL_LIMIT * radius):
        raise PrecisionError(
            f"evaluation at distance {dist.max():.6g} exceeds {EVAL_LIMIT} * radius {radius:.6g}")
    w = poisson_weights(z, center, radius, len(samples))
    out = w @ samples
    return out.reshape(z.shape) if z.ndim else float(out[0])


def _herglotz_gradient(s: np.ndarray, nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """d/ds of the normalized Poisson average, returned as u_x - i u_y in s-coordinates."""
    s = s[:, None]
    diff = nodes[None, :] - s
    k = (1.0 - np.abs(s) ** 2) / np.abs(diff) ** 2
    norm = k.sum(axis=1)
    u = (k @ values) / norm
    dk = 2 * nodes[None, :] / diff ** 2
    # Re of the Herglotz sum equals the kernel sum, so its complex derivative
    # gives the gradient of both numerator and normalizer.
    return (dk @ values - u * dk.sum(axis=1)) / norm


class Piece(Protocol):
    """What the piecewise field needs from each of its members."""

    data: np.ndarray

    @property
    def bound(self) -> Disc: ...

    def contains(self, z: np.ndarray) -> np.ndarray: ...

    def weights(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def evaluate(self, z: np.ndarray) -> np.ndarray: ...

    def gradient(self, z: np.ndarray) -> np.ndarray: ...

    def sample_points(self) -> np.ndarray: ...

    def with_data(self, data: np.ndarray): ...


@dataclass(frozen=True)
class HarmonicPatch:
    """Harmonic function on ``2*owner`` stored by its trace on the doubled circle.

    Only points of ``owner`` are authoritative; evaluation there sits at half
    the sample radius, where the trapezoid rule is accurate to about 2^-m.
    """

    owner: Disc
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        m = data.shape[-1]
        if m < 32 or m & (m - 1):
            raise ValueError(f"sample count must be a power of two >= 32, got {m}")
        object.__setattr__(self, "data", data)

    @property
    def m(self) -> int:
        return self.data.shape[-1]

    @property
    def eval_circle(self) -> Disc:
        return self.owner.scaled(2.0)

    @property
    def bound(self) -> Disc:
        return self.owner

    @property
    def samples(self) -> np.ndarray:
        return self.data

    def contains(self, z):
        return self.owner.contains(z)

    def sample_points(self) -> np.ndarray:
        c = self.eval_circle
        return c.center + c.radius * np.exp(1j * circle_angles(self.m))

    def weights(self, z):
        c = self.eval_circle
        w = poisson_weights(z, c.center, c.radius, self.m)
        return w, np.zeros(w.shape[0])

    def evaluate(self, z):
        c = self.eval_circle
        return poisson_integral(self.data, z, c.center, c.radius)

    def gradient(self, z):
        c = self.eval_circle
        s = (np.atleast_1d(np.asarray(z, dtype=complex)) - c.center) / c.radius
        nodes = np.exp(1j * circle_angles(self.m))
        return _herglotz_gradient(s, nodes, self.data) / c.radius

    def with_data(self, data):
        return replace(self, data=np.asarray(data, dtype=float))

    def to_csv(self) -> str:
        rows = ["angle,value"]
        for a, v in zip(circle_angles(self.m), self.data):
            rows.append(f"{a!r},{float(v)!r}")
        return "\n".join(rows) + "\n"


@dataclass
class PiecewiseHarmonic:
    """First-match union of harmonic pieces: a point takes the value of the first piece owning it."""

    pieces: Sequence
    default_value: float = 0.0
    _centers: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.pieces = list(self.pieces)
        self._centers = np.array([p.bound.center for p in self.pieces], dtype=complex)
        self._bounds = np.array([p.bound.radius for p in self.pieces], dtype=float)

    def owner_index(self, z) -> np.ndarray:
        """Index of the first piece containing each point, -1 where none does."""
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        owner = np.full(z.shape, -1, dtype=np.int64)
        if not self.pieces or z.size == 0:
            return owner
        tree = cKDTree(np.column_stack([z.real, z.imag]))
        hits = tree.query_ball_point(
            np.column_stack([self._centers.real, self._centers.imag]), self._bounds)
        for i, idx in enumerate(hits):
            if not idx:
                continue
            idx = np.asarray(idx)
            idx = idx[owner[idx] < 0]
            if idx.size == 0:
                continue
            inside = self.pieces[i].contains(z[idx])
            owner[idx[inside]] = i
        return owner

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        flat = np.atleast_1d(z).ravel()
        owner = self.owner_index(flat)
        out = np.full(flat.shape, float(self.default_value))
        for i in np.unique(owner[owner >= 0]):
            sel = owner == i
            out[sel] = self.pieces[i].evaluate(flat[sel])
        return out.reshape(z.shape) if z.ndim else float(out[0])

    __call__ = evaluate

    def gradient(self, z) -> np.ndarray:
        """u_x - i u_y at each point (zero outside all pieces)."""
        z = np.asarray(z, dtype=complex)
        flat = np.atleast_1d(z).ravel()
        owner = self.owner_index(flat)
        out = np.zeros(flat.shape, dtype=complex)
        for i in np.unique(owner[owner >= 0]):
            sel = owner == i
            out[sel] = self.pieces[i].gradient(flat[sel])
        return out.reshape(z.shape)


def eval_piecewise(h: PiecewiseHarmonic, z):
    return h.evaluate(z)


def integrate_piecewise_on_circle(h: PiecewiseHarmonic, center: complex, radius: float,
                                  z, quad_m: int = 256):
    """Poisson integral over the circle of radius ``radius`` about ``center`` of the field ``h``.

    The field is sampled at ``quad_m`` equispaced nodes and combined with the
    (normalized) trapezoid Poisson weights for each point of ``z``.

    Raises
    ------
    CoverageError
        If a quadrature node is not owned by any piece of ``h``.
    """
    angles = circle_angles(quad_m)
    nodes = center + radius * np.exp(1j * angles)
    owner = h.owner_index(nodes)
    if np.any(owner < 0):
        k = int(np.argmax(owner < 0))
        raise CoverageError(f"quadrature node at angle {angles[k]:.6g} is not covered")
    values = h.evaluate(nodes)
    return poisson_integral(values, z, center, radius)


def annulus_solution(c: complex, r_in: float, r_out: float, z):
    """Harmonic function on r_in < |z-c| < r_out, 1 on the inner and 0 on the outer circle.

    Raises
    ------
    DomainError
        If a point is outside the closed annulus.
    """
    rho = np.abs(np.asarray(z, dtype=complex) - c)
    if np.any((rho < r_in * (1 - 1e-12)) | (rho > r_out * (1 + 1e-12))):
        raise DomainError("point outside the annulus")
    out = np.log(rho / r_out) / math.log(r_in / r_out)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class AnnulusHarmonic:
    """Laurent-mode solution of the annulus Dirichlet problem.

    Coefficients may carry leading batch axes; evaluation then returns one row
    per batch entry, which is how linear weights are extracted.
    """

    center: complex
    r_in: float
    r_out: float
    a0: np.ndarray
    b0: np.ndarray
    A: np.ndarray
    B: np.ndarray
    mode_weight: np.ndarray

    @property
    def q(self) -> float:
        return self.r_in / self.r_out

    def _sigma(self, z):
        return (np.atleast_1d(np.asarray(z, dtype=complex)).ravel() - self.center) / self.r_out

    def evaluate(self, z):
        sigma = self._sigma(z)
        k = np.arange(1, self.A.shape[-1] + 1)
        pos = sigma[:, None] ** k
        neg = (self.q / sigma[:, None]) ** k
        series = (self.A[..., None, :] * pos + np.conj(self.B)[..., None, :] * neg) * self.mode_weight
        out = self.a0[..., None] + self.b0[..., None] * np.log(np.abs(sigma)) + series.sum(-1).real
        return out

    def gradient(self, z):
        sigma = self._sigma(z)
        k = np.arange(1, self.A.shape[-1] + 1)
        pos = k * sigma[:, None] ** (k - 1)
        neg = k * (self.q / sigma[:, None]) ** k / sigma[:, None]
        series = (self.A[..., None, :] * pos - np.conj(self.B)[..., None, :] * neg) * self.mode_weight
        d = self.b0[..., None] / sigma + series.sum(-1)
        return d / self.r_out

    __call__ = evaluate


def annulus_fourier_solve(c: complex, r_in: float, r_out: float, inner_samples, outer_samples
                          ) -> AnnulusHarmonic:
    """Solve the annulus Dirichlet problem from equispaced traces on both circles.

    Each Fourier mode k of the data fixes the pair of radial solutions
    s^k and (q/s)^k (log s for k = 0) through a 2x2 system.
    """
    inner = np.asarray(inner_samples, dtype=float)
    outer = np.asarray(outer_samples, dtype=float)
    if inner.shape[-1] != outer.shape[-1]:
        raise ValueError("inner and outer sample counts differ")
    m = outer.shape[-1]
    if m & (m - 1):
        raise ValueError("sample count must be a power of two")
    inner, outer = np.broadcast_arrays(inner, outer)
    q = r_in / r_out
    Fi = np.fft.rfft(inner, axis=-1) / m
    Fo = np.fft.rfft(outer, axis=-1) / m
    a0 = Fo[..., 0].real
    b0 = (Fi[..., 0].real - a0) / math.log(q)
    k = np.arange(1, Fo.shape[-1])
    qk = q ** k
    det = 1.0 - qk * qk
    co, ci = Fo[..., 1:], Fi[..., 1:]
    A = (co - ci * qk) / det
    B = (ci - co * qk) / det
    weight = np.where(k == m // 2, 1.0, 2.0)
    return AnnulusHarmonic(complex(c), float(r_in), float(r_out), a0, b0, A, B, weight)


@dataclass(frozen=True)
class AnnulusPatch:
    """Puncture node: annulus around ``center`` with a fixed inner value and sampled outer trace.

    Authoritative for ``|z - center| < owner_radius``; points inside the inner
    circle take the inner value.
    """

    center: complex
    r_in: float
    r_out: float
    owner_radius: float
    data: np.ndarray
    inner_value: float = 1.0

    @property
    def m(self) -> int:
        return len(self.data)

    @property
    def bound(self) -> Disc:
        return Disc(self.center, self.owner_radius)

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.owner_radius

    def sample_points(self) -> np.ndarray:
        return self.center + self.r_out * np.exp(1j * circle_angles(self.m))

    def _solution(self, outer):
        inner = np.full(outer.shape, self.inner_value)
        return annulus_fourier_solve(self.center, self.r_in, self.r_out, inner, outer)

    def _clamp(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        rel = z - self.center
        rho = np.abs(rel)
        return z, rho < self.r_in

    def weights(self, z):
        z, inside = self._clamp(z)
        m = self.m
        lin = annulus_fourier_solve(self.center, self.r_in, self.r_out, np.zeros((m, m)), np.eye(m))
        w = lin.evaluate(np.where(inside, self.center + self.r_in, z)).T
        const = self._solution(np.zeros(m)).evaluate(np.where(inside, self.center + self.r_in, z))
        w[inside] = 0.0
        const = np.where(inside, self.inner_value, const)
        return w, const

    def evaluate(self, z):
        z, inside = self._clamp(z)
        vals = self._solution(self.data).evaluate(np.where(inside, self.center + self.r_in, z))
        return np.where(inside, self.inner_value, vals)

    def gradient(self, z):
        z, inside = self._clamp(z)
        g = self._solution(self.data).gradient(np.where(inside, self.center + self.r_in, z))
        return np.where(inside, 0j, g)

    def with_data(self, data):
        return replace(self, data=np.asarray(data, dtype=float))
