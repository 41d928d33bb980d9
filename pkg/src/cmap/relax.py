"""Round-based relaxation of piecewise-harmonic fields on the punctured domain.

The field is a first-match union of

  * the puncture annulus node (inner data 1, outer trace sampled),
  * one local patch per boundary neighborhood (free-arc trace sampled,
    zero data on the domain boundary),
  * one harmonic patch per interior layout node (trace on the circle of
    radius R = 2r).

A round re-samples every stored trace from the previous round's field.
Sample locations never move and every piece is linear in its samples, so a
round is the affine map ``x -> A @ x + b`` on the concatenated samples.  The
operator is assembled once; rounds are sparse mat-vecs that only read the
previous snapshot (Jacobi semantics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import Disc, DomainError, DomainSpec, PuncturedDomain
from .harmonic import AnnulusPatch, CoverageError, HarmonicPatch, PiecewiseHarmonic
from .layout import Layout, build_layout
from .localsolve import LocalPatch, LocalSolution, annulus_neighborhood, build_neighborhoods


@dataclass
class RelaxConfig:
    """Relaxation parameters.

    ``unit_circle`` selects where the data value 1 lives: ``"puncture"`` (the
    inner circle e^{-2n}) or ``"annulus-outer"`` (the circle 2^{-n}/2, the
    alternative reading kept for comparison).
    """

    k2: float = 20.0
    rounds: Optional[int] = None
    quad_m: int = 64
    arc_m: int = 64
    annulus_m: int = 64
    unit_circle: str = "puncture"
    diagnostics: bool = False

    def num_rounds(self, n: int) -> int:
        if self.rounds is not None:
            if self.rounds < 1:
                raise ValueError("rounds must be >= 1")
            return self.rounds
        return int(math.ceil(self.k2 * n ** 3))


@dataclass
class RelaxSystem:
    """Geometry, pieces and the assembled round operator for one (domain, z0, n)."""

    pdomain: PuncturedDomain
    nbs: LocalSolution
    layout: Layout
    pieces: list
    offsets: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    x0: np.ndarray
    cfg: RelaxConfig

    @property
    def n(self) -> int:
        return self.pdomain.n

    @property
    def num_pieces(self) -> int:
        return len(self.pieces)

    def block(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @cached_property
    def _blocks(self) -> list:
        return [(self.block(i), self.A[self.block(i)], self.b[self.block(i)])
                for i in range(self.num_pieces)]

    def field(self, x: np.ndarray) -> PiecewiseHarmonic:
        pieces = [p.with_data(x[self.block(i)]) for i, p in enumerate(self.pieces)]
        return PiecewiseHarmonic(pieces, 0.0)

    def apply(self, x: np.ndarray, order: Optional[Sequence[int]] = None) -> np.ndarray:
        """One round.  ``order`` permutes the node updates; the result is unchanged."""
        if order is None:
            return self.A @ x + self.b
        out = np.empty_like(x)
        for i in order:
            sl, Ai, bi = self._blocks[i]
            out[sl] = Ai @ x + bi
        return out

    def operator(self, z) -> tuple[sp.csr_matrix, np.ndarray]:
        """Affine map (E, e) with field(z) = E @ x + e for fixed points ``z``."""
        z = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        return _assemble(self.pieces, self.offsets, z, strict=False)


@dataclass
class RelaxState:
    round: int
    x: np.ndarray
    system: RelaxSystem = field(repr=False)

    @property
    def field(self) -> PiecewiseHarmonic:
        return self.system.field(self.x)

    @property
    def layout(self) -> Layout:
        return self.system.layout

    @property
    def nbs(self) -> LocalSolution:
        return self.system.nbs

    @property
    def pdomain(self) -> PuncturedDomain:
        return self.system.pdomain

    @property
    def n(self) -> int:
        return self.system.n


def _assemble(pieces, offsets, points, strict=True):
    owner = PiecewiseHarmonic(pieces).owner_index(points)
    if strict and np.any(owner < 0):
        k = int(np.argmax(owner < 0))
        raise CoverageError(f"quadrature point {points[k]} is not covered by any piece")
    rows, cols, vals = [], [], []
    const = np.zeros(len(points))
    for i in np.unique(owner[owner >= 0]):
        sel = np.flatnonzero(owner == i)
        W, c = pieces[i].weights(points[sel])
        const[sel] = c
        r, k = np.nonzero(W)
        rows.append(sel[r])
        cols.append(offsets[i] + k)
        vals.append(W[r, k])
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    shape = (len(points), int(offsets[-1]))
    E = sp.csr_matrix((vals, (rows, cols)), shape=shape)
    E.sort_indices()
    return E, const


def _template_pieces(pdomain, nbs, centers, radii, cfg):
    ann = annulus_neighborhood(pdomain, cfg.annulus_m)
    if cfg.unit_circle == "annulus-outer":
        # constant 1 on the whole disc of radius 2^{-n}/2
        ann = replace(ann, owner_radius=ann.r_out, data=np.ones(cfg.annulus_m))
    pieces = [ann]
    pieces += [LocalPatch(nb, np.zeros(cfg.arc_m)) for nb in nbs]
    pieces += [HarmonicPatch(Disc(c, r), np.zeros(cfg.quad_m)) for c, r in zip(centers, radii)]
    return pieces


def _check_neighborhoods(nbs: LocalSolution, pdomain: PuncturedDomain):
    for nb in nbs:
        if abs(nb.z - pdomain.z0) - nb.region_bound() <= pdomain.annulus_outer:
            raise DomainError(f"neighborhood at {nb.z} reaches the puncture; move z0 or shrink cores")


def build_system(domain: DomainSpec, z0: complex, n: int, cfg: Optional[RelaxConfig] = None,
                 nbs: Optional[LocalSolution] = None) -> RelaxSystem:
    """Neighborhoods, layout and round operator for the punctured domain G minus D_{e^{-2n}}(z0)."""
    cfg = cfg or RelaxConfig()
    if cfg.unit_circle not in ("puncture", "annulus-outer"):
        raise ValueError(f"unknown unit_circle {cfg.unit_circle!r}")
    pdomain = PuncturedDomain(domain, z0, n)
    nbs = nbs if nbs is not None else build_neighborhoods(domain, n)
    _check_neighborhoods(nbs, pdomain)

    fixed = [annulus_neighborhood(pdomain, cfg.annulus_m).sample_points()]
    fixed += [nb.arc_points(cfg.arc_m) for nb in nbs]
    fixed = np.concatenate(fixed)

    def required(centers, radii):
        from .harmonic import circle_angles
        ring = np.exp(1j * circle_angles(cfg.quad_m))
        traces = (centers[:, None] + 2 * radii[:, None] * ring[None, :]).ravel() if len(centers) else []
        return np.concatenate([fixed, traces])

    layout = build_layout(domain, nbs, pdomain, n, required_points=required)
    interior = layout.interior
    pieces = _template_pieces(pdomain, nbs, [d.center for d in interior],
                              [d.radius for d in interior], cfg)
    sizes = [len(p.data) for p in pieces]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    points = np.concatenate([p.sample_points() for p in pieces])
    A, b = _assemble(pieces, offsets, points, strict=True)
    x0 = np.zeros(offsets[-1])
    if cfg.unit_circle == "annulus-outer":
        # annulus data frozen at 1
        sl = slice(0, sizes[0])
        A = A.tolil()
        A[sl] = 0.0
        A = A.tocsr()
        b = b.copy()
        b[sl] = 1.0
        x0[sl] = 1.0
    return RelaxSystem(pdomain, nbs, layout, pieces, offsets, A, b, x0, cfg)


def init_psi0(system: RelaxSystem) -> RelaxState:
    """Round-0 field: the annulus closed form at the puncture, zero everywhere else."""
    return RelaxState(0, system.x0.copy(), system)


def relax_round(state: RelaxState, order: Optional[Sequence[int]] = None) -> RelaxState:
    return RelaxState(state.round + 1, state.system.apply(state.x, order), state.system)


def valid_probes(pdomain: PuncturedDomain, count: int, seed: int = 0, margin: Optional[float] = None
                 ) -> np.ndarray:
    """Random points with distance > margin (default 2^-n) from the boundary and from z0.

    Raises DomainError when rejection sampling cannot find ``count`` such points.
    """
    margin = 2.0 ** -pdomain.n if margin is None else margin
    rng = np.random.default_rng(seed)
    from .geometry import sample_boundary
    ext = np.abs(sample_boundary(pdomain.base, 512)).max()
    from .geometry import distance_to_boundary
    out = []
    for _ in range(1000):
        if sum(len(o) for o in out) >= count:
            return np.concatenate(out)[:count]
        z = (rng.random(4 * count) * 2 - 1) * ext + 1j * (rng.random(4 * count) * 2 - 1) * ext
        ok = (distance_to_boundary(pdomain.base, z) > margin) & (np.abs(z - pdomain.z0) > margin)
        out.append(z[ok])
    raise DomainError(f"could not find {count} probes with margin {margin:.6g}")


@dataclass
class RelaxResult:
    state: RelaxState
    residuals: np.ndarray  # residuals[t] = max |Psi_{t+1} - Psi_t| over probes
    probes: np.ndarray
    history: Optional[np.ndarray] = None  # probe values per round, if recorded

    @property
    def field(self) -> PiecewiseHarmonic:
        return self.state.field


def run_relaxation(system: RelaxSystem, rounds: Optional[int] = None, probes=None,
                   record: bool = False, stop_residual: Optional[float] = None,
                   order: Optional[Sequence[int]] = None) -> RelaxResult:
    """Iterate rounds from Psi_0, tracking the per-round change at ``probes``."""
    rounds = system.cfg.num_rounds(system.n) if rounds is None else rounds
    if probes is None:
        probes = valid_probes(system.pdomain, 200)
    probes = np.asarray(probes, dtype=complex)
    E, e = system.operator(probes)
    state = init_psi0(system)
    prev = E @ state.x + e
    history = [prev] if record else None
    residuals = []
    for _ in range(rounds):
        state = relax_round(state, order)
        cur = E @ state.x + e
        residuals.append(float(np.max(np.abs(cur - prev))) if len(cur) else 0.0)
        if record:
            history.append(cur)
        prev = cur
        if stop_residual is not None and residuals[-1] < stop_residual:
            break
    return RelaxResult(state, np.array(residuals), probes,
                       np.array(history) if record else None)


def solve_dirichlet(domain: DomainSpec, z0: complex, n: int, cfg: Optional[RelaxConfig] = None
                    ) -> PiecewiseHarmonic:
    """Approximate the harmonic function on G minus D_{e^{-2n}}(z0) that is 0 on the boundary of G and 1 on the puncture."""
    system = build_system(domain, z0, n, cfg)
    return run_relaxation(system, probes=np.zeros(0, dtype=complex)).field


def convergence_report(domain: DomainSpec, z0: complex, n: int, cfg: Optional[RelaxConfig] = None,
                       probes=None) -> np.ndarray:
    """Per-round table of (round, max |Psi_{t+1} - Psi_t|) over probe points."""
    system = build_system(domain, z0, n, cfg)
    res = run_relaxation(system, probes=probes).residuals
    return np.column_stack([np.arange(len(res)), res])


def rounds_to_residual(residuals: np.ndarray, threshold: float) -> int:
    """First round count after which the per-round change stays below ``threshold``."""
    above = np.flatnonzero(residuals >= threshold)
    return int(above[-1] + 2) if above.size else 1
