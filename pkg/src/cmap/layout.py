"""Greedy construction and verification of interior disc layouts.

A layout covers the punctured domain away from the tripled boundary cores
and the puncture node with discs of radius F(z)/4.  Candidate centers come
from a quadtree whose leaves shrink with the local distance to the boundary;
the greedy repeatedly takes the uncovered candidate closest to the covered
set, as in the growth argument for polynomial layout size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import Disc, PuncturedDomain
from .localsolve import LocalSolution

CORE_FACTOR = 3.0
NODE_BUDGET = 1_000_000
# Candidates count as covered only inside this fraction of a node radius.  With
# quadtree leaves of side r/4 (half-diagonal < 0.18 r) every point of a leaf is
# then within r of a node center.
COVER_FRACTION = 0.8


class LayoutError(RuntimeError):
    pass


@dataclass(frozen=True)
class LayoutNode:
    disc: Disc
    kind: str  # "interior" | "boundary-core" | "puncture-annulus"


@dataclass
class Layout:
    nodes: list
    n: int
    pdomain: PuncturedDomain = field(repr=False, default=None)

    @property
    def interior(self) -> list:
        return [nd.disc for nd in self.nodes if nd.kind == "interior"]

    @property
    def size(self) -> int:
        return sum(nd.kind == "interior" for nd in self.nodes)

    def to_json(self) -> list:
        return [{"center": [nd.disc.center.real, nd.disc.center.imag],
                 "radius": nd.disc.radius, "kind": nd.kind} for nd in self.nodes]


class _Exclusion:
    """Tripled cores plus the puncture owner disc."""

    def __init__(self, nbs: LocalSolution, pdomain: PuncturedDomain):
        self.centers = np.array([nb.z for nb in nbs] + [pdomain.z0], dtype=complex)
        self.radii = np.array([CORE_FACTOR * nb.r for nb in nbs] + [0.5 * pdomain.annulus_outer])

    def signed_distance(self, z: np.ndarray) -> np.ndarray:
        """Distance to the excluded union (negative inside)."""
        out = np.full(z.shape, np.inf)
        for start in range(0, len(z), 20_000):
            chunk = z[start:start + 20_000]
            d = np.abs(chunk[:, None] - self.centers[None, :]) - self.radii[None, :]
            out[start:start + 20_000] = d.min(axis=1)
        return out


def _candidates(pdomain: PuncturedDomain, excl: _Exclusion, n: int,
                refine: float = 32.0) -> np.ndarray:
    """Quadtree leaf centers in the uncovered part of the punctured domain."""
    base = pdomain.base
    far = np.abs(np.concatenate([_extent_points(base)])).max() * 1.01
    h_min = 2.0 ** (-n - 6)
    centers = np.array([0j])
    half = far
    leaves = []
    while centers.size:
        diag = half * math.sqrt(2)
        dist = pdomain.distance(centers)
        inside = pdomain.contains(centers)
        # drop cells entirely outside
        keep = inside | (_base_distance(pdomain, centers) < diag)
        sd = excl.signed_distance(centers)
        keep &= sd > -diag
        centers, dist, inside, sd = centers[keep], dist[keep], inside[keep], sd[keep]
        target = np.where(inside, dist / refine, 0.0)
        split = (half > target) & (half > h_min)
        leaf = ~split & inside & (sd >= 0)
        leaves.append(centers[leaf])
        kids = centers[split]
        half /= 2
        offs = np.array([-1 - 1j, 1 - 1j, -1 + 1j, 1 + 1j]) * half
        centers = (kids[:, None] + offs[None, :]).ravel()
    return np.concatenate(leaves) if leaves else np.zeros(0, dtype=complex)


def _extent_points(domain) -> np.ndarray:
    from .geometry import sample_boundary
    return sample_boundary(domain, 512)


def _base_distance(pdomain: PuncturedDomain, z: np.ndarray) -> np.ndarray:
    from .geometry import _raw_distance
    return np.minimum(_raw_distance(pdomain.base, z), np.abs(np.abs(z - pdomain.z0) - pdomain.inner_radius))


class _Greedy:
    def __init__(self, pdomain: PuncturedDomain, excl: _Exclusion, min_radius: float):
        self.pdomain = pdomain
        self.excl = excl
        self.min_radius = min_radius
        self.points = np.zeros(0, dtype=complex)
        self.dist = np.zeros(0)
        self.centers: list = []
        self.radii: list = []

    def add_candidates(self, pts: np.ndarray):
        pts = pts[self.pdomain.contains(pts)]
        if not pts.size:
            return
        d = self.excl.signed_distance(pts)
        if self.centers:
            c = np.array(self.centers)
            r = np.array(self.radii)
            for start in range(0, len(pts), 5000):
                sl = slice(start, start + 5000)
                dn = (np.abs(pts[sl, None] - c[None, :]) - COVER_FRACTION * r[None, :]).min(axis=1)
                d[sl] = np.minimum(d[sl], dn)
        keep = d >= 0
        self.points = np.concatenate([self.points, pts[keep]])
        self.dist = np.concatenate([self.dist, d[keep]])

    def run(self):
        while self.points.size:
            i = int(np.argmin(self.dist))
            p = self.points[i]
            r = float(self.pdomain.node_radius(p))
            if r < self.min_radius:
                raise LayoutError(f"node radius {r:.3g} below the minimum {self.min_radius:.3g}")
            self.centers.append(complex(p))
            self.radii.append(r)
            if len(self.centers) > NODE_BUDGET:
                raise LayoutError("node budget exhausted; neighborhoods are probably mis-scaled")
            self.dist = np.minimum(self.dist, np.abs(self.points - p) - COVER_FRACTION * r)
            keep = self.dist >= 0
            self.points, self.dist = self.points[keep], self.dist[keep]


def build_layout(domain, nbs: LocalSolution, pdomain: PuncturedDomain, n: int,
                 required_points: Optional[Callable] = None, samples: int = 100_000,
                 seed: int = 0, min_radius: Optional[float] = None) -> Layout:
    """Greedy n-layout for the punctured domain.

    ``required_points(centers, radii)``, when given, returns extra points that
    must be covered (the relaxation passes its quadrature nodes here); the
    greedy is re-run until these and a rejection-sampling probe are covered.
    """
    excl = _Exclusion(nbs, pdomain)
    if min_radius is None:
        min_radius = 2.0 ** (-3 * (n + 2))
    greedy = _Greedy(pdomain, excl, min_radius)
    greedy.add_candidates(_candidates(pdomain, excl, n))
    greedy.run()
    probe = _probe_points(pdomain, samples, seed)
    for _ in range(50):
        extra = [probe]
        if required_points is not None:
            extra.append(required_points(np.array(greedy.centers), np.array(greedy.radii)))
        before = len(greedy.centers)
        greedy.add_candidates(np.concatenate(extra))
        greedy.run()
        if len(greedy.centers) == before:
            break
    else:
        raise LayoutError("layout closure did not converge")
    nodes = [LayoutNode(Disc(c, r), "interior") for c, r in zip(greedy.centers, greedy.radii)]
    nodes += [LayoutNode(nb.core, "boundary-core") for nb in nbs]
    nodes.append(LayoutNode(Disc(pdomain.z0, pdomain.annulus_outer), "puncture-annulus"))
    return Layout(nodes, n, pdomain)


def _probe_points(pdomain: PuncturedDomain, samples: int, seed: int) -> np.ndarray:
    """Uniform points over the bounding box plus log-uniform points around the puncture."""
    from .geometry import sample_boundary
    rng = np.random.default_rng(seed)
    ext = np.abs(sample_boundary(pdomain.base, 512)).max()
    u = (rng.random(samples) * 2 - 1) * ext + 1j * (rng.random(samples) * 2 - 1) * ext
    k = samples // 10
    lo, hi = math.log(0.5 * pdomain.annulus_outer), math.log(8 * pdomain.annulus_outer)
    rad = np.exp(lo + (hi - lo) * rng.random(k))
    ring = pdomain.z0 + rad * np.exp(2j * math.pi * rng.random(k))
    return np.concatenate([u, ring])


def verify_layout(layout: Layout, domain, nbs: LocalSolution, pdomain: PuncturedDomain,
                  samples: int = 100_000, seed: int = 12345) -> list:
    """Check node safety, the radius rule and the covering condition; returns violations."""
    problems = []
    interior = layout.interior
    if not interior:
        return ["layout has no interior nodes"]
    c = np.array([d.center for d in interior])
    r = np.array([d.radius for d in interior])
    inside = pdomain.contains(c)
    if not inside.all():
        problems.append(f"{int((~inside).sum())} node centers outside the punctured domain")
        return problems
    d = pdomain.distance(c)
    bad = np.flatnonzero(2 * r >= d)
    if bad.size:
        problems.append(f"node safety: 2B not inside G for {bad.size} nodes (first at {c[bad[0]]})")
    expect = pdomain.node_radius(c)
    off = np.flatnonzero(np.abs(r - expect) > 1e-12 * np.maximum(expect, 1e-300))
    if off.size:
        problems.append(f"radius rule violated for {off.size} nodes (first at {c[off[0]]})")
    excl = _Exclusion(nbs, pdomain)
    pts = _probe_points(pdomain, samples, seed)
    pts = pts[pdomain.contains(pts)]
    pts = pts[excl.signed_distance(pts) >= 0]
    if pts.size:
        from scipy.spatial import cKDTree
        tree = cKDTree(np.column_stack([c.real, c.imag]))
        rmax = r.max()
        cand = tree.query_ball_point(np.column_stack([pts.real, pts.imag]), rmax)
        covered = np.array([any(abs(p - c[j]) < r[j] for j in js) for p, js in zip(pts, cand)])
        if not covered.all():
            first = pts[np.argmin(covered)]
            problems.append(f"covering: {int((~covered).sum())} sampled points uncovered (first at {first})")
    return problems
