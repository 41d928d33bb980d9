"""Domain JSON, CSV and SVG input/output.

Every writer formats floats with 17 significant digits and uses ``\\n`` line
endings, so outputs are byte-identical for identical inputs.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import DomainSpec, Polygon, sample_boundary


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def parse_point(text: str) -> complex:
    """Parse ``"x,y"`` into a complex number."""
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected X,Y but got {text!r}")
    return complex(float(parts[0]), float(parts[1]))


def domain_from_dict(d: dict) -> DomainSpec:
    noise = float(d.get("oracle_noise", 0.0))
    kind = d.get("type")
    if kind == "polygon":
        return DomainSpec.polygon([complex(x, y) for x, y in d["vertices"]], noise)
    if kind == "disc":
        cx, cy = d.get("center", [0.0, 0.0])
        return DomainSpec.disc(complex(cx, cy), float(d["radius"]), noise)
    raise ValueError(f"unknown domain type {kind!r}")


def domain_to_dict(domain: DomainSpec) -> dict:
    shape = domain.shape
    if isinstance(shape, Polygon):
        return {"type": "polygon", "vertices": [[v.real, v.imag] for v in shape.array],
                "oracle_noise": domain.oracle_noise}
    return {"type": "disc", "center": [shape.center.real, shape.center.imag],
            "radius": shape.radius, "oracle_noise": domain.oracle_noise}


def load_domain(path) -> DomainSpec:
    with open(path) as fh:
        return domain_from_dict(json.load(fh))


def save_domain(domain: DomainSpec, path) -> None:
    Path(path).write_text(json.dumps(domain_to_dict(domain), indent=2) + "\n")


def csv_text(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(header, rows))


def write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# -- SVG ------------------------------------------------------------------------

class _Svg:
    """Minimal SVG canvas mapping the square [-1, 1]^2 to a pixel viewport."""

    def __init__(self, size: int = 800, extent: float = 1.0):
        self.size = size
        self.extent = extent
        self.items: list[str] = []

    def _xy(self, z: complex) -> tuple[float, float]:
        s = self.size / (2 * self.extent)
        return ((z.real + self.extent) * s, (self.extent - z.imag) * s)

    def circle(self, c: complex, r: float, stroke: str, width: float = 0.5, fill: str = "none"):
        x, y = self._xy(c)
        rr = r * self.size / (2 * self.extent)
        self.items.append(f'<circle cx="{x:.6f}" cy="{y:.6f}" r="{rr:.6f}" '
                          f'stroke="{stroke}" stroke-width="{width}" fill="{fill}"/>')

    def polyline(self, pts: Iterable[complex], stroke: str, width: float = 1.0, closed: bool = False):
        coords = " ".join("{:.6f},{:.6f}".format(*self._xy(complex(p))) for p in pts)
        tag = "polygon" if closed else "polyline"
        self.items.append(f'<{tag} points="{coords}" stroke="{stroke}" stroke-width="{width}" fill="none"/>')

    def text(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">')
        return "\n".join([head, *self.items, "</svg>"]) + "\n"

    def save(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.text())


def _outline(svg: _Svg, domain: DomainSpec) -> None:
    svg.polyline(sample_boundary(domain, 720), "black", 1.0, closed=True)


def layout_svg(layout, domain: DomainSpec, path) -> None:
    """Interior nodes blue, boundary cores red, puncture annulus green."""
    colors = {"interior": "blue", "boundary-core": "red", "puncture-annulus": "green"}
    svg = _Svg()
    _outline(svg, domain)
    for node in layout.nodes:
        svg.circle(node.disc.center, node.disc.radius, colors[node.kind])
    svg.save(path)


def neighborhoods_svg(nbs, domain: DomainSpec, path) -> None:
    """Cores (red), 5r discs (orange) and covering balls (grey)."""
    svg = _Svg()
    _outline(svg, domain)
    for nb in nbs:
        svg.circle(nb.z, 5 * nb.r, "orange", 0.3)
        svg.circle(nb.z, nb.r, "red")
        for ball in nb.covering:
            svg.circle(ball.center, ball.radius, "grey", 0.2)
    svg.save(path)


def map_mesh_svg(rmap, path, radii: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5),
                 spokes: int = 16, points: int = 64) -> None:
    """Image under f of a polar mesh about z0, drawn in the unit disc."""
    from .geometry import distance_to_boundary
    pd = rmap.pdomain
    svg = _Svg(extent=1.05)
    svg.circle(0j, 1.0, "black", 1.0)

    def valid(z):
        return (distance_to_boundary(pd.base, z) > 2.0 ** -pd.n) & (np.abs(z - pd.z0) > 2.0 ** -pd.n)

    for r in radii:
        ring = pd.z0 + r * np.exp(2j * math.pi * np.arange(points + 1) / points)
        ok = valid(ring)
        if ok.all():
            svg.polyline(rmap(ring), "blue", 0.8)
    for k in range(spokes):
        ray = pd.z0 + np.linspace(2.0 ** (1 - pd.n), max(radii), points) * np.exp(2j * math.pi * k / spokes)
        ray = ray[valid(ray)]
        if ray.size > 1:
            svg.polyline(rmap(ray), "red", 0.8)
    svg.save(path)
