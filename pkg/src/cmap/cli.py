"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 domain validation failure,
3 numerical failure (a diagnostic is printed to stderr).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geometry as geo
from . import io
from .geometry import DomainError
from .harmonic import CoverageError, PrecisionError
from .layout import LayoutError, build_layout, verify_layout
from .localsolve import ConstructionError, build_neighborhoods
from .relax import RelaxConfig, build_system, run_relaxation, valid_probes
from .riemann import CalibrationError, PathError, build_map
from .wos import CSV_HEADER, BoundaryData, WalkConfig, arc_data, cos_data, estimate, \
    estimate_punctured, upper_half

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (CoverageError, PrecisionError, LayoutError, ConstructionError, CalibrationError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    domain_path: str
    z0: complex = 0j
    n: int = 4
    seed: int = 0
    samples: int = 10_000
    rounds_k2: float = 20.0
    quad_m: int = 64

    def __post_init__(self):
        if not 1 <= self.n <= 24:
            raise UsageError("--bits must be in [1, 24]")
        if self.samples < 1:
            raise UsageError("--samples must be >= 1")


def parse_phi(text: str, domain: geo.DomainSpec) -> BoundaryData:
    """``zero``, ``one``, ``upper-half``, ``cos`` or ``arc:a,b:v``."""
    center = domain.shape.center if not domain.is_polygon else 0j
    if text == "zero":
        return BoundaryData.const(0.0)
    if text == "one":
        return BoundaryData.const(1.0)
    if text == "upper-half":
        return upper_half(center)
    if text == "cos":
        return cos_data(center)
    if text.startswith("arc:"):
        try:
            _, ab, v = text.split(":")
            a, b = (float(x) for x in ab.split(","))
            return arc_data(domain, a, b, float(v))
        except ValueError as exc:
            raise UsageError(f"bad arc text {text!r}") from exc
    raise UsageError(f"unknown phi text {text!r}")


def _point(text: str) -> complex:
    try:
        return io.parse_point(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cmap", description="Riemann maps and Dirichlet problems on planar domains.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, z0=True):
        sp.add_argument("--domain", required=True, help="domain JSON file")
        sp.add_argument("--bits", type=int, default=4, help="precision parameter n")
        if z0:
            sp.add_argument("--z0", type=_point, default=0j, help="base point X,Y")
        sp.add_argument("--k2", type=float, default=20.0, help="rounds/steps constant")
        sp.add_argument("--quad-m", type=int, default=64, help="quadrature nodes per patch")

    v = sub.add_parser("validate", help="check class membership of a domain")
    v.add_argument("--domain", required=True)

    w = sub.add_parser("wos", help="walk-on-spheres estimate")
    common(w, z0=False)
    w.add_argument("--z", type=_point, action="append", required=True, help="query point X,Y (repeatable)")
    w.add_argument("--phi", default="cos")
    w.add_argument("--samples", type=int, default=10_000)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--z0", type=_point, default=None,
                   help="estimate the punctured problem about z0 instead of phi")
    w.add_argument("--out", default=None)

    s = sub.add_parser("solve", help="relaxation solve of the punctured problem")
    common(s)
    s.add_argument("--grid", type=int, default=41)
    s.add_argument("--rounds", type=int, default=None)
    s.add_argument("--out", required=True, help="grid CSV re,im,value")
    s.add_argument("--residuals", default=None, help="per-round residual CSV")

    m = sub.add_parser("map", help="evaluate the Riemann map")
    common(m)
    m.add_argument("--at", type=_point, action="append", required=True)
    m.add_argument("--svg", default=None, help="image of a polar mesh")
    m.add_argument("--grid-out", default=None, help="CSV re,im,f_re,f_im on a grid")
    m.add_argument("--grid", type=int, default=21)

    lay = sub.add_parser("layout", help="build and dump the layout")
    common(lay)
    lay.add_argument("--svg", default=None)
    lay.add_argument("--json", default=None)
    lay.add_argument("--nbs-svg", default=None, help="neighborhood SVG")

    r = sub.add_parser("report", help="relaxation vs walk-on-spheres at probe points")
    common(r)
    r.add_argument("--probes", type=int, default=10)
    r.add_argument("--samples", type=int, default=10_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default=None)
    return p


def _threads() -> int:
    raw = os.environ.get("CMAP_THREADS")
    if raw is None:
        return 1
    try:
        k = int(raw)
    except ValueError as exc:
        raise UsageError(f"CMAP_THREADS must be an integer, got {raw!r}") from exc
    if k < 1:
        raise UsageError("CMAP_THREADS must be >= 1")
    return k


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _relax_cfg(args) -> RelaxConfig:
    return RelaxConfig(k2=args.k2, rounds=getattr(args, "rounds", None), quad_m=args.quad_m)


def _grid_points(pdomain: geo.PuncturedDomain, g: int) -> np.ndarray:
    ext = np.abs(geo.sample_boundary(pdomain.base, 512)).max()
    xs = np.linspace(-ext, ext, g)
    z = (xs[None, :] + 1j * xs[:, None]).ravel()
    margin = 2.0 ** -pdomain.n
    keep = (geo.distance_to_boundary(pdomain.base, z) > margin) & (np.abs(z - pdomain.z0) > margin)
    return z[keep]


def cmd_validate(args) -> int:
    report = geo.validate_domain(io.load_domain(args.domain))
    print(report)
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_wos(args) -> int:
    domain = io.load_domain(args.domain)
    RunConfig("wos", args.domain, n=args.bits, samples=args.samples, seed=args.seed)
    cfg = WalkConfig(n=args.bits, k2=args.k2, seed=args.seed, samples=args.samples)
    rows = [CSV_HEADER]
    if args.z0 is not None:
        pd = geo.PuncturedDomain(domain, args.z0, args.bits)
        ests = [(z, estimate_punctured(pd, z, cfg)) for z in args.z]
    else:
        phi = parse_phi(args.phi, domain)
        ests = [(z, estimate(domain, z, phi, cfg)) for z in args.z]
    rows += [e.csv_row(z) for z, e in ests]
    _emit("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    domain = io.load_domain(args.domain)
    RunConfig("solve", args.domain, args.z0, args.bits, quad_m=args.quad_m, rounds_k2=args.k2)
    system = build_system(domain, args.z0, args.bits, _relax_cfg(args))
    probes = valid_probes(system.pdomain, 200, seed=0)
    res = run_relaxation(system, probes=probes)
    z = _grid_points(system.pdomain, args.grid)
    vals = res.field(z) if z.size else np.zeros(0)
    io.write_csv(args.out, ["re", "im", "value"], zip(z.real, z.imag, vals))
    if args.residuals:
        io.write_csv(args.residuals, ["round", "residual"],
                     zip(range(1, len(res.residuals) + 1), res.residuals))
    print(f"rounds={len(res.residuals)} final_residual={io.fmt(res.residuals[-1])} "
          f"pieces={system.num_pieces}")
    return EXIT_OK


def cmd_map(args) -> int:
    domain = io.load_domain(args.domain)
    RunConfig("map", args.domain, args.z0, args.bits, quad_m=args.quad_m, rounds_k2=args.k2)
    rmap = build_map(domain, args.z0, args.bits, _relax_cfg(args))
    print("re,im,f_re,f_im")
    for w in args.at:
        f = rmap.evaluate(w).value
        print(",".join(io.fmt(x) for x in (w.real, w.imag, f.real, f.imag)))
    if args.grid_out:
        z = _grid_points(rmap.pdomain, args.grid)
        f = rmap(z)
        io.write_csv(args.grid_out, ["re", "im", "f_re", "f_im"], zip(z.real, z.imag, f.real, f.imag))
    if args.svg:
        io.map_mesh_svg(rmap, args.svg)
    return EXIT_OK


def cmd_layout(args) -> int:
    domain = io.load_domain(args.domain)
    RunConfig("layout", args.domain, args.z0, args.bits)
    system = build_system(domain, args.z0, args.bits, _relax_cfg(args))
    problems = verify_layout(system.layout, domain, system.nbs, system.pdomain)
    for prob in problems:
        print(f"violation: {prob}", file=sys.stderr)
    if args.svg:
        io.layout_svg(system.layout, domain, args.svg)
    if args.json:
        io.write_json(args.json, system.layout.to_json())
    if args.nbs_svg:
        io.neighborhoods_svg(system.nbs, domain, args.nbs_svg)
    print(f"interior_nodes={system.layout.size} neighborhoods={len(system.nbs)}")
    return EXIT_NUMERIC if problems else EXIT_OK


def cmd_report(args) -> int:
    domain = io.load_domain(args.domain)
    RunConfig("report", args.domain, args.z0, args.bits, samples=args.samples, seed=args.seed)
    system = build_system(domain, args.z0, args.bits, _relax_cfg(args))
    field = run_relaxation(system, probes=np.zeros(0, dtype=complex)).field
    probes = valid_probes(system.pdomain, args.probes, seed=args.seed)
    cfg = WalkConfig(n=args.bits, k2=args.k2, seed=args.seed, samples=args.samples)
    rows = []
    for z in probes:
        e = estimate_punctured(system.pdomain, z, cfg)
        v = float(field(z))
        rows.append((z.real, z.imag, v, e.mean, e.std_error, abs(v - e.mean)))
    text = io.csv_text(["re", "im", "relax", "wos", "std_error", "abs_diff"], rows)
    _emit(text, args.out)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "wos": cmd_wos, "solve": cmd_solve, "map": cmd_map,
            "layout": cmd_layout, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        _threads()
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, (DomainError, PathError)):
            print(f"domain error: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
