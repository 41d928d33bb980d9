"""Build the Riemann map of a domain and write the image of a polar mesh as SVG.

Also reports the derivative at z0 and the Cauchy-Riemann residual at a few
probe points.
"""

import argparse

from cmap import io
from cmap.geometry import DomainSpec, square
from cmap.relax import valid_probes
from cmap.riemann import build_map, conformality_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--domain", default="square", help="'disc', 'square' or a domain JSON file")
    ap.add_argument("--z0", type=io.parse_point, default=0j)
    ap.add_argument("--bits", type=int, default=4)
    ap.add_argument("--out", default="map.svg")
    args = ap.parse_args()
    if args.domain == "disc":
        dom = DomainSpec.disc()
    elif args.domain == "square":
        dom = square()
    else:
        dom = io.load_domain(args.domain)
    rmap = build_map(dom, args.z0, args.bits)
    io.map_mesh_svg(rmap, args.out)
    probes = valid_probes(rmap.pdomain, 10, seed=0, margin=2.0 ** -args.bits)
    print(f"f'(z0) = {rmap.derivative_at_z0:.6g}")
    print(f"CR residual = {conformality_check(rmap, probes):.3g}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
