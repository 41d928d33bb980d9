"""Layout size and verification status for the disc and the square across n."""

import argparse

from cmap.geometry import DomainSpec, PuncturedDomain, square
from cmap.layout import build_layout, verify_layout
from cmap.localsolve import build_neighborhoods


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=7)
    args = ap.parse_args()
    print("domain,n,interior_nodes,neighborhoods,violations")
    for name, dom in (("disc", DomainSpec.disc()), ("square", square())):
        for n in range(2, args.n_max + 1):
            nbs = build_neighborhoods(dom, n)
            pd = PuncturedDomain(dom, 0j, n)
            layout = build_layout(dom, nbs, pd, n)
            problems = verify_layout(layout, dom, nbs, pd)
            print(f"{name},{n},{layout.size},{len(nbs)},{len(problems)}", flush=True)


if __name__ == "__main__":
    main()
