"""Rounds needed by the relaxation to settle within 2^{-n-2}, as a function of n.

Prints one CSV row per n and the log-log slope of rounds against n.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from cmap.geometry import DomainSpec
from cmap.relax import RelaxConfig, build_system, run_relaxation, valid_probes


@dataclass
class Experiment:
    n_min: int = 2
    n_max: int = 6
    probes: int = 100
    k2: float = 20.0
    seed: int = 1


def settle_rounds(n: int, exp: Experiment) -> tuple[int, float]:
    system = build_system(DomainSpec.disc(), 0j, n, RelaxConfig(k2=exp.k2))
    res = run_relaxation(system, probes=valid_probes(system.pdomain, exp.probes, seed=exp.seed), record=True)
    gap = np.max(np.abs(res.history - res.history[-1]), axis=1)
    above = np.flatnonzero(gap > 2.0 ** (-n - 2))
    return (int(above[-1] + 1) if above.size else 0), float(res.residuals[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=6)
    ap.add_argument("--k2", type=float, default=20.0)
    args = ap.parse_args()
    exp = Experiment(n_max=args.n_max, k2=args.k2)
    ns, counts = [], []
    print("n,rounds,final_residual")
    for n in range(exp.n_min, exp.n_max + 1):
        r, last = settle_rounds(n, exp)
        ns.append(n)
        counts.append(r)
        print(f"{n},{r},{last:.3g}", flush=True)
    print(f"slope,{np.polyfit(np.log(ns), np.log(counts), 1)[0]:.3f}")


if __name__ == "__main__":
    main()
