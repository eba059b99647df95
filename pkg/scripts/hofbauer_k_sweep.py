"""Mean first Gibbs time and growth slope for the truncated Hofbauer chain as K varies.

Compares the mean first Gibbs time with the mean first entrance to the zero
cylinder and with the Kac return time, for both the conformal and equilibrium
measures of the depth-12 truncation.
"""
import argparse
import math

from seqgibbs.gibbs import gibbs_time_growth, mean_entrance_time
from seqgibbs.potentials import Renewal
from seqgibbs.thermo import MarkovMeasure, sample_paths, solve, truncate


def cli():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--paths", type=int, default=1000)
    ap.add_argument("--length", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    psi, err = truncate(Renewal(params={"c": 2.0}), args.depth)
    eig = solve(psi)
    paths = sample_paths(eig, args.length + args.depth + 64, args.paths, args.seed)
    entrance, misses = mean_entrance_time(paths, 0, args.length)
    kac = 1.0 / MarkovMeasure(eig, "equilibrium").mass((0,))
    print(f"truncation error {err:.6f}  pressure {eig.pressure:.6f}")
    print(f"mean first entrance {entrance:.4f} (misses {misses})  Kac return {kac:.4f}")
    print(f"{'measure':<12}{'log K':>8}{'mean n1':>10}{'slope':>10}{'exceptional':>13}")
    for kind in ("conformal", "equilibrium"):
        mu = MarkovMeasure(eig, kind)
        for logK in (1e-9, 0.05, 0.1, 0.2, 0.5, err + 1e-9):
            g = gibbs_time_growth(paths, mu, psi, eig.pressure, math.exp(logK), args.length)
            print(f"{kind:<12}{logK:>8.3f}{g.mean_first:>10.4f}{g.mean_slope:>10.4f}{len(g.exceptional):>13d}")


if __name__ == "__main__":
    cli()
