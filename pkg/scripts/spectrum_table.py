"""Procedural minimizers gamma_1..gamma_k of the bundled instances next to the exact oracle.

Shows the two nested5 branches reached by different seeds and the eigen residual
of each minimizer (small for k = 2, not necessarily for k >= 3).
"""
import argparse

import numpy as np

from hyperlap.hypergraph import BUNDLED, bundled
from hyperlap.oracle import exact_gamma
from hyperlap.spectral import eigen_residual, procedural_minimizers


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--restarts", type=int, default=64)
    args = p.parse_args()
    print(f"{'instance':10} {'seed':>4} {'k':>2} {'gamma_k':>14} {'oracle':>14} {'residual':>10}  f_k (weighted, max-normalized)")
    for name in BUNDLED:
        H = bundled(name)
        for seed in (int(s) for s in args.seeds.split(",")):
            res = procedural_minimizers(H, args.k, restarts=args.restarts, seed=seed, oracle_check=False)
            F = res.weighted_vectors(H)
            for k in range(2, args.k + 1):
                exact, _ = exact_gamma(H, F[: k - 1])
                f = F[k - 1] / np.abs(F[k - 1]).max()
                r = eigen_residual(H, res.vectors[k - 1], res.gammas[k - 1])
                print(f"{name:10} {seed:>4} {k:>2} {res.gammas[k - 1]:14.10f} {exact:14.10f} {r:10.2e}  {np.round(f, 4)}")


if __name__ == "__main__":
    main()
