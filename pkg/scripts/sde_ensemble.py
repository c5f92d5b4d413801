"""Ensemble statistics of the noisy diffusion on a bundled instance.

Prints, per checkpoint, the mean l1 distance to the moving equilibrium with its
standard error, the long-run limit sqrt(eta n w(V) / (2 gamma_2)), the variance of
the total-measure increment against eta t w(V), and the exceedance rates of the
dominating Ornstein-Uhlenbeck quantiles.
"""
import argparse

import numpy as np

from hyperlap.hypergraph import bundled
from hyperlap.spectral import gamma2
from hyperlap.stochastic import SdeConfig, ensemble_stats


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--instance", default="louis4")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--traj", type=int, default=200)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--checkpoints", default="1,5,20")
    args = p.parse_args()
    H = bundled(args.instance)
    g, _ = gamma2(H, seed=0)
    phi0 = np.zeros(H.n)
    phi0[0] = 1.0
    cfg = SdeConfig(args.eta, args.dt, args.t_end, args.traj, args.seed)
    st = ensemble_stats(H, phi0, cfg, [float(t) for t in args.checkpoints.split(",")], gamma2=g)
    print(f"{args.instance}: gamma_2={g:.6f}  l1 limit={st.l1_limit:.4f}  trajectories={st.n_trajectories}")
    print(f"{'t':>6} {'E l1':>9} {'SE':>8} {'var incr':>10} {'expected':>10} {'exceed q=0.9':>13} {'limit':>7}")
    for cp in st.checkpoints:
        print(
            f"{cp.t:6.2f} {cp.l1_mean:9.4f} {cp.l1_se:8.4f} {cp.mass_increment_var:10.4f} "
            f"{cp.mass_increment_var_expected:10.4f} {cp.exceedance[0.9]:13.3f} {cp.exceedance_limit[0.9]:7.3f}"
        )


if __name__ == "__main__":
    main()
