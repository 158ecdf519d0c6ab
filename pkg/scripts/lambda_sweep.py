"""Iteration counts of the Krasnoselskij scheme on x -> 1/x over a sweep of lambda."""

import argparse

import numpy as np

from fixpoint.analysis import derive_mu, minimal_enrichment_b
from fixpoint.iteration import IterationConfig, run
from fixpoint.operators import reciprocal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--x0", type=float, default=2.0)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--steps", type=int, default=20)
    args = ap.parse_args()

    T = reciprocal()
    mu = derive_mu(minimal_enrichment_b(T))
    print(f"mu = {mu:.6f}, guaranteed lambda in (0, {mu:.6f})")
    print(f"{'lambda':>8} {'status':>18} {'iters':>6}  region")
    for lam in np.linspace(1.0 / args.steps, 1.0, args.steps):
        traj = run(T, IterationConfig(float(lam), [args.x0], tol=args.tol))
        region = "guaranteed" if lam < mu else "outside"
        print(f"{lam:>8.3f} {traj.status:>18} {traj.iterations:>6}  {region}")


if __name__ == "__main__":
    main()
