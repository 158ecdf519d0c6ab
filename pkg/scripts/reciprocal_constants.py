"""Estimate s, r and the minimal enrichment b of x -> 1/x on [1/2, 2] at several densities."""

import argparse

from fixpoint.analysis import (
    check_quasi_nonexpansive,
    derive_mu,
    estimate_lipschitz,
    estimate_pseudocontractive_r,
    minimal_enrichment_b,
)
from fixpoint.operators import reciprocal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--densities", type=int, nargs="+", default=[50, 100, 200, 400, 800])
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    T = reciprocal()
    print(f"{'density':>8} {'s':>10} {'r':>10} {'min_b':>10} {'mu':>10}")
    for n in args.densities:
        s = estimate_lipschitz(T, n, args.seed)
        r = estimate_pseudocontractive_r(T, n, args.seed)
        b = minimal_enrichment_b(T, n, args.seed)
        print(f"{n:>8} {s:>10.6f} {r:>10.6f} {b:>10.6f} {derive_mu(b):>10.6f}")
    q = check_quasi_nonexpansive(T, [1.0], args.densities[-1], args.seed)
    print(f"quasi-nonexpansive w.r.t. 1: {q.holds} (witness {q.witness}, margin {q.margin:.3g})")


if __name__ == "__main__":
    main()
