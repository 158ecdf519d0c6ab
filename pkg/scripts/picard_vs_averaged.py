"""Picard iteration against averaged iteration on the reflection and the quarter rotation."""

import math

import numpy as np

from fixpoint.iteration import IterationConfig, compare_rates, run
from fixpoint.operators import affine_reflection, rotation

CASES = [
    ("1 - x on [0, 1]", affine_reflection(), [1.0], [0.5]),
    ("quarter rotation on the unit disc", rotation(math.pi / 2), [1.0, 0.0], [0.0, 0.0]),
]

for name, T, x0, p in CASES:
    print(name)
    for lam in (1.0, 0.5, 0.25):
        traj = run(T, IterationConfig(lam, x0))
        err = np.linalg.norm(traj.limit - np.asarray(p)) if traj.limit is not None else float("nan")
        extra = f"period {traj.period}" if traj.period else f"|x - p| = {err:.2e}"
        print(f"  lambda={lam:<5} {traj.status:<16} n={traj.iterations:<4} {extra}")
    a = run(T, IterationConfig(0.5, x0))
    b = run(T, IterationConfig(0.25, x0))
    v = compare_rates(a, b, p)
    print(f"  0.5 vs 0.25: faster={v.faster}, crossovers={v.crossover_count}")
