"""Sampled estimates of the contractivity constants and the step-size formulas.

Every estimator is a supremum (or a feasible-set intersection) over the
finite pair set from :func:`fixpoint.geometry.sample_pairs`, so estimates
approach the true constants from below as the density grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import (
    as_point,
    grid_lattice,
    row_inner,
    row_norm,
    sample_pairs,
    sample_points,
)
from .operators import OperatorSpec, evaluate_many, fixed_point_residual

# pairs closer than this are skipped (the defining inequalities are 0 <= 0 there)
MIN_PAIR_DIST = 1e-9
INEQ_TOL = 1e-12
# normalised alpha below this counts as zero in the feasibility test
ALPHA_TOL = 1e-12
QUASI_PRE_TOL = 1e-9

DEFAULT_DENSITY = 200
DEFAULT_SEED = 42


class PairData(NamedTuple):
    X: np.ndarray
    Y: np.ndarray
    d: np.ndarray  # x - y
    delta: np.ndarray  # Tx - Ty
    dd: np.ndarray  # ||x - y||^2


def pair_data(T: OperatorSpec, X: np.ndarray, Y: np.ndarray) -> PairData:
    d = X - Y
    dd = row_inner(d, d)
    keep = dd >= MIN_PAIR_DIST**2
    X, Y, d, dd = X[keep], Y[keep], d[keep], dd[keep]
    if len(X) == 0:
        raise ValueError("degenerate domain: no pair of distinct sample points")
    delta = evaluate_many(T, X) - evaluate_many(T, Y)
    return PairData(X, Y, d, delta, dd)


def sampled_pairs(T: OperatorSpec, density: int, seed: int) -> PairData:
    if density < 2:
        raise ValueError(f"density must be at least 2, got {density}")
    X, Y = sample_pairs(T.domain, density, seed)
    return pair_data(T, X, Y)


def lipschitz_ratios(pd: PairData) -> np.ndarray:
    return row_norm(pd.delta) / np.sqrt(pd.dd)


def estimate_lipschitz(T: OperatorSpec, density: int = DEFAULT_DENSITY, seed: int = DEFAULT_SEED) -> float:
    """Largest ``||Tx - Ty|| / ||x - y||`` over the sampled pairs."""
    return float(np.max(lipschitz_ratios(sampled_pairs(T, density, seed))))


def estimate_pseudocontractive_r(
    T: OperatorSpec, density: int = DEFAULT_DENSITY, seed: int = DEFAULT_SEED
) -> float:
    """Largest ``<Tx - Ty, x - y> / ||x - y||^2`` over the sampled pairs.

    May be negative; any ``r`` above it satisfies the pseudocontractivity
    inequality on the sample.
    """
    pd = sampled_pairs(T, density, seed)
    return float(np.max(row_inner(pd.delta, pd.d) / pd.dd))


def enrichment_slack_direct(pd: PairData, b: float) -> np.ndarray:
    """``(b+1)||x-y|| - ||b(x-y) + Tx - Ty||``, nonnegative where the pair satisfies b-enrichment."""
    return (b + 1.0) * np.sqrt(pd.dd) - row_norm(b * pd.d + pd.delta)


def enrichment_slack_inner(pd: PairData, b: float) -> np.ndarray:
    """Same condition in inner-product form, ``(2b+1)||d||^2 - 2b<D, d> - ||D||^2``."""
    return (2.0 * b + 1.0) * pd.dd - 2.0 * b * row_inner(pd.delta, pd.d) - row_inner(pd.delta, pd.delta)


class EnrichmentVerdict(NamedTuple):
    holds: bool
    witness: tuple | None  # (x, y) of the worst violating pair
    margin: float  # smallest slack over the sample, relative to ||x - y||


def check_enriched(
    T: OperatorSpec, b: float, density: int = DEFAULT_DENSITY, seed: int = DEFAULT_SEED
) -> EnrichmentVerdict:
    if b < 0:
        raise ValueError(f"b must be nonnegative, got {b}")
    pd = sampled_pairs(T, density, seed)
    slack = enrichment_slack_direct(pd, b)
    worst = int(np.argmin(slack / np.sqrt(pd.dd)))
    margin = float(slack[worst] / math.sqrt(pd.dd[worst]))
    if slack[worst] >= -INEQ_TOL:
        return EnrichmentVerdict(True, None, margin)
    return EnrichmentVerdict(False, (pd.X[worst].copy(), pd.Y[worst].copy()), margin)


class BInterval(NamedTuple):
    lower: float  # largest per-pair lower bound (may be negative)
    upper: float  # smallest per-pair upper bound
    empty_pair: bool  # some pair admits no b at all


def enrichment_bounds(pd: PairData) -> BInterval:
    """Intersect the per-pair feasible sets ``{b : 2 alpha b <= beta}``.

    With ``d = x - y`` and ``D = Tx - Ty``, ``alpha = <D, d> - ||d||^2`` and
    ``beta = ||d||^2 - ||D||^2``; both are normalised by ``||d||^2``.
    """
    alpha = (row_inner(pd.delta, pd.d) - pd.dd) / pd.dd
    beta = (pd.dd - row_inner(pd.delta, pd.delta)) / pd.dd
    zero = np.abs(alpha) <= ALPHA_TOL
    neg, pos = (alpha < 0) & ~zero, (alpha > 0) & ~zero
    lower = float(np.max(beta[neg] / (2 * alpha[neg]))) if neg.any() else -math.inf
    upper = float(np.min(beta[pos] / (2 * alpha[pos]))) if pos.any() else math.inf
    empty = bool(np.any(beta[zero] < -INEQ_TOL))
    return BInterval(lower, upper, empty)


def minimal_b_from_bounds(bounds: BInterval) -> float:
    # lower bounds within rounding of zero come from nonexpansive pairs
    b = bounds.lower if bounds.lower > INEQ_TOL else 0.0
    if bounds.empty_pair or b > bounds.upper + INEQ_TOL:
        return math.inf
    return b


def minimal_enrichment_b(
    T: OperatorSpec, density: int = DEFAULT_DENSITY, seed: int = DEFAULT_SEED
) -> float:
    """Smallest ``b >= 0`` making ``T`` b-enriched nonexpansive on the sample.

    Returns ``math.inf`` when no ``b`` works (the operator is not enriched
    nonexpansive), which callers should treat as infeasible rather than an
    error.
    """
    return minimal_b_from_bounds(enrichment_bounds(sampled_pairs(T, density, seed)))


def is_infeasible(b: float) -> bool:
    return math.isinf(b)


class QuasiVerdict(NamedTuple):
    holds: bool
    witness: np.ndarray | None
    margin: float


def check_quasi_nonexpansive(
    T: OperatorSpec, p, density: int = DEFAULT_DENSITY, seed: int = DEFAULT_SEED
) -> QuasiVerdict:
    p = as_point(p)
    res = fixed_point_residual(T, p)
    if res > QUASI_PRE_TOL:
        raise ValueError(f"{p.tolist()} is not a fixed point (residual {res:.3e})")
    X = sample_points(T.domain, density, seed)
    slack = row_norm(X - p) - row_norm(evaluate_many(T, X) - p)
    worst = int(np.argmin(slack))
    if slack[worst] >= -INEQ_TOL:
        return QuasiVerdict(True, None, float(slack[worst]))
    return QuasiVerdict(False, X[worst].copy(), float(slack[worst]))


@dataclass
class FixedPointSet:
    points: np.ndarray
    tol: float
    spacing: float

    def __len__(self):
        return len(self.points)


def _local_minima(res: np.ndarray) -> np.ndarray:
    """Mask of lattice sites whose residual is <= every axis neighbour's."""
    mask = np.isfinite(res)
    for axis in range(res.ndim):
        r = np.moveaxis(res, axis, 0)
        m = np.moveaxis(mask, axis, 0)
        m[1:] &= r[1:] <= r[:-1]
        m[:-1] &= r[:-1] <= r[1:]
    return mask


GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a: float, b: float, xtol: float = 1e-15, max_iter: int = 200) -> float:
    """Minimiser of a unimodal ``f`` on ``[a, b]`` to absolute tolerance ``xtol``."""
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def _refine(T: OperatorSpec, x: np.ndarray, h: float, tol: float, sweeps: int = 60) -> np.ndarray:
    """Coordinate-wise bounded minimisation of the residual around ``x``."""
    dom = T.domain
    lo, hi = dom.bounding_box()

    def residual(z):
        return float(np.linalg.norm(evaluate_many(T, z[None, :])[0] - z))

    x = x.copy()
    best = residual(x)
    radius = h
    for _ in range(sweeps):
        before = best
        for i in range(dom.dim):
            a, b = max(lo[i], x[i] - radius), min(hi[i], x[i] + radius)

            def along(t, i=i):
                z = x.copy()
                z[i] = t
                return residual(dom.project(z))

            t = golden_section(along, a, b)
            if along(t) < best:
                x[i] = t
                x = dom.project(x)
                best = residual(x)
        if best <= tol * 1e-3 or best >= before:
            break
        radius = max(radius / 2, 1e-12)
    return x


def probe_fixed_points(T: OperatorSpec, density: int = DEFAULT_DENSITY, tol: float = 1e-9) -> FixedPointSet:
    """Grid scan for ``Fix(T)``.

    Grid sites with residual at most ``tol`` are kept as they are; sites that
    are local residual minima are refined by coordinate-wise minimisation and
    kept if the refined residual is at most ``tol``. Results closer than the
    grid spacing are merged.
    """
    if density < 2 or not tol > 0:
        raise ValueError("density must be >= 2 and tol positive")
    lattice, inside = grid_lattice(T.domain, density)
    h = T.domain.grid_spacing(density)
    res = np.full(inside.shape, np.inf)
    pts = lattice[inside]
    res[inside] = row_norm(evaluate_many(T, pts) - pts)

    hits = [p for p in lattice[inside & (res <= tol)]]
    for x in lattice[_local_minima(res) & (res > tol)]:
        z = _refine(T, x, h, tol)
        if fixed_point_residual(T, z) <= tol:
            hits.append(z)

    kept: list[np.ndarray] = []
    for z in hits:
        if not kept or np.min(np.linalg.norm(np.array(kept) - z, axis=1)) >= h * (1 - 1e-9):
            kept.append(z)
    points = np.array(kept) if kept else np.empty((0, T.domain.dim))
    return FixedPointSet(points, tol, h)


# closed-form step-size and enrichment formulas


def derive_mu(b: float) -> float:
    """Averaging weight ``1/(b+1)`` that turns a b-enriched map into a nonexpansive one."""
    if not b >= 0:
        raise ValueError(f"b must be nonnegative, got {b}")
    if math.isinf(b):
        raise ValueError("no averaging weight exists for an infeasible enrichment")
    return 1.0 / (b + 1.0)


def _denominator(r: float, s: float) -> float:
    if not r < 1:
        raise ValueError(f"pseudocontractivity constant must be < 1, got r={r}")
    if s < 0:
        raise ValueError(f"Lipschitz constant must be nonnegative, got s={s}")
    den = 1.0 - 2.0 * r + s * s
    if not den > 0:
        raise ValueError(f"1 - 2r + s^2 = {den} is not positive")
    return den


def lambda_admissible_range(r: float, s: float) -> tuple[float, float]:
    """Open interval ``(0, 2(1-r)/(1-2r+s^2))`` of convergent step weights."""
    return (0.0, 2.0 * (1.0 - r) / _denominator(r, s))


def optimal_lambda(r: float, s: float) -> float:
    """Step weight ``(1-r)/(1-2r+s^2)``; valid when ``r <= s``."""
    den = _denominator(r, s)
    if r > s:
        raise ValueError(f"optimal step needs r <= s, got r={r}, s={s}")
    return (1.0 - r) / den


def enrichment_bound_from_r_s(r: float, s: float) -> float:
    """Sufficient enrichment constant ``max(0, (s^2-1)/(2(1-r)))``."""
    if not r < 1:
        raise ValueError(f"pseudocontractivity constant must be < 1, got r={r}")
    return max(0.0, (s * s - 1.0) / (2.0 * (1.0 - r)))


# classification


@dataclass
class ClassificationReport:
    lipschitz_s: float
    pseudo_r: float
    min_b: float  # math.inf when infeasible
    mu: float | None
    nonexpansive: bool
    nonexpansive_witness: tuple | None
    quasi_nonexpansive: bool | None
    quasi_witness: np.ndarray | None
    quasi_fixed_point: np.ndarray | None
    sample_density: int
    seed: int
    tolerance: float = 1e-12
    fixed_points: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    @property
    def feasible(self) -> bool:
        return not math.isinf(self.min_b)


def classify(
    T: OperatorSpec,
    density: int = DEFAULT_DENSITY,
    seed: int = DEFAULT_SEED,
    fixed_point=None,
    tolerance: float = 1e-12,
    probe_tol: float = 1e-9,
) -> ClassificationReport:
    """Estimate ``s``, ``r`` and the minimal ``b`` on one shared pair sample.

    Quasi-nonexpansiveness is tested against ``fixed_point`` if given,
    otherwise against every probed fixed point (the first failure is
    reported); it is ``None`` when no fixed point is found.
    """
    pd = sampled_pairs(T, density, seed)
    ratios = lipschitz_ratios(pd)
    k = int(np.argmax(ratios))
    s = float(ratios[k])
    r = float(np.max(row_inner(pd.delta, pd.d) / pd.dd))
    b = minimal_b_from_bounds(enrichment_bounds(pd))
    nonexp = s <= 1.0 + tolerance
    witness = None if nonexp else (pd.X[k].copy(), pd.Y[k].copy())

    if fixed_point is not None:
        fps = np.atleast_2d(as_point(fixed_point))
    else:
        fps = probe_fixed_points(T, density, probe_tol).points
    quasi, q_witness, q_point = None, None, None
    for p in fps:
        v = check_quasi_nonexpansive(T, p, density, seed)
        quasi, q_point = v.holds, p
        if not v.holds:
            q_witness = v.witness
            break

    return ClassificationReport(
        lipschitz_s=s,
        pseudo_r=r,
        min_b=b,
        mu=None if math.isinf(b) else derive_mu(b),
        nonexpansive=nonexp,
        nonexpansive_witness=witness,
        quasi_nonexpansive=quasi,
        quasi_witness=q_witness,
        quasi_fixed_point=q_point,
        sample_density=density,
        seed=seed,
        tolerance=tolerance,
        fixed_points=fps,
    )
