"""Points, inner products and the bounded convex domains iterations live on.

Points are plain 1-D float64 arrays; batches of points are ``(m, n)``
arrays. A :class:`Domain` is an interval, an axis-aligned box or a closed
Euclidean ball, each with an exact metric projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# cap on the number of pairs drawn from the grid part of a sample
MAX_GRID_PAIRS = 250_000


class DimensionError(ValueError):
    """Two objects that should share a dimension do not."""


class DomainViolation(ValueError):
    """A point lies outside a domain by more than the allowed tolerance."""

    def __init__(self, point, distance):
        self.point = np.asarray(point, dtype=float)
        self.distance = float(distance)
        super().__init__(
            f"point {self.point.tolist()} is {self.distance:.3e} outside the domain"
        )


def as_point(x) -> np.ndarray:
    """Coerce a scalar or sequence to a finite 1-D float array."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"a point must be a non-empty vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p.tolist()}")
    return p


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def inner(a, b) -> float:
    a, b = as_point(a), as_point(b)
    _check_dims(a, b)
    return float(np.dot(a, b))


def norm(a) -> float:
    return math.sqrt(inner(a, a))


def row_inner(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise inner products of two ``(m, n)`` batches."""
    return np.einsum("ij,ij->i", A, B)


def row_norm(A: np.ndarray) -> np.ndarray:
    return np.sqrt(row_inner(A, A))


@dataclass(frozen=True)
class Domain:
    """Closed bounded convex subset of R^n.

    ``kind`` is ``"interval"``, ``"box"`` or ``"ball"``. Intervals and boxes
    use ``low``/``high``; balls use ``center``/``radius``. Build instances
    with :meth:`interval`, :meth:`box` or :meth:`ball`.
    """

    kind: str
    low: tuple = ()
    high: tuple = ()
    center: tuple = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind in ("interval", "box"):
            if len(self.low) != len(self.high) or not self.low:
                raise ValueError("low and high must be non-empty and of equal length")
            if self.kind == "interval" and len(self.low) != 1:
                raise ValueError("an interval is one-dimensional")
            for lo, hi in zip(self.low, self.high):
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise ValueError(f"empty or unbounded axis [{lo}, {hi}]")
        elif self.kind == "ball":
            if not self.center or not all(math.isfinite(c) for c in self.center):
                raise ValueError("ball center must be a finite non-empty vector")
            if not (math.isfinite(self.radius) and self.radius > 0):
                raise ValueError(f"ball radius must be positive, got {self.radius}")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        return cls("interval", low=(float(a),), high=(float(b),))

    @classmethod
    def box(cls, low: Sequence[float], high: Sequence[float]) -> "Domain":
        return cls("box", low=tuple(map(float, low)), high=tuple(map(float, high)))

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "Domain":
        return cls("ball", center=tuple(map(float, as_point(center))), radius=float(radius))

    @property
    def dim(self) -> int:
        return len(self.center) if self.kind == "ball" else len(self.low)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "ball":
            c = np.array(self.center)
            return c - self.radius, c + self.radius
        return np.array(self.low), np.array(self.high)

    def grid_spacing(self, density: int) -> float:
        lo, hi = self.bounding_box()
        return float(np.max(hi - lo)) / (density - 1)

    def project(self, x) -> np.ndarray:
        """Nearest point of the domain; accepts a point or an ``(m, n)`` batch."""
        X = np.asarray(x, dtype=float)
        if X.ndim == 0:
            X = X.reshape(1)
        if X.shape[-1] != self.dim:
            raise DimensionError(f"dimension mismatch: {X.shape[-1]} vs {self.dim}")
        if self.kind == "ball":
            c = np.array(self.center)
            offset = X - c
            dist = np.linalg.norm(offset, axis=-1, keepdims=True)
            scale = np.where(dist > self.radius, self.radius / np.where(dist > 0, dist, 1.0), 1.0)
            return c + offset * scale
        return np.clip(X, self.low, self.high)

    def distance(self, x) -> np.ndarray | float:
        X = np.asarray(x, dtype=float)
        d = np.linalg.norm(X - self.project(X), axis=-1)
        return float(d) if np.ndim(d) == 0 else d

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.distance(x) <= tol))

    def center_point(self) -> np.ndarray:
        lo, hi = self.bounding_box()
        return (lo + hi) / 2

    def to_dict(self) -> dict:
        if self.kind == "interval":
            return {"kind": "interval", "low": self.low[0], "high": self.high[0]}
        if self.kind == "box":
            return {"kind": "box", "low": list(self.low), "high": list(self.high)}
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        kind = d.get("kind")
        if kind == "interval":
            return cls.interval(d["low"], d["high"])
        if kind == "box":
            return cls.box(d["low"], d["high"])
        if kind == "ball":
            return cls.ball(d["center"], d["radius"])
        raise ValueError(f"unknown domain kind {kind!r}")


def project(d: Domain, x) -> np.ndarray:
    x = as_point(x)
    return d.project(x)


def grid_lattice(d: Domain, density: int) -> tuple[np.ndarray, np.ndarray]:
    """Regular grid over the bounding box of ``d``.

    Returns ``(points, inside)`` where ``points`` has shape
    ``(density,) * n + (n,)`` and ``inside`` is the boolean membership mask
    (all true for intervals and boxes).
    """
    if density < 2:
        raise ValueError(f"density must be at least 2, got {density}")
    lo, hi = d.bounding_box()
    axes = [np.linspace(lo[i], hi[i], density) for i in range(d.dim)]
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    if d.kind == "ball":
        c = np.array(d.center)
        inside = np.linalg.norm(points - c, axis=-1) <= d.radius
    else:
        inside = np.ones(points.shape[:-1], dtype=bool)
    return points, inside


def grid_points(d: Domain, density: int) -> np.ndarray:
    points, inside = grid_lattice(d, density)
    return points[inside]


def _uniform_points(d: Domain, m: int, seed: int) -> np.ndarray:
    # separate child streams keep the first k draws identical for every m >= k
    main_rng, radius_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)
    )
    if d.kind == "ball":
        g = main_rng.standard_normal((m, d.dim))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        r = d.radius * radius_rng.random(m) ** (1.0 / d.dim)
        return d.project(np.array(d.center) + g * r[:, None])
    lo, hi = d.bounding_box()
    return lo + main_rng.random((m, d.dim)) * (hi - lo)


def sample_points(d: Domain, density: int, seed: int) -> np.ndarray:
    """Grid of ``density`` points per axis followed by ``density**2`` random points.

    Deterministic in ``(density, seed)``. Every row lies inside ``d``.
    """
    grid = grid_points(d, density)
    return np.concatenate([grid, _uniform_points(d, density**2, seed)])


def sample_pairs(d: Domain, density: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(X[k], Y[k])`` used for supremum estimates over ``d``.

    The grid contributes every distinct pair when there are at most
    ``MAX_GRID_PAIRS`` of them, otherwise all lattice-neighbour pairs plus
    a seeded subsample. The random part contributes consecutive pairs.
    """
    points, inside = grid_lattice(d, density)
    grid = points[inside]
    g = len(grid)
    if g * (g - 1) // 2 <= MAX_GRID_PAIRS:
        i, j = np.triu_indices(g, k=1)
        gx, gy = grid[i], grid[j]
    else:
        index = np.full(inside.shape, -1)
        index[inside] = np.arange(g)
        xs, ys = [], []
        for axis in range(d.dim):
            a = np.moveaxis(index, axis, 0)
            left, right = a[:-1].ravel(), a[1:].ravel()
            keep = (left >= 0) & (right >= 0)
            xs.append(left[keep])
            ys.append(right[keep])
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(3)[2])
        xs.append(rng.integers(0, g, MAX_GRID_PAIRS))
        ys.append(rng.integers(0, g, MAX_GRID_PAIRS))
        gx, gy = grid[np.concatenate(xs)], grid[np.concatenate(ys)]
    rand = _uniform_points(d, density**2, seed)
    return np.concatenate([gx, rand[:-1]]), np.concatenate([gy, rand[1:]])


def random_pairs(d: Domain, m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``m`` independent uniform pairs in ``d``."""
    pts = _uniform_points(d, 2 * m, seed)
    return pts[0::2], pts[1::2]


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    """Hausdorff distance between two finite point sets (rows)."""
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    if len(A) == 0 and len(B) == 0:
        return 0.0
    if len(A) == 0 or len(B) == 0:
        return math.inf
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))
