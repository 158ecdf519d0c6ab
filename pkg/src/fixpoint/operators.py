"""Self-maps of a domain: the example gallery and the averaging transforms.

An :class:`OperatorSpec` is pure structure (kind, parameters, inner specs,
domain) so it can be printed and round-tripped through the JSON config.
Evaluation works on single points and on ``(m, n)`` batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Domain, DomainViolation, DimensionError, as_point, sample_points

KINDS = ("reciprocal", "affine_reflection", "rotation", "affine", "scaled", "averaged", "composite")

# images may leave the domain by at most this much at construction time
SELF_MAP_TOL = 1e-9
# inputs closer than this to the domain are projected in, farther ones rejected
DOMAIN_TOL = 1e-9
VALIDATION_DENSITY = 20


@dataclass(frozen=True)
class EnrichmentParams:
    """Enrichment constant ``b`` and the matching averaging weight ``mu = 1/(b+1)``."""

    b: float
    mu: float

    def __post_init__(self):
        if not (self.b >= 0 and math.isfinite(self.b)):
            raise ValueError(f"b must be finite and >= 0, got {self.b}")
        if self.mu != 1.0 / (self.b + 1.0):
            raise ValueError(f"mu={self.mu} does not equal 1/(b+1) for b={self.b}")

    @classmethod
    def from_b(cls, b: float) -> "EnrichmentParams":
        if not b >= 0:
            raise ValueError(f"b must be >= 0, got {b}")
        return cls(float(b), 1.0 / (float(b) + 1.0))

    @classmethod
    def from_mu(cls, mu: float) -> "EnrichmentParams":
        if not 0 < mu <= 1:
            raise ValueError(f"mu must lie in (0, 1], got {mu}")
        b = 1.0 / mu - 1.0
        return cls(b, 1.0 / (b + 1.0))


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    kind: str
    domain: Domain
    params: dict = field(default_factory=dict)
    inner: tuple = ()
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        p = self.params
        if self.kind == "rotation":
            if self.domain.dim != 2:
                raise DimensionError("rotation needs a two-dimensional domain")
            if len(p.get("center", (0.0, 0.0))) != 2:
                raise DimensionError("rotation center must be two-dimensional")
        elif self.kind == "affine":
            A = np.asarray(p["matrix"], dtype=float)
            c = np.asarray(p.get("offset", np.zeros(self.domain.dim)), dtype=float)
            if A.shape != (self.domain.dim, self.domain.dim) or c.shape != (self.domain.dim,):
                raise DimensionError(
                    f"affine map needs a {self.domain.dim}x{self.domain.dim} matrix and offset"
                )
        elif self.kind == "averaged":
            w = p["weight"]
            if not 0 < w <= 1:
                raise ValueError(f"averaging weight must lie in (0, 1], got {w}")
            if len(self.inner) != 1:
                raise ValueError("averaged spec wraps exactly one operator")
        elif self.kind == "composite":
            if not self.inner:
                raise ValueError("composite spec needs at least one stage")
            if any(s.domain.dim != self.domain.dim for s in self.inner):
                raise DimensionError("composite stages must share the domain dimension")
        if self.validate:
            self._check_self_map()

    def _check_self_map(self):
        X = sample_points(self.domain, VALIDATION_DENSITY, seed=0)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            Y = _apply(self, X)
        bad = ~np.all(np.isfinite(Y), axis=1)
        dist = np.where(bad, np.inf, self.domain.distance(np.where(bad[:, None], 0.0, Y)))
        worst = int(np.argmax(dist))
        if dist[worst] > SELF_MAP_TOL:
            raise DomainViolation(Y[worst], dist[worst])

    def __eq__(self, other):
        return isinstance(other, OperatorSpec) and self.to_dict() == other.to_dict()

    def __call__(self, x):
        return evaluate(self, x)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "domain": self.domain.to_dict()}
        for key, value in self.params.items():
            d[key] = np.asarray(value).tolist() if isinstance(value, (tuple, list, np.ndarray)) else value
        if self.kind == "averaged":
            d["inner"] = self.inner[0].to_dict()
        elif self.kind == "composite":
            d["inner"] = [s.to_dict() for s in self.inner]
        return d

    @classmethod
    def from_dict(cls, d: dict, domain: Domain | None = None) -> "OperatorSpec":
        """Build a spec from its config form; ``domain`` is used when ``d`` has none."""
        if "domain" in d:
            domain = Domain.from_dict(d["domain"])
        if domain is None:
            raise ValueError("operator has no domain")
        kind = d.get("kind")
        if kind == "reciprocal":
            return reciprocal(domain)
        if kind == "affine_reflection":
            return affine_reflection(domain)
        if kind == "identity":
            return identity(domain)
        if kind == "rotation":
            return rotation(d["angle"], domain, center=d.get("center", (0.0, 0.0)))
        if kind == "affine":
            return affine(d["matrix"], d.get("offset"), domain)
        if kind == "scaled":
            return scaled(d["factor"], domain)
        if kind == "averaged":
            return averaged(cls.from_dict(d["inner"], domain), d["weight"])
        if kind == "composite":
            return composite([cls.from_dict(s, domain) for s in d["inner"]], domain)
        raise ValueError(f"unknown operator kind {kind!r}")


def _apply(T: OperatorSpec, X: np.ndarray) -> np.ndarray:
    """Raw batched evaluation, no input checks."""
    p, dom = T.params, T.domain
    if T.kind == "reciprocal":
        return 1.0 / X
    if T.kind == "affine_reflection":
        lo, hi = dom.bounding_box()
        return (lo + hi) - X
    if T.kind == "rotation":
        th = p["angle"]
        c = np.asarray(p.get("center", (0.0, 0.0)), dtype=float)
        R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        return (X - c) @ R.T + c
    if T.kind == "affine":
        A = np.asarray(p["matrix"], dtype=float)
        return X @ A.T + np.asarray(p["offset"], dtype=float)
    if T.kind == "scaled":
        return dom.project(p["factor"] * X)
    if T.kind == "averaged":
        w = p["weight"]
        return (1.0 - w) * X + w * _apply(T.inner[0], X)
    # composite: stages applied left to right, each image pulled back onto its stage domain
    for stage in T.inner:
        X = stage.domain.project(_apply(stage, X))
    return X


def evaluate(T: OperatorSpec, x) -> np.ndarray:
    """Image ``Tx`` of a single point.

    Raises :class:`DomainViolation` if ``x`` is farther than ``DOMAIN_TOL``
    from ``T.domain``; closer points are projected first.
    """
    x = as_point(x)
    if x.size != T.domain.dim:
        raise DimensionError(f"dimension mismatch: {x.size} vs {T.domain.dim}")
    dist = T.domain.distance(x)
    if dist > DOMAIN_TOL:
        raise DomainViolation(x, dist)
    y = _apply(T, T.domain.project(x)[None, :])[0]
    return T.domain.project(y)


def evaluate_many(T: OperatorSpec, X) -> np.ndarray:
    """Batched :func:`evaluate` over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != T.domain.dim:
        raise DimensionError(f"dimension mismatch: {X.shape[1]} vs {T.domain.dim}")
    dist = T.domain.distance(X)
    worst = int(np.argmax(dist))
    if dist[worst] > DOMAIN_TOL:
        raise DomainViolation(X[worst], dist[worst])
    return T.domain.project(_apply(T, T.domain.project(X)))


def fixed_point_residual(T: OperatorSpec, x) -> float:
    x = as_point(x)
    return float(np.linalg.norm(evaluate(T, x) - T.domain.project(x)))


# gallery


def reciprocal(domain: Domain | None = None) -> OperatorSpec:
    """``Tx = 1/x`` componentwise, by default on ``[1/2, 2]``."""
    return OperatorSpec("reciprocal", domain or Domain.interval(0.5, 2.0))


def affine_reflection(domain: Domain | None = None) -> OperatorSpec:
    """Point reflection through the domain center; ``Tx = 1 - x`` on ``[0, 1]``."""
    return OperatorSpec("affine_reflection", domain or Domain.interval(0.0, 1.0))


def rotation(angle: float, domain: Domain | None = None, center=(0.0, 0.0)) -> OperatorSpec:
    return OperatorSpec(
        "rotation",
        domain or Domain.ball((0.0, 0.0), 1.0),
        {"angle": float(angle), "center": tuple(map(float, center))},
    )


def affine(matrix, offset=None, domain: Domain | None = None) -> OperatorSpec:
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    if domain is None:
        raise ValueError("affine maps need an explicit domain")
    c = np.zeros(A.shape[0]) if offset is None else np.atleast_1d(np.asarray(offset, dtype=float))
    return OperatorSpec(
        "affine", domain, {"matrix": tuple(map(tuple, A.tolist())), "offset": tuple(c.tolist())}
    )


def identity(domain: Domain | None = None) -> OperatorSpec:
    domain = domain or Domain.interval(0.0, 1.0)
    return affine(np.eye(domain.dim), None, domain)


def scaled(factor: float, domain: Domain | None = None) -> OperatorSpec:
    """``x -> P(factor * x)`` with ``P`` the projection onto the domain."""
    return OperatorSpec("scaled", domain or Domain.interval(0.0, 1.0), {"factor": float(factor)})


def composite(stages, domain: Domain | None = None) -> OperatorSpec:
    stages = tuple(stages)
    return OperatorSpec("composite", domain or stages[0].domain, {}, stages)


def averaged(T: OperatorSpec, mu: float) -> OperatorSpec:
    """``T_mu x = (1 - mu) x + mu T x`` on the same domain."""
    mu = float(mu)
    if not 0 < mu <= 1:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    # convex combination of two domain points stays in the domain
    return OperatorSpec("averaged", T.domain, {"weight": mu}, (T,), validate=False)


def krasnoselskij_map(T: OperatorSpec, lam: float) -> OperatorSpec:
    """One step of the Krasnoselskij scheme, ``U x = (1 - lam) x + lam T x``."""
    lam = float(lam)
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    return averaged(T, lam)
