"""Krasnoselskij iteration ``x_{n+1} = (1 - lam) x_n + lam T x_n`` and its diagnostics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import DimensionError, DomainViolation, as_point
from .operators import DOMAIN_TOL, OperatorSpec, evaluate

CYCLE_TOL = 1e-12
FEJER_TOL = 1e-12
MONOTONE_TOL = 1e-12
RATE_TOL = 1e-14


@dataclass
class IterationConfig:
    lam: float
    x0: np.ndarray
    tol: float = 1e-10
    max_iter: int = 10_000
    cycle_window: int = 8

    def __post_init__(self):
        self.x0 = as_point(self.x0)
        if not 0 < self.lam <= 1:
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1 or self.cycle_window < 1:
            raise ValueError("max_iter and cycle_window must be positive")


@dataclass
class Trajectory:
    points: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    status: str = "running"
    period: int | None = None
    limit: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return len(self.points) - 1

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def as_array(self) -> np.ndarray:
        return np.array(self.points)

    def to_csv(self) -> str:
        """Header ``n,x_0..x_{d-1},residual,step_norm``; last row has no step norm."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", *(f"x_{i}" for i in range(self.dim)), "residual", "step_norm"])
        for n, (x, r) in enumerate(zip(self.points, self.residuals)):
            step = fmt(self.step_norms[n]) if n < len(self.step_norms) else ""
            w.writerow([n, *(fmt(v) for v in x), fmt(r), step])
        return buf.getvalue()


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _cycle_lag(points: list, window: int) -> int | None:
    x = points[-1]
    for lag in range(1, min(window, len(points) - 1) + 1):
        if np.max(np.abs(points[-1 - lag] - x)) <= CYCLE_TOL:
            return lag
    return None


def run(T: OperatorSpec, cfg: IterationConfig) -> Trajectory:
    """Iterate from ``cfg.x0`` until convergence, a detected cycle or ``max_iter``.

    Convergence means the residual ``||T x_n - x_n||`` is at most ``cfg.tol``.
    A cycle is a revisit (to ``1e-12``) of one of the previous
    ``cfg.cycle_window`` iterates; its lag is reported as the period.
    """
    dom = T.domain
    x = as_point(cfg.x0)
    if x.size != dom.dim:
        raise DimensionError(f"x0 has dimension {x.size}, domain has {dom.dim}")
    dist = dom.distance(x)
    if dist > DOMAIN_TOL:
        raise DomainViolation(x, dist)
    x = dom.project(x)

    lam = cfg.lam
    traj = Trajectory()
    tx = evaluate(T, x)
    traj.points.append(x)
    traj.residuals.append(float(np.linalg.norm(tx - x)))
    while True:
        if traj.residuals[-1] <= cfg.tol:
            traj.status = "converged"
            traj.limit = traj.points[-1]
            break
        lag = _cycle_lag(traj.points, cfg.cycle_window)
        if lag is not None:
            traj.status, traj.period = "cycle_detected", lag
            break
        if traj.iterations >= cfg.max_iter:
            traj.status = "max_iter_reached"
            break
        x_next = dom.project((1.0 - lam) * x + lam * tx)
        traj.step_norms.append(float(np.linalg.norm(x_next - x)))
        x = x_next
        tx = evaluate(T, x)
        traj.points.append(x)
        traj.residuals.append(float(np.linalg.norm(tx - x)))
    return traj


class FejerResult(NamedTuple):
    holds: bool
    first_violation: int | None


def fejer_check(traj: Trajectory, p) -> FejerResult:
    """Whether ``||x_{n+1} - p|| <= ||x_n - p||`` (to ``1e-12``) along the whole run."""
    if not traj.points:
        raise ValueError("empty trajectory")
    p = as_point(p)
    if p.size != traj.dim:
        raise DimensionError(f"p has dimension {p.size}, trajectory has {traj.dim}")
    dist = np.linalg.norm(traj.as_array() - p, axis=1)
    bad = np.nonzero(dist[1:] > dist[:-1] + FEJER_TOL)[0]
    if len(bad):
        return FejerResult(False, int(bad[0]))
    return FejerResult(True, None)


class RegularityReport(NamedTuple):
    nonincreasing: bool
    tail_max: float


def asymptotic_regularity_check(traj: Trajectory, window: int) -> RegularityReport:
    if window < 1:
        raise ValueError("window must be positive")
    if len(traj.points) < window + 1:
        raise ValueError(
            f"trajectory has {len(traj.points)} points, need at least {window + 1}"
        )
    s = np.asarray(traj.step_norms)
    nonincreasing = bool(np.all(s[1:] <= s[:-1] + MONOTONE_TOL))
    return RegularityReport(nonincreasing, float(np.max(s[-window:])))


@dataclass
class RateVerdict:
    faster: str
    crossover_count: int
    errors_a: np.ndarray
    errors_b: np.ndarray


def compare_rates(traj_a: Trajectory, traj_b: Trajectory, p) -> RateVerdict:
    """Empirical comparison of the error sequences ``||x_n - p||`` of two runs.

    ``faster`` is ``"A"`` or ``"B"`` when that run's error stays at or below
    the other's from the first index where they differ by more than
    ``1e-14``, otherwise ``"tie"``.
    """
    p = as_point(p)
    if traj_a.dim != p.size or traj_b.dim != p.size:
        raise DimensionError("trajectories and p must share a dimension")
    ea = np.linalg.norm(traj_a.as_array() - p, axis=1)
    eb = np.linalg.norm(traj_b.as_array() - p, axis=1)
    m = min(len(ea), len(eb))
    diff = ea[:m] - eb[:m]

    signs = np.sign(np.where(np.abs(diff) > RATE_TOL, diff, 0.0))
    signs = signs[signs != 0]
    crossovers = int(np.count_nonzero(signs[1:] != signs[:-1]))

    apart = np.nonzero(np.abs(diff) > RATE_TOL)[0]
    faster = "tie"
    if len(apart):
        tail = diff[apart[0]:]
        if np.all(tail <= RATE_TOL):
            faster = "A"
        elif np.all(tail >= -RATE_TOL):
            faster = "B"
    return RateVerdict(faster, crossovers, ea, eb)
