"""``fixpoint <iterate|classify|compare|verify> --config <path> [--out-dir <path>]``.

The config is one JSON document::

    {
      "operator": {"kind": "reciprocal"},
      "domain": {"kind": "interval", "low": 0.5, "high": 2},
      "scheme": {"lambda": "auto", "x0": [2], "tol": 1e-10, "max_iter": 10000},
      "analysis": {"density": 200, "seed": 42},
      "output": {"trajectory_csv": "trajectory.csv", "report_json": "report.json"}
    }

``compare`` reads ``scheme.lambdas`` (two values) and an optional top-level
``fixed_point``. Defaults are written back into the report's ``config``.

Exit codes: 0 success, 1 config error, 2 verification failure, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .geometry import Domain, DomainViolation, as_point, hausdorff
from .iteration import IterationConfig, Trajectory, compare_rates, fejer_check, fmt, run
from .operators import OperatorSpec, averaged, evaluate_many

COMMANDS = ("iterate", "classify", "compare", "verify")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_SCHEME = {"tol": 1e-10, "max_iter": 10_000, "cycle_window": 8}
DEFAULT_ANALYSIS = {"density": analysis.DEFAULT_DENSITY, "seed": analysis.DEFAULT_SEED}
DEFAULT_OUTPUT = {"trajectory_csv": "trajectory.csv", "report_json": "report.json"}
# verify: slack allowed on the Lipschitz constant of the averaged map over fresh samples
VERIFY_NONEXPANSIVE_TOL = 1e-9
# verify: at most this many probed fixed points enter the pairwise checks
VERIFY_MAX_POINTS = 64


class ConfigError(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    operator: OperatorSpec
    domain: Domain
    scheme: dict
    analysis: dict
    output: dict
    fixed_point: np.ndarray | None = None
    raw: dict = field(default_factory=dict)

    @property
    def density(self) -> int:
        return self.analysis["density"]

    @property
    def seed(self) -> int:
        return self.analysis["seed"]

    def x0(self) -> np.ndarray:
        if "x0" in self.scheme:
            return as_point(self.scheme["x0"])
        # no start given: the upper corner of the bounding box, pulled into the domain
        return self.domain.project(self.domain.bounding_box()[1])

    def materialized(self) -> dict:
        d = {
            "command": self.command,
            "operator": self.raw["operator"],
            "domain": self.domain.to_dict(),
            "scheme": dict(self.scheme),
            "analysis": dict(self.analysis),
            "output": dict(self.output),
        }
        d["scheme"].setdefault("x0", self.x0().tolist())
        if self.fixed_point is not None:
            d["fixed_point"] = self.fixed_point.tolist()
        return d


def parse_config(raw: dict, command: str | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cmd = command or raw.get("command")
    if raw.get("command") not in (None, cmd):
        raise ConfigError(f"config command {raw['command']!r} disagrees with {cmd!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {cmd!r}")
    try:
        domain = Domain.from_dict(raw["domain"])
        operator = OperatorSpec.from_dict(raw["operator"], domain)
    except KeyError as e:
        raise ConfigError(f"missing config key {e}") from None
    except (ValueError, TypeError) as e:
        raise ConfigError(f"bad operator or domain: {e}") from None
    if operator.domain.dim != domain.dim:
        raise ConfigError("operator and domain dimensions disagree")

    scheme = {**DEFAULT_SCHEME, **raw.get("scheme", {})}
    settings = {**DEFAULT_ANALYSIS, **raw.get("analysis", {})}
    output = {**DEFAULT_OUTPUT, **raw.get("output", {})}
    if not (isinstance(settings["density"], int) and settings["density"] >= 2):
        raise ConfigError("analysis.density must be an integer >= 2")
    if not isinstance(settings["seed"], int):
        raise ConfigError("analysis.seed must be an integer")

    lam = scheme.get("lambda")
    if cmd == "iterate" and not (lam == "auto" or isinstance(lam, (int, float))):
        raise ConfigError('scheme.lambda must be a number or "auto"')
    if cmd == "compare":
        lams = scheme.get("lambdas")
        if not (isinstance(lams, list) and len(lams) == 2):
            raise ConfigError("compare needs scheme.lambdas with exactly two values")

    fixed_point = None
    try:
        if "x0" in scheme:
            scheme["x0"] = as_point(scheme["x0"]).tolist()
        if raw.get("fixed_point") is not None:
            fixed_point = as_point(raw["fixed_point"])
        IterationConfig(lam=0.5, x0=np.zeros(domain.dim), tol=scheme["tol"],
                        max_iter=scheme["max_iter"], cycle_window=scheme["cycle_window"])
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None
    return RunConfig(cmd, operator, domain, scheme, settings, output, fixed_point, raw)


def iteration_config(cfg: RunConfig, lam: float) -> IterationConfig:
    try:
        return IterationConfig(lam=lam, x0=cfg.x0(), tol=cfg.scheme["tol"],
                               max_iter=cfg.scheme["max_iter"],
                               cycle_window=cfg.scheme["cycle_window"])
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _b_value(b: float):
    return "infeasible" if math.isinf(b) else b


def _trajectory_summary(traj: Trajectory) -> dict:
    return {
        "status": traj.status,
        "period": traj.period,
        "iterations": traj.iterations,
        "limit": None if traj.limit is None else traj.limit,
        "final_point": traj.points[-1],
        "final_residual": traj.residuals[-1],
    }


@dataclass
class Outcome:
    code: int
    report: dict
    trajectory: Trajectory | None = None


def cmd_iterate(cfg: RunConfig) -> Outcome:
    b = analysis.minimal_enrichment_b(cfg.operator, cfg.density, cfg.seed)
    mu = None if math.isinf(b) else analysis.derive_mu(b)
    lam = cfg.scheme["lambda"]
    report = {"command": "iterate", "config": cfg.materialized(), "min_b": _b_value(b), "mu": mu}
    if lam == "auto":
        if mu is None:
            report["error"] = "operator is not enriched nonexpansive on the sample; no automatic lambda"
            return Outcome(EXIT_NUMERIC, report)
        lam, source = mu / 2, "auto"
    else:
        lam, source = float(lam), "given"
    traj = run(cfg.operator, iteration_config(cfg, lam))
    report.update(
        {
            "lambda": lam,
            "lambda_source": source,
            "guaranteed_range": None if mu is None else [0.0, mu],
            "lambda_in_guaranteed_range": mu is not None and 0 < lam < mu,
            **_trajectory_summary(traj),
        }
    )
    return Outcome(EXIT_OK, report, traj)


def derived_quantities(rep: analysis.ClassificationReport) -> dict:
    s = rep.lipschitz_s
    # any r above the sampled sup is admissible; negative estimates are clamped to 0
    r = max(rep.pseudo_r, 0.0)
    out = {"r_used": r, "mu": rep.mu, "lambda_admissible_range": None,
           "optimal_lambda": None, "enrichment_bound_from_r_s": None}
    if r < 1:
        out["enrichment_bound_from_r_s"] = analysis.enrichment_bound_from_r_s(r, s)
        if 1 - 2 * r + s * s > 0:
            out["lambda_admissible_range"] = list(analysis.lambda_admissible_range(r, s))
            if r <= s:
                out["optimal_lambda"] = analysis.optimal_lambda(r, s)
    return out


def report_dict(rep: analysis.ClassificationReport) -> dict:
    return {
        "lipschitz_s": rep.lipschitz_s,
        "pseudo_r": rep.pseudo_r,
        "min_b": _b_value(rep.min_b),
        "mu": rep.mu,
        "nonexpansive": rep.nonexpansive,
        "nonexpansive_witness": None if rep.nonexpansive_witness is None else list(rep.nonexpansive_witness),
        "quasi_nonexpansive": rep.quasi_nonexpansive,
        "quasi_witness": rep.quasi_witness,
        "quasi_fixed_point": rep.quasi_fixed_point,
        "fixed_points": rep.fixed_points,
        "sample_density": rep.sample_density,
        "seed": rep.seed,
        "tolerance": rep.tolerance,
    }


def cmd_classify(cfg: RunConfig) -> Outcome:
    rep = analysis.classify(cfg.operator, cfg.density, cfg.seed, fixed_point=cfg.fixed_point)
    report = {"command": "classify", "config": cfg.materialized(), **report_dict(rep),
              "derived": derived_quantities(rep)}
    return Outcome(EXIT_OK, report)


def _fixed_point(cfg: RunConfig) -> np.ndarray | None:
    if cfg.fixed_point is not None:
        return cfg.fixed_point
    fps = analysis.probe_fixed_points(cfg.operator, cfg.density).points
    return fps[0] if len(fps) else None


def cmd_compare(cfg: RunConfig) -> Outcome:
    lam_a, lam_b = (float(v) for v in cfg.scheme["lambdas"])
    report = {"command": "compare", "config": cfg.materialized(), "lambdas": [lam_a, lam_b]}
    p = _fixed_point(cfg)
    if p is None:
        report["error"] = "no fixed point supplied or found"
        return Outcome(EXIT_NUMERIC, report)
    ta = run(cfg.operator, iteration_config(cfg, lam_a))
    tb = run(cfg.operator, iteration_config(cfg, lam_b))
    v = compare_rates(ta, tb, p)
    report.update(
        {
            "fixed_point": p,
            "faster": v.faster,
            "faster_lambda": {"A": lam_a, "B": lam_b}.get(v.faster),
            "crossover_count": v.crossover_count,
            "run_a": _trajectory_summary(ta),
            "run_b": _trajectory_summary(tb),
            "errors_a": v.errors_a,
            "errors_b": v.errors_b,
        }
    )
    return Outcome(EXIT_OK, report)


def _subsample(points: np.ndarray, k: int) -> np.ndarray:
    if len(points) <= k:
        return points
    return points[np.linspace(0, len(points) - 1, k).astype(int)]


def cmd_verify(cfg: RunConfig) -> Outcome:
    T, dens, seed = cfg.operator, cfg.density, cfg.seed
    checks = []

    def record(name, passed, margin, detail=""):
        checks.append({"name": name, "passed": bool(passed), "margin": margin, "detail": detail})

    b = analysis.minimal_enrichment_b(T, dens, seed)
    mu = None if math.isinf(b) else analysis.derive_mu(b)
    fix = analysis.probe_fixed_points(T, dens)
    h = fix.spacing
    record("fixed_points_found", len(fix) > 0, len(fix), f"{len(fix)} probed fixed points")

    if mu is None:
        for name in ("fixed_point_sets_equal", "averaged_nonexpansive", "fejer_monotone"):
            record(name, False, None, "minimal enrichment constant is infeasible")
    else:
        T_mu = averaged(T, mu)
        fix_mu = analysis.probe_fixed_points(T_mu, dens)
        dist = hausdorff(fix.points, fix_mu.points)
        record("fixed_point_sets_equal", dist <= 2 * h, 2 * h - dist,
               f"Hausdorff distance {fmt(dist)} against 2 x grid spacing {fmt(2 * h)}")

        s_mu = analysis.estimate_lipschitz(T_mu, dens, seed + 1)
        record("averaged_nonexpansive", s_mu <= 1 + VERIFY_NONEXPANSIVE_TOL, 1 - s_mu,
               f"Lipschitz estimate {fmt(s_mu)} of the mu-average on fresh samples")

        lam = mu / 2
        traj = run(T, iteration_config(cfg, lam))
        targets = _subsample(fix.points, VERIFY_MAX_POINTS)
        bad = [i for i, p in enumerate(targets) if not fejer_check(traj, p).holds]
        record("fejer_monotone", len(targets) > 0 and not bad, len(targets) - len(bad),
               f"lambda {fmt(lam)}; {len(targets) - len(bad)} of {len(targets)} fixed points")

    pts = _subsample(fix.points, VERIFY_MAX_POINTS)
    if len(pts) >= 2:
        i, j = np.triu_indices(len(pts), k=1)
        mid = (pts[i] + pts[j]) / 2
        worst = float(np.max(np.linalg.norm(evaluate_many(T, mid) - mid, axis=1)))
        record("fixed_point_set_convex", worst <= fix.tol, fix.tol - worst,
               f"largest midpoint residual {fmt(worst)} over {len(mid)} pairs")
    else:
        record("fixed_point_set_convex", True, 0.0, "fewer than two fixed points")

    ok = all(c["passed"] for c in checks)
    report = {"command": "verify", "config": cfg.materialized(), "min_b": _b_value(b), "mu": mu,
              "checks": checks, "all_passed": ok}
    return Outcome(EXIT_OK if ok else EXIT_VERIFY, report)


HANDLERS = {"iterate": cmd_iterate, "classify": cmd_classify, "compare": cmd_compare, "verify": cmd_verify}


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _emit(obj, indent: int, level: int = 0) -> str:
    pad, inner_pad = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner_pad}{json.dumps(k)}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_emit(v, indent) for v in obj) + "]"
        return "[\n" + ",\n".join(inner_pad + _emit(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else json.dumps(str(obj))
    return json.dumps(obj, ensure_ascii=False)


def dumps(report: dict) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _emit(_plain(report), indent=2) + "\n"


def execute(command: str, raw: dict) -> Outcome:
    cfg = parse_config(raw, command)
    try:
        return HANDLERS[command](cfg)
    except (DomainViolation, FloatingPointError, ZeroDivisionError) as e:
        return Outcome(EXIT_NUMERIC, {"command": command, "config": cfg.materialized(), "error": str(e)})


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fixpoint", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out-dir", type=Path, default=Path("."))
    args = parser.parse_args(argv)

    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
        outcome = execute(args.command, raw)
    except (OSError, json.JSONDecodeError, ConfigError) as e:
        print(f"fixpoint: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    args.out_dir.mkdir(parents=True, exist_ok=True)
    output = {**DEFAULT_OUTPUT, **raw.get("output", {})}
    report_path = args.out_dir / output["report_json"]
    report_path.write_text(dumps(outcome.report), encoding="utf-8")
    if outcome.trajectory is not None:
        (args.out_dir / output["trajectory_csv"]).write_text(outcome.trajectory.to_csv(), encoding="utf-8")

    if "error" in outcome.report:
        print(f"fixpoint: {outcome.report['error']}", file=sys.stderr)
    elif args.command == "verify":
        for c in outcome.report["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['detail']}")
    elif args.command == "iterate":
        r = outcome.report
        print(f"{r['status']} after {r['iterations']} steps (lambda={fmt(r['lambda'])})")
    print(f"report written to {report_path}")
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
