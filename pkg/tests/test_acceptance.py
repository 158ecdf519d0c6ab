"""Exit criteria. Each test carries a ``criterion`` marker; the conftest hook
prints one PASS/FAIL line per criterion at the end of the run."""

import json
import math
import time

import numpy as np
import pytest

from fixpoint.analysis import (
    check_enriched,
    check_quasi_nonexpansive,
    derive_mu,
    enrichment_bound_from_r_s,
    enrichment_slack_direct,
    enrichment_slack_inner,
    estimate_lipschitz,
    lambda_admissible_range,
    minimal_enrichment_b,
    optimal_lambda,
    pair_data,
    probe_fixed_points,
)
from fixpoint.cli import EXIT_NUMERIC, execute, main
from fixpoint.geometry import Domain, hausdorff, random_pairs
from fixpoint.iteration import IterationConfig, fejer_check, run
from fixpoint.operators import (
    affine,
    affine_reflection,
    averaged,
    evaluate,
    identity,
    reciprocal,
    rotation,
    scaled,
)

QUARTER = math.pi / 2
DOMAIN_CFG = {"kind": "interval", "low": 0.5, "high": 2.0}


@pytest.mark.criterion(1, "constants of the reciprocal map on [1/2, 2] (s, b, b=1.5 holds, b=1.2 fails), < 5 s")
def test_reciprocal_constants():
    T = reciprocal()
    start = time.perf_counter()
    s = estimate_lipschitz(T, 400, 42)
    b = minimal_enrichment_b(T, 400, 42)
    holds = check_enriched(T, 1.5, 400, 42)
    fails = check_enriched(T, 1.2, 400, 42)
    elapsed = time.perf_counter() - start
    assert 3.9 <= s <= 4.0
    assert 1.45 <= b <= 1.5
    assert holds.holds
    assert not fails.holds and fails.witness is not None
    x, y = fails.witness
    lhs = abs(1.2 * (x[0] - y[0]) + 1 / x[0] - 1 / y[0])
    assert lhs > 2.2 * abs(x[0] - y[0])
    assert elapsed < 5.0


@pytest.mark.criterion(2, "reciprocal map is not quasi-nonexpansive, witness x = 1/2")
def test_quasi_counterexample():
    T = reciprocal()
    v = check_quasi_nonexpansive(T, [1.0], 400, 42)
    assert not v.holds
    w = v.witness
    assert w.tolist() == [0.5]
    assert abs(evaluate(T, w)[0] - 1.0) == 1.0
    assert abs(w[0] - 1.0) == 0.5


@pytest.mark.criterion(3, "Picard cycles on 1 - x, lambda = 1/2 converges in one step")
def test_picard_failure_vs_averaging():
    T = affine_reflection()
    picard = run(T, IterationConfig(1.0, [1.0]))
    assert picard.status == "cycle_detected" and picard.period == 2
    xs = [p[0] for p in picard.points]
    assert xs == [1.0, 0.0, 1.0]
    assert all(a != b for a, b in zip(xs, xs[1:]))
    averaged_run = run(T, IterationConfig(0.5, [1.0]))
    assert averaged_run.status == "converged" and averaged_run.iterations == 1
    assert averaged_run.limit.tolist() == [0.5] and averaged_run.residuals[-1] == 0


@pytest.mark.criterion(4, "quarter rotation: Picard period 4, lambda = 1/2 shrinks by sqrt(2)/2 per step")
def test_rotation():
    T = rotation(QUARTER)
    picard = run(T, IterationConfig(1.0, [1.0, 0.0]))
    assert picard.status == "cycle_detected" and picard.period == 4
    traj = run(T, IterationConfig(0.5, [1.0, 0.0]))
    norms = np.linalg.norm(traj.as_array(), axis=1)
    assert len(norms) > 40
    n = np.arange(41)
    assert np.max(np.abs(norms[:41] - (math.sqrt(2) / 2) ** n)) <= 1e-10
    assert traj.status == "converged"
    assert np.linalg.norm(traj.limit) <= 1e-10


def direct_recurrence(lam, x, tol):
    n = 0
    while abs(1.0 / x - x) > tol:
        x = (1.0 - lam) * x + lam / x
        n += 1
    return n, x


@pytest.mark.criterion(5, "auto lambda = mu/2 on the reciprocal map: converges, Fejer, step count matches oracle")
def test_auto_pipeline():
    cfg = {"operator": {"kind": "reciprocal"}, "domain": DOMAIN_CFG,
           "scheme": {"lambda": "auto", "x0": [2.0], "tol": 1e-10}}
    out = execute("iterate", cfg)
    rep, traj = out.report, out.trajectory
    lam = rep["lambda"]
    assert lam == rep["mu"] / 2
    assert lam == pytest.approx(0.2, abs=0.005)
    assert traj.status == "converged" and traj.residuals[-1] <= 1e-10
    assert abs(traj.limit[0] - 1.0) <= 1e-10
    assert fejer_check(traj, [1.0]).holds
    steps, x = direct_recurrence(lam, 2.0, 1e-10)
    assert traj.iterations == steps
    assert traj.limit[0] == x


FIX_GALLERY = {"reciprocal": reciprocal(), "affine_reflection": affine_reflection(), "rotation": rotation(QUARTER)}


@pytest.mark.criterion(6, "Fix(T) and Fix(T_mu) agree within 2 grid spacings")
@pytest.mark.parametrize("name", sorted(FIX_GALLERY))
def test_fixed_point_sets_agree(name):
    T = FIX_GALLERY[name]
    density = 200
    h = T.domain.grid_spacing(density)
    fix = probe_fixed_points(T, density).points
    assert len(fix) >= 1
    for mu in (derive_mu(minimal_enrichment_b(T, density, 42)), 0.4):
        fix_mu = probe_fixed_points(averaged(T, mu), density).points
        assert hausdorff(fix, fix_mu) <= 2 * h


@pytest.mark.criterion(7, "formula spot checks")
def test_formulas():
    lo, hi = lambda_admissible_range(0, 4)
    assert lo == 0 and abs(hi - 2 / 17) <= 1e-15
    assert abs(optimal_lambda(0, 4) - 1 / 17) <= 1e-15
    assert enrichment_bound_from_r_s(0, 4) == 7.5
    assert derive_mu(1.5) == 0.4


EQUIV_GALLERY = [
    reciprocal(),
    affine_reflection(),
    rotation(QUARTER),
    identity(),
    scaled(2.0),
    affine([[0.2, 0.9], [-0.9, 0.2]], None, Domain.ball([0, 0], 1)),
]


@pytest.mark.criterion(8, "direct and inner-product enrichment forms agree on 10 000 pairs per map")
def test_enrichment_forms_agree():
    for k, T in enumerate(EQUIV_GALLERY):
        X, Y = random_pairs(T.domain, 10_000, seed=100 + k)
        pd = pair_data(T, X, Y)
        assert len(pd.X) == 10_000
        for b in (0.0, 0.5, 1.5, 7.5):
            # both slacks normalised by ||x - y||^2; they differ by the positive factor a + c
            direct = enrichment_slack_direct(pd, b)
            scale = (b + 1) * np.sqrt(pd.dd) + np.linalg.norm(b * pd.d + pd.delta, axis=1)
            direct_sq = direct * scale / pd.dd
            inner = enrichment_slack_inner(pd, b) / pd.dd
            assert np.max(np.abs(direct_sq - inner)) <= 1e-10
            disagree = ((direct_sq > 1e-10) & (inner < -1e-10)) | ((direct_sq < -1e-10) & (inner > 1e-10))
            assert not disagree.any()


@pytest.mark.criterion(9, "clamped doubling is infeasible; iterate with lambda = auto exits 3")
def test_infeasibility(tmp_path):
    assert math.isinf(minimal_enrichment_b(scaled(2.0), 200, 42))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "operator": {"kind": "scaled", "factor": 2.0},
        "domain": {"kind": "interval", "low": 0.0, "high": 1.0},
        "scheme": {"lambda": "auto", "x0": [0.5]},
    }))
    assert main(["iterate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == EXIT_NUMERIC


DETERMINISM_RUNS = [
    ("iterate", {"operator": {"kind": "reciprocal"}, "domain": DOMAIN_CFG,
                 "scheme": {"lambda": "auto", "x0": [2.0]}}),
    ("iterate", {"operator": {"kind": "affine_reflection"}, "domain": {"kind": "interval", "low": 0, "high": 1},
                 "scheme": {"lambda": 1.0, "x0": [1.0]}}),
    ("iterate", {"operator": {"kind": "rotation", "angle": QUARTER},
                 "domain": {"kind": "ball", "center": [0, 0], "radius": 1},
                 "scheme": {"lambda": 0.5, "x0": [1.0, 0.0]}}),
    ("classify", {"operator": {"kind": "reciprocal"}, "domain": DOMAIN_CFG, "analysis": {"density": 400}}),
    ("compare", {"operator": {"kind": "reciprocal"}, "domain": DOMAIN_CFG,
                 "scheme": {"lambdas": [0.5, 0.1], "x0": [2.0]}, "fixed_point": [1.0]}),
    ("verify", {"operator": {"kind": "rotation", "angle": QUARTER},
                "domain": {"kind": "ball", "center": [0, 0], "radius": 1}}),
]


@pytest.mark.criterion(10, "same seed gives byte-identical CSV and JSON")
@pytest.mark.parametrize("command,cfg", DETERMINISM_RUNS, ids=[f"{c}-{i}" for i, (c, _) in enumerate(DETERMINISM_RUNS)])
def test_determinism(tmp_path, command, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outputs = []
    for rep in ("first", "second"):
        main([command, "--config", str(path), "--out-dir", str(tmp_path / rep)])
        outputs.append({f.name: f.read_bytes() for f in sorted((tmp_path / rep).iterdir())})
    assert outputs[0] == outputs[1]
    assert "report.json" in outputs[0]
    if command == "iterate":
        assert "trajectory.csv" in outputs[0]
