import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixpoint.analysis import derive_mu, minimal_enrichment_b, probe_fixed_points
from fixpoint.geometry import Domain, DomainViolation
from fixpoint.iteration import (
    IterationConfig,
    Trajectory,
    asymptotic_regularity_check,
    compare_rates,
    fejer_check,
    run,
)
from fixpoint.operators import (
    affine,
    affine_reflection,
    evaluate,
    fixed_point_residual,
    identity,
    reciprocal,
    rotation,
    scaled,
)

QUARTER = math.pi / 2


def reciprocal_oracle(lam, x=2.0, tol=1e-10, cap=10_000):
    """Steps of x <- (1-lam) x + lam/x until |1/x - x| <= tol."""
    n = 0
    while abs(1.0 / x - x) > tol and n < cap:
        x = (1 - lam) * x + lam * (1.0 / x)
        n += 1
    return n, x


def test_config_validation():
    with pytest.raises(ValueError):
        IterationConfig(0.0, [1.0])
    with pytest.raises(ValueError):
        IterationConfig(1.5, [1.0])
    with pytest.raises(ValueError):
        IterationConfig(0.5, [1.0], tol=0)
    with pytest.raises(ValueError):
        IterationConfig(0.5, [1.0], max_iter=0)


def test_picard_cycles_on_reflection():
    traj = run(affine_reflection(), IterationConfig(1.0, [1.0], tol=1e-10))
    assert traj.status == "cycle_detected" and traj.period == 2
    assert [p[0] for p in traj.points] == [1.0, 0.0, 1.0]


def test_averaged_step_hits_reflection_fixed_point():
    traj = run(affine_reflection(), IterationConfig(0.5, [1.0]))
    assert traj.status == "converged"
    assert traj.iterations == 1
    assert traj.limit.tolist() == [0.5]
    assert traj.residuals[-1] == 0


def test_reciprocal_matches_direct_recurrence():
    expected_steps, expected_x = reciprocal_oracle(0.4)
    assert expected_steps == 16  # frozen from the oracle
    traj = run(reciprocal(), IterationConfig(0.4, [2.0], tol=1e-10, max_iter=10_000))
    assert traj.status == "converged"
    assert traj.iterations == expected_steps
    assert traj.limit[0] == expected_x
    assert abs(traj.limit[0] - 1) <= 1e-8


def test_rotation_norm_closed_form():
    traj = run(rotation(QUARTER), IterationConfig(0.5, [1.0, 0.0]))
    assert traj.status == "converged"
    norms = np.linalg.norm(traj.as_array(), axis=1)
    n = np.arange(len(norms))
    np.testing.assert_allclose(norms, (math.sqrt(2) / 2) ** n, atol=1e-12, rtol=0)
    assert np.linalg.norm(traj.limit) < 1e-10


def test_picard_rotation_period_four():
    traj = run(rotation(QUARTER), IterationConfig(1.0, [1.0, 0.0]))
    assert traj.status == "cycle_detected" and traj.period == 4


def test_max_iter_reached():
    traj = run(reciprocal(), IterationConfig(0.01, [2.0], max_iter=5))
    assert traj.status == "max_iter_reached"
    assert traj.iterations == 5


def test_start_outside_domain():
    with pytest.raises(DomainViolation):
        run(reciprocal(), IterationConfig(0.5, [3.0]))


def test_fejer_examples():
    traj = run(reciprocal(), IterationConfig(0.4, [2.0]))
    assert fejer_check(traj, [1.0]) == (True, None)
    traj = run(affine_reflection(), IterationConfig(1.0, [1.0]))
    assert fejer_check(traj, [0.5]).holds
    traj = run(scaled(2.0), IterationConfig(1.0, [0.5], max_iter=3))
    assert fejer_check(traj, [0.0]) == (False, 0)
    with pytest.raises(ValueError):
        fejer_check(Trajectory(), [0.0])


def test_asymptotic_regularity_examples():
    traj = run(reciprocal(), IterationConfig(0.4, [2.0]))
    rep = asymptotic_regularity_check(traj, 10)
    assert rep.nonincreasing
    assert rep.tail_max == max(traj.step_norms[-10:])
    # the last step is lam times the last unconverged residual
    assert asymptotic_regularity_check(traj, 1).tail_max <= 1e-8

    traj = run(affine_reflection(), IterationConfig(1.0, [1.0]))
    rep = asymptotic_regularity_check(traj, 2)
    assert rep.nonincreasing and rep.tail_max == 1.0

    with pytest.raises(ValueError):
        asymptotic_regularity_check(traj, 5)


def test_converged_tail_is_lam_times_last_open_residual():
    for lam in (0.1, 0.4, 0.9):
        traj = run(reciprocal(), IterationConfig(lam, [2.0]))
        assert traj.status == "converged"
        tail = asymptotic_regularity_check(traj, 1).tail_max
        assert tail == pytest.approx(lam * traj.residuals[-2], abs=1e-15)


def test_compare_rates_examples():
    fast = run(reciprocal(), IterationConfig(0.5, [2.0]))
    slow = run(reciprocal(), IterationConfig(0.1, [2.0]))
    assert compare_rates(fast, slow, [1.0]).faster == "A"
    assert compare_rates(slow, fast, [1.0]).faster == "B"

    v = compare_rates(fast, fast, [1.0])
    assert v.faster == "tie" and v.crossover_count == 0

    a = run(rotation(QUARTER), IterationConfig(0.5, [1.0, 0.0]))
    b = run(rotation(QUARTER), IterationConfig(0.25, [1.0, 0.0]))
    assert compare_rates(a, b, [0.0, 0.0]).faster == "A"


def test_compare_rates_matches_per_step_factors():
    # (I + R)/2 and (3I + R)/4 scale every vector by fixed factors
    a = run(rotation(QUARTER), IterationConfig(0.5, [1.0, 0.0]))
    b = run(rotation(QUARTER), IterationConfig(0.25, [1.0, 0.0]))
    v = compare_rates(a, b, [0.0, 0.0])
    n = np.arange(len(v.errors_b))
    np.testing.assert_allclose(v.errors_b, (math.sqrt(10) / 4) ** n, rtol=1e-10)


def test_csv_layout():
    traj = run(rotation(QUARTER), IterationConfig(0.5, [1.0, 0.0], tol=1e-2))
    lines = traj.to_csv().splitlines()
    assert lines[0] == "n,x_0,x_1,residual,step_norm"
    assert len(lines) == len(traj.points) + 1
    assert lines[-1].endswith(",")
    assert lines[1].split(",")[:3] == ["0", "1", "0"]


GALLERY = [reciprocal(), affine_reflection(), rotation(QUARTER), rotation(1.0), identity(),
           affine([[0.0, -1.0], [1.0, 0.0]], None, Domain.box([-1, -1], [1, 1]))]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(range(len(GALLERY))), st.floats(0.05, 1.0), st.integers(0, 1000))
def test_step_identity_and_limit(idx, lam, seed):
    T = GALLERY[idx]
    x0 = T.domain.project(np.random.default_rng(seed).uniform(-1, 2, T.domain.dim))
    traj = run(T, IterationConfig(lam, x0, max_iter=500))
    assert len(traj.residuals) == len(traj.points) == len(traj.step_norms) + 1
    np.testing.assert_allclose(traj.step_norms, lam * np.array(traj.residuals[:-1]), atol=1e-12, rtol=0)
    if traj.status == "converged":
        assert fixed_point_residual(T, traj.limit) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(range(len(GALLERY))), st.integers(0, 1000))
def test_picard_equivalence(idx, seed):
    T = GALLERY[idx]
    x = T.domain.project(np.random.default_rng(seed).uniform(-1, 2, T.domain.dim))
    traj = run(T, IterationConfig(1.0, x, max_iter=30))
    for n in range(1, len(traj.points)):
        x = evaluate(T, x)
        np.testing.assert_array_equal(traj.points[n], x)


MU_CACHE = {}


def _mu_and_fix(T):
    key = id(T)
    if key not in MU_CACHE:
        MU_CACHE[key] = (derive_mu(minimal_enrichment_b(T)), probe_fixed_points(T).points)
    return MU_CACHE[key]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(range(len(GALLERY))), st.floats(0.01, 1.0), st.integers(0, 1000))
def test_guaranteed_fejer_monotonicity(idx, frac, seed):
    T = GALLERY[idx]
    mu, fix = _mu_and_fix(T)
    x0 = T.domain.project(np.random.default_rng(seed).uniform(-1, 2, T.domain.dim))
    traj = run(T, IterationConfig(frac * mu, x0, max_iter=300))
    for p in fix[:: max(1, len(fix) // 10)]:
        assert fejer_check(traj, p).holds
