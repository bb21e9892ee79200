import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab.dynamics import EvolutionConfig, evolve
from hclab.eigenfields import EigenField, build_subspace, companion_lift
from hclab.errors import LengthMismatchError, MissingComponentError
from hclab.reduction import build_companion, build_delta, derivatives_to_delta_state
from hclab.recurrence import (
    Ball,
    DeltaSource,
    HarnessMode,
    TargetSpec,
    VisitSet,
    delta_mode_targets,
    fh_harness,
    harness_many,
    lambda_independence,
    lower_density_continuous,
    lower_density_discrete,
    synthesize_candidate,
    thread_cap,
    torus_oracle_density,
    transition_map,
)


def test_discrete_fixtures():
    assert lower_density_discrete(range(2, 10001, 2), 10000).proxy == pytest.approx(0.5, abs=1e-3)
    sq = lower_density_discrete([k * k for k in range(1, 101)], 10000)
    assert sq.proxy <= 0.02
    assert lower_density_discrete([], 100).proxy == 0.0
    with pytest.raises(ValueError):
        lower_density_discrete([0], 10)


def test_continuous_half_intervals_exact():
    ivs = [(k, k + 0.5) for k in range(100)]
    est = lower_density_continuous(VisitSet.from_intervals(ivs, 100.0))
    assert est.proxy == pytest.approx(0.5 * 5 / 5.0)
    assert est.burn_in == 5.0


def test_mask_matches_intervals():
    dt = 0.01
    t = dt * np.arange(10001)
    mask = (t % 1.0) < 0.5 - 1e-9
    a = lower_density_continuous(VisitSet.from_mask(mask, dt))
    b = lower_density_continuous(VisitSet.from_intervals([(k, k + 0.5) for k in range(100)], 100.0))
    assert a.proxy == pytest.approx(b.proxy, abs=2e-3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.booleans(), min_size=2, max_size=300))
def test_ratios_bounded_and_proxy_is_tail_min(bits):
    est = lower_density_continuous(VisitSet.from_mask(bits, 0.5))
    assert np.all((est.ratios >= 0) & (est.ratios <= 1))
    tail = est.ratios[est.times >= est.burn_in]
    if tail.size:
        assert est.proxy == pytest.approx(tail.min())


def test_visit_set_validation():
    with pytest.raises(ValueError):
        VisitSet.from_intervals([(1, 2), (1.5, 3)], 5)
    with pytest.raises(ValueError):
        VisitSet(horizon=1.0)
    assert VisitSet.from_mask([1, 0, 1], 0.5).kind == "BOOLEAN_MASK"


def test_torus_oracle_against_circle_arc():
    # one circle of radius a, ball of radius r centred on the circle:
    # arc fraction (2/pi) asin(r / (2a))
    a, r = 1.0, 0.5
    est = torus_oracle_density([a], [a], r, samples=400_000, seed=1)
    assert est == pytest.approx(2 / math.pi * math.asin(r / (2 * a)), abs=3e-3)


def _rotation_traj(t_max=200.0):
    mu = np.array([1.0, math.sqrt(2)])
    A = np.diag(-1j * mu)  # u' = -A u gives e^{i mu t}
    return evolve(build_companion([A]), np.ones(2), EvolutionConfig(t_max, 0.01))


def test_harness_rotation_matches_oracle():
    traj = _rotation_traj(2000.0)
    target = TargetSpec((0,), {0: Ball(np.ones(2), 0.8)})
    res = fh_harness(traj, target, seed=7, stride=10)
    oracle = torus_oracle_density(np.ones(2), np.ones(2), 0.8, samples=200_000)
    assert res.estimate.final == pytest.approx(oracle, abs=0.02)
    rep = res.report
    assert rep["mode"] == "DERIVATIVE" and rep["seed"] == 7 and "surrogate" in rep["note"]
    assert rep["nearestApproach"]["0"]["distance"] < 1e-12


def test_harness_missing_component():
    traj = _rotation_traj(1.0)
    with pytest.raises(MissingComponentError):
        fh_harness(traj, TargetSpec((1,), {1: Ball(np.ones(2), 1.0)}))


def test_harness_many_ordered():
    traj = _rotation_traj(20.0)
    targets = {k: TargetSpec((0,), {0: Ball(np.ones(2), r)}) for k, r in [("b", 0.5), ("a", 2.0)]}
    out = harness_many(traj, targets)
    assert list(out) == ["a", "b"]
    assert out["a"].estimate.final >= out["b"].estimate.final


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("HC_LAB_THREADS", "3")
    assert thread_cap() == 3
    monkeypatch.setenv("HC_LAB_THREADS", "x")
    assert thread_cap() == 1


def _delta_setup(seed=0):
    rng = np.random.default_rng(seed)
    ops = [0.5 * rng.standard_normal((2, 2)) for _ in range(2)]
    return ops, build_delta(ops), rng


def test_delta_preimage_membership():
    ops, delta, rng = _delta_setup()
    src = DeltaSource(5.0, 1, rng.standard_normal(4), 0.7)
    dt = delta_mode_targets(TargetSpec((0,), delta=src), delta)
    x = np.linalg.solve(5.0 * np.eye(4) - delta.to_dense(), src.center)
    assert dt.state_distance(x)[0] < 1e-12 and dt.contains_state(x)[0]
    # block projections contain the blocks of any preimage point
    for i in range(2):
        assert dt.component_distance(i, x[2 * i:2 * i + 2])[0] < 1e-12


def test_lambda_independence_and_transition():
    ops, delta, rng = _delta_setup(1)
    src = DeltaSource(5.0, 2, rng.standard_normal(4), 0.8)
    Tm, cond = transition_map(delta, 5.0, 7.0 + 1j, 2)
    assert cond >= 1 and Tm.shape == (4, 4)
    pts = rng.standard_normal((400, 4)) * 0.05 + np.linalg.solve(
        np.linalg.matrix_power(5.0 * np.eye(4) - delta.to_dense(), 2), src.center)
    chk = lambda_independence(delta, src, 7.0 + 1j, pts)
    assert chk.compared + chk.excluded == 400 * 3
    assert chk.mismatches == 0 and chk.max_distance_gap < 1e-10


def test_delta_mode_harness():
    ops = [np.diag([-1j, -1j * math.sqrt(2)])]
    delta = build_delta(ops)
    traj = evolve(delta, derivatives_to_delta_state(ops, np.ones((1, 2))), EvolutionConfig(50.0, 0.01))
    src = DeltaSource(5.0, 1, (5.0 * np.eye(2) - delta.to_dense()) @ np.ones(2), 1.0)
    res = fh_harness(traj, TargetSpec((0,), delta=src), mode=HarnessMode.DELTA, delta=delta)
    assert res.report["mode"] == "DELTA"
    assert res.report["nearestApproach"]["0"]["distance"] < 1e-10
    assert 0 < res.estimate.final < 1


def test_synthesize_candidate():
    eye = np.eye(3)
    f = EigenField((0, 2), lambda t: eye[int(round(t))])
    basis = build_subspace([companion_lift(f, 2)], [[0.0, 1.0, 2.0]])
    x = synthesize_candidate(basis, seed=4)
    assert np.linalg.norm(x) == pytest.approx(1.0)
    assert np.allclose(x, synthesize_candidate(basis, seed=4))
    with pytest.raises(LengthMismatchError):
        synthesize_candidate(basis, weights=[1, 2])


def test_target_validation():
    with pytest.raises(ValueError):
        TargetSpec((), {})
    with pytest.raises(ValueError):
        TargetSpec((0,), {})
    with pytest.raises(ValueError):
        Ball([0], 0.0)
