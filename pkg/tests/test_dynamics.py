import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab.dynamics import (
    MAX_STEPS,
    EvolutionConfig,
    RegularizedPair,
    RegularizerKind,
    acp_residual,
    build_regularizer,
    cregularized_check,
    evolve,
    extract_derivatives,
    step_matrix,
)
from hclab.errors import (
    LambdaInSpectrumError,
    NonfiniteStateError,
    NotDiagonalizableError,
    UnknownFormError,
)
from hclab.reduction import build_companion, build_delta, derivatives_to_delta_state


def test_scalar_exponential():
    traj = evolve(np.array([[-0.5]]), [2.0], EvolutionConfig(2.0, 0.01))
    assert traj.form == "OPERATOR" and traj.states.shape == (201, 1)
    assert np.allclose(traj.states[:, 0], 2 * np.exp(-0.5 * traj.times), rtol=1e-13)


def test_oscillator_companion_closed_form():
    # u'' + w^2 u = 0, u(0) = 1, u'(0) = 0
    w = 3.0
    ops = [np.array([[w**2]]), np.array([[0.0]])]
    traj = evolve(build_companion(ops), [1.0, 0.0], EvolutionConfig(4.0, 1e-3))
    D = extract_derivatives(traj)
    assert np.allclose(D[:, 0, 0], np.cos(w * traj.times), atol=1e-11)
    assert np.allclose(D[:, 1, 0], -w * np.sin(w * traj.times), atol=1e-10)
    # centered difference of u' errs by dt^2 w^4 / 6
    assert acp_residual(D, ops, traj.dt) == pytest.approx(1e-6 * w**4 / 6, rel=0.01)


def test_delta_trajectory_recovers_derivatives():
    rng = np.random.default_rng(3)
    ops = [0.4 * rng.standard_normal((3, 3)) for _ in range(3)]
    y0 = rng.standard_normal(9)
    cfg = EvolutionConfig(1.0, 1e-2)
    c = extract_derivatives(evolve(build_companion(ops), y0, cfg))
    d = extract_derivatives(evolve(build_delta(ops), derivatives_to_delta_state(ops, y0.reshape(3, 3)), cfg))
    assert np.max(np.abs(c - d)) < 1e-11


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3))
def test_step_matrix_is_semigroup(seed, n, d):
    rng = np.random.default_rng(seed)
    M = build_companion([0.5 * rng.standard_normal((d, d)) for _ in range(n)])
    S1, S2 = step_matrix(M, 0.1), step_matrix(M, 0.2)
    assert np.allclose(S1 @ S1, S2, atol=1e-12)


def test_nonfinite_state_reports_step():
    with pytest.raises(NonfiniteStateError) as exc:
        evolve(np.array([[800.0]]), [1.0], EvolutionConfig(2.0, 0.1))
    assert exc.value.details["step"] >= 1


def test_unknown_form():
    traj = evolve(np.eye(2), [1.0, 0.0], EvolutionConfig(0.1, 0.05))
    bogus = type(traj)(traj.times.copy(), traj.states.copy(), "JORDAN", 1, 2, traj.dt)
    with pytest.raises(UnknownFormError):
        extract_derivatives(bogus)


def test_config_guards():
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, 0.0)
    with pytest.raises(ValueError):
        EvolutionConfig(10.0 * MAX_STEPS, 1.0 - 1e-9)
    with pytest.raises(ValueError):
        EvolutionConfig(1.0, 0.1, stepper="EULER")


def test_trajectory_csv_and_metadata():
    traj = evolve(np.array([[1j]]), [1.0], EvolutionConfig(0.2, 0.1))
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,re0,im0" and len(lines) == 4
    assert traj.metadata()["form"] == "OPERATOR"
    with pytest.raises(ValueError):
        traj.states[0, 0] = 0


def test_spectral_gaussian_regularizer():
    A = np.diag([1j, -2j, 0.5])
    pair = build_regularizer(A)
    assert np.allclose(np.diag(pair.C.entries), np.exp(-np.abs(np.diag(A)) ** 2))
    rep = cregularized_check(pair, [0.0, 0.5, 1.0])
    assert rep.max() < 1e-9
    assert set(rep.as_dict()) == {"commuteA", "commuteC", "integral", "composition"}


def test_resolvent_regularizer():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    pair = build_regularizer(A, RegularizerKind.RESOLVENT_POWER, lambda0=10.0, k=2)
    assert cregularized_check(pair, [0.25, 0.75]).max() < 1e-8


def test_regularizer_errors():
    jordan = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NotDiagonalizableError):
        build_regularizer(jordan)
    with pytest.raises(LambdaInSpectrumError):
        build_regularizer(np.diag([1.0, 2.0]), RegularizerKind.RESOLVENT_POWER, lambda0=2.0)
    with pytest.raises(ValueError):
        RegularizedPair(np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        RegularizedPair(np.eye(2), np.diag([1.0, 0.0]))


def test_broken_composition_is_detected():
    A = np.diag([1.0, -1.0])
    C = np.array([[1.0, 1.0], [0.0, 1.0]])
    rep = cregularized_check(RegularizedPair(A, C, validate=False), [0.5])
    assert rep.commute_A > 0.1 and rep.composition > 0.1
