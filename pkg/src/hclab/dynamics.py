"""Time evolution of the reduced systems and matrix-scale regularized-semigroup checks."""
from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from . import _kernels
from .errors import (
    DimMismatchError,
    LambdaInSpectrumError,
    NonfiniteStateError,
    NotDiagonalizableError,
    UnknownFormError,
)
from .reduction import BlockOperatorMatrix, OperatorHandle, as_operator, build_psi, psi_apply_inverse

__all__ = [
    "EvolutionConfig",
    "Trajectory",
    "RegularizedPair",
    "RegularizerKind",
    "CRegReport",
    "MAX_STEPS",
    "step_matrix",
    "evolve",
    "extract_derivatives",
    "acp_residual",
    "acp_residual_curve",
    "build_regularizer",
    "cregularized_check",
]

MAX_STEPS = 10**7


@dataclass(frozen=True)
class EvolutionConfig:
    t_max: float
    dt: float
    stepper: str = "EXACT_EXPONENTIAL"

    def __post_init__(self):
        if not (self.t_max > 0 and self.dt > 0):
            raise ValueError("t_max and dt must be positive")
        if self.t_max / self.dt > MAX_STEPS:
            raise ValueError(f"t_max/dt exceeds the {MAX_STEPS:.0e} step guard")
        if self.stepper != "EXACT_EXPONENTIAL":
            raise ValueError(f"unknown stepper {self.stepper!r}")

    @property
    def nsteps(self) -> int:
        return int(round(self.t_max / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """States ``x(k dt)``, ``k = 0..K``, of ``x' = M x``.

    ``form`` is the block form of ``M`` ('COMPANION', 'DELTA') or 'OPERATOR'
    for a plain matrix; ``n`` and ``d`` describe the block layout.
    """

    times: np.ndarray
    states: np.ndarray
    form: str
    n: int
    d: int
    dt: float
    ops: tuple | None = None

    def __post_init__(self):
        for arr in (self.times, self.states):
            arr.setflags(write=False)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def metadata(self) -> dict:
        return {"form": self.form, "n": self.n, "d": self.d, "dt": self.dt, "t_max": self.t_max}

    def to_csv(self) -> str:
        """``t`` then interleaved ``re``/``im`` columns per state component."""
        m = self.states.shape[1]
        cols = ["t"] + [f"{part}{i}" for i in range(m) for part in ("re", "im")]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        inter = np.empty((self.states.shape[0], 2 * m))
        inter[:, 0::2] = self.states.real
        inter[:, 1::2] = self.states.imag
        for t, row in zip(self.times, inter):
            buf.write(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    def metadata_json(self) -> str:
        return json.dumps(self.metadata(), sort_keys=True)


def _dense(M) -> tuple[np.ndarray, str, int, int, tuple | None]:
    if isinstance(M, BlockOperatorMatrix):
        return M.to_dense(), M.form.value, M.n, M.d, M.ops
    h = as_operator(M)
    return h.entries, "OPERATOR", 1, h.dim, (h,)


def step_matrix(M, dt: float) -> np.ndarray:
    """``e^{dt M}`` via scaling and squaring with Pade approximation."""
    dense = _dense(M)[0]
    return expm(dt * dense)


def evolve(M, x0, cfg: EvolutionConfig) -> Trajectory:
    dense, form, n, d, ops = _dense(M)
    x0 = np.asarray(x0, dtype=complex).ravel()
    if x0.shape[0] != dense.shape[0]:
        raise DimMismatchError(f"initial state has length {x0.shape[0]}, system needs {dense.shape[0]}")
    step = expm(cfg.dt * dense)
    K = cfg.nsteps
    with np.errstate(over="ignore", invalid="ignore"):
        states = _kernels.propagate(step, x0, K)
    if not np.all(np.isfinite(states)):
        bad = int(np.argmax(~np.all(np.isfinite(states), axis=1)))
        raise NonfiniteStateError(f"state overflowed at step {bad} (t={bad * cfg.dt:g})", step=bad)
    times = cfg.dt * np.arange(K + 1)
    return Trajectory(times, states, form, n, d, cfg.dt, ops)


def extract_derivatives(traj: Trajectory, ops=None) -> np.ndarray:
    """``(T, n, d)`` array of ``(u, u', ..., u^(n-1))`` per time.

    COMPANION blocks are the derivatives; DELTA states go through ``Psi^{-1}``.
    """
    T = traj.states.shape[0]
    if traj.form in ("COMPANION", "OPERATOR"):
        return traj.states.reshape(T, traj.n, traj.d)
    if traj.form == "DELTA":
        ops = ops if ops is not None else traj.ops
        if ops is None:
            raise ValueError("DELTA trajectories need the operator tuple")
        Y = psi_apply_inverse(build_psi(ops), traj.states)
        return Y.reshape(T, traj.n, traj.d)
    raise UnknownFormError(f"cannot extract derivatives from form {traj.form!r}")


def acp_residual_curve(derivs, ops, dt: float) -> np.ndarray:
    """Per-time residual at interior times ``k = 1..T-2``.

    ``u^(n)`` is the centered difference of ``u^(n-1)``.
    """
    derivs = np.asarray(derivs)
    T, n, d = derivs.shape
    A = [as_operator(o).entries for o in ops]
    if len(A) != n:
        raise DimMismatchError(f"expected {n} operators, got {len(A)}")
    if T < 3:
        return np.zeros(0)
    top = (derivs[2:, n - 1] - derivs[:-2, n - 1]) / (2 * dt)
    r = top.copy()
    for i in range(n):
        r += derivs[1:-1, i] @ A[i].T
    scale = np.maximum(1.0, np.linalg.norm(derivs[1:-1, 0], axis=1))
    return np.linalg.norm(r, axis=1) / scale


def acp_residual(derivs, ops, dt: float) -> float:
    """``max_t ||u^(n) + sum_i A_i u^(i)|| / max(1, ||u||)``."""
    curve = acp_residual_curve(derivs, ops, dt)
    return float(curve.max()) if curve.size else 0.0


class RegularizerKind(enum.Enum):
    SPECTRAL_GAUSSIAN = "SPECTRAL_GAUSSIAN"
    RESOLVENT_POWER = "RESOLVENT_POWER"


@dataclass(frozen=True)
class RegularizedPair:
    """Operator ``A`` with an injective regularizer ``C`` commuting with it."""

    A: OperatorHandle
    C: OperatorHandle
    validate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "A", as_operator(self.A, "A"))
        object.__setattr__(self, "C", as_operator(self.C, "C"))
        if self.A.dim != self.C.dim:
            raise DimMismatchError("A and C must have the same dimension")
        if self.validate:
            na, nc = np.linalg.norm(self.A.entries, 2), np.linalg.norm(self.C.entries, 2)
            if self.commutator_norm() > 1e-10 * max(na * nc, np.finfo(float).tiny):
                raise ValueError("C does not commute with A")
            if self.min_singular_value() <= 0:
                raise ValueError("C is not injective")

    def commutator_norm(self) -> float:
        a, c = self.A.entries, self.C.entries
        return float(np.linalg.norm(a @ c - c @ a, 2))

    def min_singular_value(self) -> float:
        return float(np.linalg.svd(self.C.entries, compute_uv=False)[-1])


def build_regularizer(A, kind=RegularizerKind.SPECTRAL_GAUSSIAN, lambda0: complex = 1.0, k: int = 1,
                      max_cond: float = 1e8) -> RegularizedPair:
    """``C = h(A)`` with ``h(z) = exp(-|z|^2)``, or ``C = (lambda0 - A)^{-k}``."""
    A = as_operator(A, "A")
    kind = RegularizerKind(kind)
    a = A.entries
    dim = A.dim
    if kind is RegularizerKind.SPECTRAL_GAUSSIAN:
        w, V = np.linalg.eig(a)
        cond = np.linalg.cond(V)
        if not math.isfinite(cond) or cond >= max_cond:
            raise NotDiagonalizableError(f"eigenvector condition number {cond:.3g} >= {max_cond:g}", cond=cond)
        C = V @ np.diag(np.exp(-np.abs(w) ** 2)) @ np.linalg.inv(V)
    else:
        if k < 1:
            raise ValueError("resolvent power k must be >= 1")
        R = complex(lambda0) * np.eye(dim) - a
        smin = np.linalg.svd(R, compute_uv=False)[-1]
        if smin <= 1e-10 * max(1.0, np.linalg.norm(a, 2)):
            raise LambdaInSpectrumError(f"lambda0={lambda0} is (numerically) an eigenvalue", smin=smin)
        C = np.linalg.matrix_power(np.linalg.inv(R), k)
    return RegularizedPair(A, OperatorHandle(C, kind.value))


@dataclass(frozen=True)
class CRegReport:
    commute_A: float
    commute_C: float
    integral: float
    composition: float

    def as_dict(self) -> dict:
        return {
            "commuteA": self.commute_A,
            "commuteC": self.commute_C,
            "integral": self.integral,
            "composition": self.composition,
        }

    def max(self) -> float:
        return max(self.commute_A, self.commute_C, self.integral, self.composition)


def cregularized_check(pair: RegularizedPair, ts: Sequence[float], quad_tol: float = 1e-10) -> CRegReport:
    """Residuals of the regularized-semigroup identities for ``T(t) = e^{tA} C``.

    (i) ``T(t)A - AT(t)``, (ii) ``T(t)C - CT(t)``,
    (iii) ``A int_0^t T(s) ds - (T(t) - C)`` (adaptive quadrature), and the
    composition law ``T(t)T(s) - T(t+s)C`` over all pairs; spectral norms.
    """
    a, c = pair.A.entries, pair.C.entries
    ts = [float(t) for t in ts]

    def T(t):
        return expm(t * a) @ c

    r1 = r2 = r3 = r4 = 0.0
    for t in ts:
        Tt = T(t)
        r1 = max(r1, np.linalg.norm(Tt @ a - a @ Tt, 2))
        r2 = max(r2, np.linalg.norm(Tt @ c - c @ Tt, 2))
        if t > 0:
            integral, _ = quad_vec(T, 0.0, t, epsabs=quad_tol * 1e-2, epsrel=quad_tol)
        else:
            integral = np.zeros_like(c)
        r3 = max(r3, np.linalg.norm(a @ integral - (Tt - c), 2))
    for t in ts:
        for s in ts:
            r4 = max(r4, np.linalg.norm(T(t) @ T(s) - T(t + s) @ c, 2))
    return CRegReport(float(r1), float(r2), float(r3), float(r4))

