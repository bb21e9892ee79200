"""Visit-time sets, lower-density estimates and the recurrence harness.

Nothing here certifies frequent hypercyclicity: a finite-dimensional orbit
cannot be hypercyclic.  The harness measures visit densities of concrete
target sets along a computed orbit and reports them as surrogates.
"""
from __future__ import annotations

import enum
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .dynamics import Trajectory, extract_derivatives
from .eigenfields import SubspaceBasis
from .errors import DimMismatchError, LambdaInSpectrumError, LengthMismatchError, MissingComponentError
from .reduction import BlockOperatorMatrix, build_psi

__all__ = [
    "BURN_IN_FRACTION",
    "SURROGATE_NOTE",
    "VisitSet",
    "DensityEstimate",
    "Ball",
    "DeltaSource",
    "TargetSpec",
    "DeltaTargets",
    "HarnessMode",
    "HarnessResult",
    "lower_density_discrete",
    "lower_density_continuous",
    "visit_set",
    "delta_mode_targets",
    "transition_map",
    "transitioned_source",
    "LambdaCheck",
    "lambda_independence",
    "synthesize_candidate",
    "fh_harness",
    "harness_many",
    "torus_oracle_density",
    "thread_cap",
]

BURN_IN_FRACTION = 0.05
SURROGATE_NOTE = (
    "recurrence density of a finite-dimensional orbit; a surrogate statistic, "
    "not a certificate of frequent hypercyclicity"
)


def _burn_in(t_max: float, fraction: float) -> float:
    return min(t_max, max(1.0, fraction * t_max))


@dataclass(frozen=True)
class VisitSet:
    """Visit times on ``[0, horizon]``.

    Either a boolean mask over samples ``t_k = k dt`` (sample ``k`` stands for
    ``[t_k, t_k + dt)``) or a sorted list of disjoint half-open intervals.
    """

    horizon: float
    mask: np.ndarray | None = None
    dt: float | None = None
    intervals: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if (self.mask is None) == (self.intervals is None):
            raise ValueError("give exactly one of mask or intervals")
        if self.intervals is not None:
            ivs = tuple((float(a), float(b)) for a, b in self.intervals)
            prev = 0.0
            for a, b in ivs:
                if not (prev <= a <= b <= self.horizon):
                    raise ValueError("intervals must be sorted, disjoint and inside [0, horizon]")
                prev = b
            object.__setattr__(self, "intervals", ivs)
        else:
            m = np.asarray(self.mask, dtype=bool)
            m.setflags(write=False)
            object.__setattr__(self, "mask", m)
            if not self.dt or self.dt <= 0:
                raise ValueError("mask visit sets need dt > 0")

    @classmethod
    def from_mask(cls, mask, dt: float) -> "VisitSet":
        mask = np.asarray(mask, dtype=bool)
        return cls(horizon=dt * (mask.shape[0] - 1), mask=mask, dt=dt)

    @classmethod
    def from_intervals(cls, intervals, t_max: float) -> "VisitSet":
        return cls(horizon=float(t_max), intervals=tuple(intervals))

    @property
    def kind(self) -> str:
        return "BOOLEAN_MASK" if self.mask is not None else "INTERVAL_LIST"

    def measure(self) -> float:
        if self.mask is not None:
            return float(self.dt * np.count_nonzero(self.mask[:-1]))
        return float(sum(b - a for a, b in self.intervals))

    def __len__(self):
        return int(np.count_nonzero(self.mask)) if self.mask is not None else len(self.intervals)


@dataclass(frozen=True)
class DensityEstimate:
    times: np.ndarray
    ratios: np.ndarray
    proxy: float
    burn_in: float

    @property
    def final(self) -> float:
        return float(self.ratios[-1]) if self.ratios.size else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,ratio\n")
        for t, r in zip(self.times, self.ratios):
            buf.write(f"{float(t)!r},{float(r)!r}\n")
        return buf.getvalue()


def _proxy(times, ratios, t0) -> float:
    sel = times >= t0
    if not np.any(sel):
        return float(ratios[-1]) if ratios.size else 0.0
    return float(ratios[sel].min())


def lower_density_discrete(T, n_max: int, burn_in_fraction: float = BURN_IN_FRACTION) -> DensityEstimate:
    """Running ``|T cap [1, n]| / n`` for ``n = 1..n_max`` and its tail minimum."""
    T = np.unique(np.asarray(list(T), dtype=np.int64))
    if T.size and (T[0] < 1 or T[-1] > n_max):
        raise ValueError("T must lie in [1, n_max]")
    hits = np.zeros(n_max + 1, dtype=np.int64)
    hits[T] = 1
    n = np.arange(1, n_max + 1)
    ratios = np.cumsum(hits[1:]) / n
    n0 = math.ceil(_burn_in(float(n_max), burn_in_fraction))
    return DensityEstimate(n.astype(float), ratios, _proxy(n, ratios, n0), float(n0))


def _interval_measure(starts, ends, cum, t):
    """Measure of the union of intervals intersected with ``[0, t]`` (vectorized in ``t``)."""
    idx = np.searchsorted(starts, t, side="right") - 1
    out = np.zeros(np.shape(t))
    ok = idx >= 0
    i = idx[ok]
    out[ok] = cum[i] + np.clip(np.asarray(t)[ok] - starts[i], 0.0, ends[i] - starts[i])
    return out


def lower_density_continuous(vs: VisitSet, burn_in_fraction: float = BURN_IN_FRACTION,
                             stride: int = 1) -> DensityEstimate:
    """Running ``m(T cap [0, t]) / t`` and its minimum over ``[t0, horizon]``.

    Interval lists are handled exactly: between visits the ratio decreases, so
    the minimum sits at ``t0``, at an interval start, or at the horizon.
    Masks use ``m = dt * (#true samples)``; ``stride`` thins the ratio samples
    (the proxy is the minimum over the kept samples).
    """
    t_max = vs.horizon
    t0 = _burn_in(t_max, burn_in_fraction)
    if vs.mask is not None:
        K = vs.mask.shape[0] - 1
        if K < 1:
            return DensityEstimate(np.zeros(0), np.zeros(0), 0.0, t0)
        counts = np.cumsum(vs.mask[:-1])
        k = np.arange(1, K + 1)
        keep = k[(k % stride == 0) | (k == K)]
        times = vs.dt * keep
        ratios = counts[keep - 1] / keep
        return DensityEstimate(times, ratios, _proxy(times, ratios, t0), t0)
    if not vs.intervals:
        times = np.array([t0, t_max]) if t_max > t0 else np.array([t_max])
        return DensityEstimate(times, np.zeros_like(times), 0.0, t0)
    starts = np.array([a for a, _ in vs.intervals])
    ends = np.array([b for _, b in vs.intervals])
    cum = np.concatenate([[0.0], np.cumsum(ends - starts)])[:-1]
    pts = np.concatenate([starts, ends, [t0, t_max]])
    pts = np.unique(pts[(pts > 0) & (pts <= t_max)])
    ratios = _interval_measure(starts, ends, cum, pts) / pts
    crit = np.unique(np.concatenate([starts[(starts >= t0) & (starts <= t_max)], [t0, t_max]]))
    crit = crit[crit > 0]
    proxy = float((_interval_measure(starts, ends, cum, crit) / crit).min())
    return DensityEstimate(pts, ratios, proxy, t0)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=complex).ravel())
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class DeltaSource:
    """Open set ``V = {x : ||G (x - center)|| < radius}`` in the block space.

    ``shape`` is ``G`` (identity when omitted, i.e. a ball).
    """

    lam: complex
    power: int
    center: np.ndarray
    radius: float
    shape: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=complex).ravel())
        if not self.radius > 0:
            raise ValueError("source radius must be positive")
        if self.power < 1:
            raise ValueError("power must be >= 1")


@dataclass(frozen=True)
class TargetSpec:
    """Targets ``V_i cap E_i`` for components ``i`` in ``W``.

    ``subspaces[i]`` is an orthonormal basis matrix (``d x r``) of ``E_i``;
    components without one are unconstrained.  ``delta`` switches the target
    to the Delta-mode family built from a source set in the block space.
    """

    W: tuple[int, ...]
    balls: Mapping[int, Ball] = field(default_factory=dict)
    subspaces: Mapping[int, np.ndarray] = field(default_factory=dict)
    tolerance: float = 1e-6
    delta: DeltaSource | None = None

    def __post_init__(self):
        W = tuple(sorted(set(int(i) for i in self.W)))
        if not W or W[0] < 0:
            raise ValueError("W must be a nonempty set of component indices")
        object.__setattr__(self, "W", W)
        if self.delta is None:
            missing = [i for i in W if i not in self.balls]
            if missing:
                raise ValueError(f"no ball given for components {missing}")
        if not self.tolerance > 0:
            raise ValueError("membership tolerance must be positive")

    def describe(self) -> dict:
        out = {"W": list(self.W), "tolerance": self.tolerance}
        if self.delta is None:
            out["radii"] = {str(i): _num(self.balls[i].radius) for i in self.W}
        else:
            lam = complex(self.delta.lam)
            out["lambda"] = [lam.real, lam.imag]
            out["power"] = self.delta.power
            out["radius"] = _num(self.delta.radius)
        out["subspaceConstrained"] = sorted(int(i) for i in self.subspaces)
        return out


def _num(x: float):
    return x if math.isfinite(x) else "inf"


def _subspace_ok(Y: np.ndarray, Q: np.ndarray | None, tol: float) -> np.ndarray:
    if Q is None:
        return np.ones(Y.shape[0], dtype=bool)
    proj = (Y @ Q.conj()) @ Q.T
    num = np.linalg.norm(Y - proj, axis=1)
    den = np.linalg.norm(Y, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return rel <= tol


def visit_set(derivs, target: TargetSpec, dt: float) -> VisitSet:
    """Sample times where every component ``i`` in ``W`` lies in ``V_i cap E_i``."""
    derivs = np.asarray(derivs)
    mask, _ = _component_masks(derivs, target)
    return VisitSet.from_mask(mask, dt)


def _component_masks(derivs, target: TargetSpec):
    T, n, d = derivs.shape
    mask = np.ones(T, dtype=bool)
    nearest = {}
    for i in target.W:
        if i >= n:
            raise MissingComponentError(f"component {i} not available (order {n})", component=i)
        ball = target.balls[i]
        if ball.center.shape[0] != d:
            raise DimMismatchError(f"center for component {i} has length {ball.center.shape[0]}, expected {d}")
        Y = np.ascontiguousarray(derivs[:, i, :])
        if math.isinf(ball.radius):
            inside = np.ones(T, dtype=bool)
            dist = np.linalg.norm(Y - ball.center, axis=1)
        else:
            inside, dist = _kernels.ball_mask(Y, ball.center, float(ball.radius))
        mask &= np.asarray(inside, dtype=bool) & _subspace_ok(Y, target.subspaces.get(i), target.tolerance)
        k = int(np.argmin(dist))
        nearest[i] = {"distance": float(dist[k]), "time_index": k, "radius": _num(ball.radius)}
    return mask, nearest


@dataclass
class DeltaTargets:
    """Membership tests for ``(lam - Delta)^{-p}(V)`` and its block projections.

    ``x`` is in the preimage iff ``||K x - G c|| < r`` with
    ``K = G (lam - Delta)^p``.  Block ``i`` of the projection holds ``y`` iff
    the residual of ``K_i y - G c`` orthogonal to the range of the remaining
    block columns of ``K`` is shorter than ``r``.
    """

    K: np.ndarray
    target_point: np.ndarray
    radius: float
    n: int
    d: int
    _perp: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        d = self.d
        self._perp = []
        for i in range(self.n):
            rest = np.delete(self.K, np.s_[i * d:(i + 1) * d], axis=1)
            if rest.shape[1] == 0:
                Q = np.zeros((self.K.shape[0], 0), dtype=complex)
            else:
                Q, _ = np.linalg.qr(rest)
            self._perp.append(Q)

    def state_distance(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        return np.linalg.norm(X @ self.K.T - self.target_point, axis=1)

    def contains_state(self, X) -> np.ndarray:
        return self.state_distance(X) < self.radius

    def component_distance(self, i: int, Y) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=complex))
        d = self.d
        Z = Y @ self.K[:, i * d:(i + 1) * d].T - self.target_point
        Q = self._perp[i]
        Z = Z - (Z @ Q.conj()) @ Q.T
        return np.linalg.norm(Z, axis=1)

    def contains_component(self, i: int, Y) -> np.ndarray:
        return self.component_distance(i, Y) < self.radius


def _resolvent_base(delta: BlockOperatorMatrix | np.ndarray, lam: complex) -> np.ndarray:
    D = delta.to_dense() if isinstance(delta, BlockOperatorMatrix) else np.asarray(delta, dtype=complex)
    R = complex(lam) * np.eye(D.shape[0]) - D
    smin = np.linalg.svd(R, compute_uv=False)[-1]
    if smin <= 1e-10 * max(1.0, np.linalg.norm(D, 2)):
        raise LambdaInSpectrumError(f"lambda={lam} is numerically in the spectrum (smin={smin:.3g})", smin=smin)
    return R


def delta_mode_targets(target: TargetSpec, delta: BlockOperatorMatrix) -> DeltaTargets:
    src = target.delta
    if src is None:
        raise ValueError("target has no Delta-mode source")
    R = _resolvent_base(delta, src.lam)
    K = np.linalg.matrix_power(R, src.power)
    nd = K.shape[0]
    G = np.eye(nd) if src.shape is None else np.asarray(src.shape, dtype=complex)
    if src.center.shape[0] != nd:
        raise DimMismatchError(f"source center has length {src.center.shape[0]}, expected {nd}")
    return DeltaTargets(G @ K, G @ src.center, float(src.radius), delta.n, delta.d)


def transition_map(delta: BlockOperatorMatrix, lam1: complex, lam2: complex, power: int):
    """``(lam2 - Delta)^p (lam1 - Delta)^{-p}`` and its 2-norm condition number."""
    R1 = np.linalg.matrix_power(_resolvent_base(delta, lam1), power)
    R2 = np.linalg.matrix_power(_resolvent_base(delta, lam2), power)
    Tm = np.linalg.solve(R1.T, R2.T).T
    return Tm, float(np.linalg.cond(Tm))


def transitioned_source(src: DeltaSource, delta: BlockOperatorMatrix, lam2: complex) -> DeltaSource:
    """Source set for ``lam2`` describing the same preimage as ``src`` does for its ``lam``.

    ``V2 = T V`` with ``T`` the transition map, i.e. center ``T c`` and shape
    ``G T^{-1}``.
    """
    Tm, _ = transition_map(delta, src.lam, lam2, src.power)
    nd = Tm.shape[0]
    G = np.eye(nd) if src.shape is None else np.asarray(src.shape, dtype=complex)
    shape = np.linalg.solve(Tm.T, G.T).T
    return DeltaSource(lam2, src.power, Tm @ src.center, src.radius, shape)


class LambdaCheck(NamedTuple):
    compared: int
    excluded: int
    mismatches: int
    max_distance_gap: float


def lambda_independence(delta: BlockOperatorMatrix, src: DeltaSource, lam2: complex, points,
                        margin: float = 1e-9) -> LambdaCheck:
    """Compare membership for ``src`` and its transition to ``lam2`` on sample states.

    Both the preimage and every block projection are tested.  Points whose
    distance lies within ``margin * radius`` of the boundary under either
    parameter are excluded as numerically undecidable.
    """
    X = np.atleast_2d(np.asarray(points, dtype=complex))
    t1 = delta_mode_targets(TargetSpec((0,), delta=src), delta)
    t2 = delta_mode_targets(TargetSpec((0,), delta=transitioned_source(src, delta, lam2)), delta)
    r = t1.radius
    pairs = [(t1.state_distance(X), t2.state_distance(X))]
    d = delta.d
    for i in range(delta.n):
        Y = X[:, i * d:(i + 1) * d]
        pairs.append((t1.component_distance(i, Y), t2.component_distance(i, Y)))
    compared = excluded = mismatches = 0
    gap = 0.0
    for a, b in pairs:
        gap = max(gap, float(np.max(np.abs(a - b))) / r)
        undecided = (np.abs(a - r) <= margin * r) | (np.abs(b - r) <= margin * r)
        excluded += int(np.count_nonzero(undecided))
        ok = ~undecided
        compared += int(np.count_nonzero(ok))
        mismatches += int(np.count_nonzero((a[ok] < r) != (b[ok] < r)))
    return LambdaCheck(compared, excluded, mismatches, gap)


def synthesize_candidate(basis: SubspaceBasis, weights: Sequence[complex] | None = None,
                         seed: int | None = None) -> np.ndarray:
    """Normalized vector ``sum_k c_k b_k`` in the sampled span.

    Without explicit ``weights`` the ``c_k`` are seeded standard complex
    Gaussians.  This is a heuristic stand-in for a recurrent vector.
    """
    r = basis.rank
    if weights is None:
        rng = np.random.default_rng(seed)
        c = (rng.standard_normal(r) + 1j * rng.standard_normal(r)) / math.sqrt(2)
    else:
        c = np.asarray(weights, dtype=complex).ravel()
        if c.shape[0] != r:
            raise LengthMismatchError(f"got {c.shape[0]} weights for rank {r}", expected=r)
    x = basis.columns @ c
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError("weights produce the zero vector")
    return x / nrm


class HarnessMode(enum.Enum):
    DERIVATIVE = "DERIVATIVE"
    DELTA = "DELTA"


@dataclass
class HarnessResult:
    estimate: DensityEstimate
    visits: VisitSet
    report: dict

    def report_json(self) -> str:
        return json.dumps(self.report, sort_keys=True)


def fh_harness(traj: Trajectory, target: TargetSpec, mode=HarnessMode.DERIVATIVE, ops=None,
               delta: BlockOperatorMatrix | None = None, seed: int | None = None,
               burn_in_fraction: float = BURN_IN_FRACTION, stride: int = 1) -> HarnessResult:
    """Visit density of ``target`` along ``traj``.

    DERIVATIVE tests the derivatives ``u^(i)``; DELTA tests the block combinations
    ``u^(i) + sum_{j=1}^{i} A_{n-j} u^(i-j)`` against the projected
    Delta-mode targets.
    """
    mode = HarnessMode(mode)
    ops = ops if ops is not None else traj.ops
    derivs = extract_derivatives(traj, ops)
    if mode is HarnessMode.DERIVATIVE:
        mask, nearest = _component_masks(derivs, target)
    else:
        if delta is None:
            raise ValueError("DELTA mode needs the Delta block matrix")
        if target.delta is None:
            raise ValueError("DELTA mode needs a Delta-mode target")
        if ops is None:
            raise ValueError("DELTA mode needs the operator tuple")
        T = derivs.shape[0]
        comps = _psi_rows(ops, derivs.reshape(T, -1)).reshape(derivs.shape)
        dt_targets = delta_mode_targets(target, delta)
        mask = np.ones(T, dtype=bool)
        nearest = {}
        for i in target.W:
            if i >= derivs.shape[1]:
                raise MissingComponentError(f"component {i} not available", component=i)
            Y = comps[:, i, :]
            dist = dt_targets.component_distance(i, Y)
            mask &= (dist < dt_targets.radius) & _subspace_ok(Y, target.subspaces.get(i), target.tolerance)
            k = int(np.argmin(dist))
            nearest[i] = {"distance": float(dist[k]), "time_index": k, "radius": _num(dt_targets.radius)}
    vs = VisitSet.from_mask(mask, traj.dt)
    est = lower_density_continuous(vs, burn_in_fraction, stride)
    for info in nearest.values():
        info["time"] = float(traj.times[info.pop("time_index")])
    report = {
        "target": target.describe(),
        "mode": mode.value,
        "densityProxy": est.proxy,
        "finalRatio": est.final,
        "nearestApproach": {str(i): v for i, v in sorted(nearest.items())},
        "horizon": traj.t_max,
        "seed": seed,
        "note": SURROGATE_NOTE,
    }
    return HarnessResult(est, vs, report)


def _psi_rows(ops, U: np.ndarray) -> np.ndarray:
    psi = build_psi(ops)
    d = psi.d
    out = np.zeros_like(U)
    for i, row in enumerate(psi.blocks):
        acc = out[:, i * d:(i + 1) * d]
        for k, b in enumerate(row):
            if b.kind == "zero":
                continue
            part = U[:, k * d:(k + 1) * d]
            acc += part if b.kind == "identity" else part @ b.entries.T
    return out


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("HC_LAB_THREADS", "1")))
    except ValueError:
        return 1


def harness_many(traj: Trajectory, targets: Mapping[str, TargetSpec], **kwargs) -> dict[str, HarnessResult]:
    """Run independent harnesses, at most ``HC_LAB_THREADS`` at a time; results keyed and ordered."""
    keys = sorted(targets)
    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        futures = {k: pool.submit(fh_harness, traj, targets[k], **kwargs) for k in keys}
        return {k: futures[k].result() for k in keys}


def torus_oracle_density(amplitudes, center, radius: float, samples: int = 10**6, seed: int = 0,
                         chunk: int = 200_000) -> float:
    """Fraction of the invariant torus ``{(a_k e^{i theta_k})}`` inside a ball.

    Monte Carlo with uniform independent phases; for rationally independent
    frequencies this is the time-average visit density of the rotation orbit.
    """
    a = np.asarray(amplitudes, dtype=complex).ravel()
    c = np.asarray(center, dtype=complex).ravel()
    if a.shape != c.shape:
        raise DimMismatchError("amplitudes and center differ in length")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    r2 = radius * radius
    while done < samples:
        m = min(chunk, samples - done)
        theta = rng.uniform(0.0, 2 * np.pi, size=(m, a.shape[0]))
        z = a * np.exp(1j * theta) - c
        hits += int(np.count_nonzero(np.sum(z.real**2 + z.imag**2, axis=1) < r2))
        done += m
    return hits / samples
