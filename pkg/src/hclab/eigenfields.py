"""Eigenvector fields and their lifts to the block state space.

A scalar field ``t -> f(t)`` with ``A f(t) = g(it) f(t)`` is lifted to an
``n``-block field ``F(t)``:

* companion lift: ``F(t) = (f, it f, ..., (it)^{n-1} f)``;
* Delta lift: block ``s`` (1-based) is
  ``sum_{l=0}^{s-2} (it)^l A_{n-s+1+l} f + (it)^{s-1} f``.

When the characteristic condition holds at ``t`` the lift satisfies
``M F(t) = it F(t)`` for the companion resp. Delta matrix.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimMismatchError, EmptySamplesError, IndexOutOfRangeError
from .polyspec import SymbolCurve, _as_poly, poly_eval
from .reduction import BlockOperatorMatrix, OperatorHandle, as_operator

__all__ = [
    "EigenField",
    "LiftKind",
    "CompanionEigenField",
    "SubspaceBasis",
    "chebyshev_points",
    "companion_lift",
    "delta_lift",
    "eigen_residual",
    "eigen_residuals",
    "build_subspace",
    "subspace_residual",
    "RANK_RTOL",
]

RANK_RTOL = 1e-10


def chebyshev_points(a: float, b: float, count: int = 17) -> np.ndarray:
    """Chebyshev extreme points mapped to ``[a, b]``, ascending."""
    if count == 1:
        return np.array([(a + b) / 2])
    k = np.arange(count)
    return np.sort((a + b) / 2 - (b - a) / 2 * np.cos(np.pi * k / (count - 1)))


@dataclass
class EigenField:
    """Parameterized eigenvector family on an interval.

    ``smoothness`` records the analytic hypothesis (twice continuous
    differentiability in ``t``); it is metadata and is never checked.
    """

    interval: tuple[float, float]
    evaluator: Callable[[float], np.ndarray]
    g: SymbolCurve = field(default_factory=SymbolCurve.identity)
    tolerance: float = 1e-12
    smoothness: str = "C^2 in t (assumed, not checked)"
    label: str = ""

    def __call__(self, t: float) -> np.ndarray:
        a, b = self.interval
        if not a <= t <= b:
            raise ValueError(f"t={t} outside [{a}, {b}]")
        return np.asarray(self.evaluator(t), dtype=complex)

    def backend_residual(self, A, ts) -> float:
        """Max of ``||A f(t) - g(it) f(t)|| / ||f(t)||`` over ``ts``."""
        A = as_operator(A).entries
        ts = list(ts)
        if not ts:
            raise EmptySamplesError("no sample times")
        worst = 0.0
        for t in ts:
            f = self(t)
            worst = max(worst, np.linalg.norm(A @ f - self.g(t) * f) / np.linalg.norm(f))
        return float(worst)


class LiftKind(enum.Enum):
    COMPANION = "COMPANION"
    DELTA = "DELTA"


@dataclass
class CompanionEigenField:
    """Lifted field.

    The Delta lift needs ``A_k f(t)``.  With ``ops`` it applies the matrices;
    with ``polys`` it uses ``A_k f = P_k(g(it)) f``, valid when ``f(t)`` is an
    exact eigenvector, which avoids the rounding of large-norm matrices.
    """

    base: EigenField
    n: int
    kind: LiftKind
    ops: tuple[OperatorHandle, ...] | None = None
    polys: tuple | None = None

    @property
    def interval(self):
        return self.base.interval

    def __call__(self, t: float) -> np.ndarray:
        f = self.base(t)
        it = 1j * t
        n = self.n
        if self.kind is LiftKind.COMPANION:
            return np.concatenate([it**s * f for s in range(n)])
        if self.polys is not None:
            z = self.base.g(t)
            Af = {k: poly_eval(self.polys[k], z) * f for k in range(1, n)}
        else:
            # A_k f for k = 1..n-1, computed once per t
            Af = {k: self._op(k).entries @ f for k in range(1, n)}
        blocks = []
        for s in range(1, n + 1):
            blk = it ** (s - 1) * f
            for l in range(s - 1):
                blk = blk + it**l * Af[n - s + 1 + l]
            blocks.append(blk)
        return np.concatenate(blocks)

    def _op(self, k: int) -> OperatorHandle:
        if not 1 <= k <= self.n - 1:
            raise IndexOutOfRangeError(f"operator index {k} outside 1..{self.n - 1}", index=k)
        return self.ops[k]


def companion_lift(base: EigenField, n: int) -> CompanionEigenField:
    if n < 1:
        raise ValueError("order n must be >= 1")
    return CompanionEigenField(base, n, LiftKind.COMPANION)


def delta_lift(base: EigenField, n: int, ops: Sequence | None = None, polys: Sequence | None = None
               ) -> CompanionEigenField:
    """Delta-system lift.

    ``ops`` is either the full tuple ``(A_0, ..., A_{n-1})`` or just
    ``(A_1, ..., A_{n-1})``; ``A_0`` never enters the lift.  Passing the
    polynomials ``(P_0, ..., P_{n-1})`` instead evaluates ``A_k f`` through
    the symbol.
    """
    if n < 1:
        raise ValueError("order n must be >= 1")
    if (ops is None) == (polys is None):
        raise ValueError("give exactly one of ops or polys")
    if polys is not None:
        polys = tuple(_as_poly(p) for p in polys)
        if len(polys) != n:
            raise DimMismatchError(f"expected {n} polynomials, got {len(polys)}")
        return CompanionEigenField(base, n, LiftKind.DELTA, polys=polys)
    ops = [as_operator(o) for o in ops]
    if len(ops) == n - 1:
        ops = [None] + ops
    elif len(ops) != n:
        raise DimMismatchError(f"expected {n} or {n - 1} operators, got {len(ops)}")
    dims = {o.dim for o in ops[1:]}
    if len(dims) > 1:
        raise DimMismatchError(f"operators have mixed dimensions {sorted(dims)}")
    return CompanionEigenField(base, n, LiftKind.DELTA, tuple(ops))


def eigen_residuals(M: BlockOperatorMatrix, F: CompanionEigenField, ts) -> np.ndarray:
    ts = list(ts)
    if not ts:
        raise EmptySamplesError("no sample times")
    out = np.empty(len(ts))
    for k, t in enumerate(ts):
        v = F(t)
        if v.shape[0] != M.size:
            raise DimMismatchError(f"field has length {v.shape[0]}, matrix needs {M.size}")
        out[k] = np.linalg.norm(M.matvec(v) - 1j * t * v) / np.linalg.norm(v)
    return out


def eigen_residual(M: BlockOperatorMatrix, F: CompanionEigenField, ts) -> float:
    """``max_t ||M F(t) - it F(t)|| / ||F(t)||``."""
    return float(eigen_residuals(M, F, ts).max())


def _orthonormal_range(X: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    if X.size == 0:
        return np.zeros((X.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((X.shape[0], 0), dtype=complex)
    r = int(np.sum(s > rtol * s[0]))
    return U[:, :r]


@dataclass
class SubspaceBasis:
    """Orthonormal basis for the span of sampled lifted fields.

    ``block_bases[i]`` spans the projection onto block ``i`` (0-based).
    """

    columns: np.ndarray
    n: int
    d: int
    samples: list[tuple[int, float]]
    block_bases: list[np.ndarray]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    @property
    def nd(self) -> int:
        return self.n * self.d

    def projector(self) -> np.ndarray:
        Q = self.columns
        return Q @ Q.conj().T

    def block_projector(self, i: int) -> np.ndarray:
        Q = self.block_bases[i]
        return Q @ Q.conj().T

    def to_json(self) -> dict:
        return {
            "nd": self.nd,
            "rank": self.rank,
            "columns": [[[float(z.real), float(z.imag)] for z in col] for col in self.columns.T],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def build_subspace(fields: Sequence[CompanionEigenField], ts_per_field, rtol: float = RANK_RTOL) -> SubspaceBasis:
    fields = list(fields)
    if len(ts_per_field) != len(fields):
        raise ValueError("need one sample list per field")
    cols, samples = [], []
    for j, (F, ts) in enumerate(zip(fields, ts_per_field)):
        for t in ts:
            cols.append(F(t))
            samples.append((j, float(t)))
    if not cols:
        raise EmptySamplesError("no samples for the subspace")
    X = np.column_stack(cols)
    n = fields[0].n
    if X.shape[0] % n:
        raise DimMismatchError("sample length is not a multiple of the order")
    d = X.shape[0] // n
    Q = _orthonormal_range(X, rtol)
    blocks = [_orthonormal_range(Q[i * d:(i + 1) * d, :], rtol) for i in range(n)]
    return SubspaceBasis(Q, n, d, samples, blocks)


def _relative_residual(x: np.ndarray, Q: np.ndarray) -> float:
    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0
    return float(np.linalg.norm(x - Q @ (Q.conj().T @ x)) / nx)


def subspace_residual(x, basis: SubspaceBasis, block: int | None = None) -> float:
    """``||x - P x|| / ||x||`` against the span (or against block ``block``'s projection).

    The zero vector has residual 0.
    """
    x = np.asarray(x, dtype=complex)
    if block is None:
        if x.shape[0] != basis.nd:
            raise DimMismatchError(f"vector has length {x.shape[0]}, basis lives in {basis.nd}")
        return _relative_residual(x, basis.columns)
    if x.shape[0] != basis.d:
        raise DimMismatchError(f"block vector has length {x.shape[0]}, expected {basis.d}")
    return _relative_residual(x, basis.block_bases[block])

