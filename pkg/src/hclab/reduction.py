"""First-order block reductions of the n-th order problem

    u^(n) + A_{n-1} u^(n-1) + ... + A_0 u = 0.

Three block matrices are built from the operator tuple ``(A_0, ..., A_{n-1})``:

COMPANION
    state = (u, u', ..., u^(n-1)); superdiagonal identities, last row
    ``(-A_0, ..., -A_{n-1})``.
DELTA
    first column ``(-A_{n-1}, ..., -A_0)`` top to bottom, superdiagonal
    identities.  Its state blocks are the combinations
    ``v_{i+1} = u^(i) + sum_{j=1}^{i} A_{n-j} u^(i-j)``.
PSI
    the unit lower-triangular map taking derivative data to DELTA state,
    ``Psi[i][k] = A_{n-(i-k)}`` for ``k < i``.  Then ``Delta = Psi C Psi^{-1}``
    with ``C`` the companion matrix.

Signs in PSI are ``+``: row-by-row differentiation of ``v' = Delta v`` forces
them, and the eigen-consistency tests in ``tests/test_reduction.py`` pin the
convention down.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimMismatchError

__all__ = [
    "OperatorHandle",
    "BlockForm",
    "BlockOperatorMatrix",
    "InitialData",
    "as_operator",
    "build_companion",
    "build_delta",
    "build_psi",
    "psi_apply_inverse",
    "derivatives_to_delta_state",
    "delta_state_to_derivatives",
]


class OperatorHandle:
    """A finite square complex matrix standing in for a closed operator."""

    __slots__ = ("entries", "label", "_kind")

    def __init__(self, entries, label: str = ""):
        m = np.array(entries, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimMismatchError(f"operator must be a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("operator entries must be finite")
        m.setflags(write=False)
        self.entries = m
        self.label = label
        self._kind = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def kind(self) -> str:
        """'zero', 'identity' or 'general'; used to skip trivial blocks."""
        if self._kind is None:
            m = self.entries
            if not m.any():
                self._kind = "zero"
            elif np.array_equal(m, np.eye(self.dim)):
                self._kind = "identity"
            else:
                self._kind = "general"
        return self._kind

    def __matmul__(self, other):
        return self.entries @ other

    def __repr__(self):
        return f"OperatorHandle(dim={self.dim}, label={self.label!r})"

    @classmethod
    def zero(cls, d: int) -> "OperatorHandle":
        return cls(np.zeros((d, d)), "0")

    @classmethod
    def identity(cls, d: int) -> "OperatorHandle":
        return cls(np.eye(d), "I")


def as_operator(op, label: str = "") -> OperatorHandle:
    if isinstance(op, OperatorHandle):
        return op
    return OperatorHandle(op, label)


class BlockForm(enum.Enum):
    COMPANION = "COMPANION"
    DELTA = "DELTA"
    PSI = "PSI"


class BlockOperatorMatrix:
    """``n x n`` array of ``d x d`` blocks.

    Zero and identity blocks are stored as shared handles, so memory grows
    with the number of distinct operators rather than with ``n**2``.
    """

    def __init__(self, blocks: Sequence[Sequence[OperatorHandle]], form: BlockForm, ops=None):
        self.blocks = [list(row) for row in blocks]
        self.n = len(self.blocks)
        if any(len(row) != self.n for row in self.blocks):
            raise DimMismatchError("block array must be square")
        dims = {b.dim for row in self.blocks for b in row}
        if len(dims) != 1:
            raise DimMismatchError(f"blocks have mixed dimensions {sorted(dims)}")
        self.d = dims.pop()
        self.form = BlockForm(form)
        self.ops = tuple(ops) if ops is not None else None

    @property
    def size(self) -> int:
        return self.n * self.d

    @property
    def shape(self) -> tuple[int, int]:
        return (self.size, self.size)

    def to_dense(self) -> np.ndarray:
        return np.block([[b.entries for b in row] for row in self.blocks])

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != self.size:
            raise DimMismatchError(f"vector has length {v.shape[0]}, expected {self.size}")
        d = self.d
        parts = [v[k * d:(k + 1) * d] for k in range(self.n)]
        out = np.zeros_like(v)
        for i, row in enumerate(self.blocks):
            acc = out[i * d:(i + 1) * d]
            for k, b in enumerate(row):
                kind = b.kind
                if kind == "zero":
                    continue
                if kind == "identity":
                    acc += parts[k]
                else:
                    acc += b.entries @ parts[k]
        return out

    def __matmul__(self, v):
        return self.matvec(v)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "form": self.form.value,
            "blocks": [
                [[[[float(z.real), float(z.imag)] for z in r] for r in b.entries] for b in row]
                for row in self.blocks
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data) -> "BlockOperatorMatrix":
        if isinstance(data, str):
            data = json.loads(data)
        n, d = int(data["n"]), int(data["d"])
        blocks = []
        for row in data["blocks"]:
            hrow = []
            for b in row:
                arr = np.array(b, dtype=float)
                hrow.append(OperatorHandle(arr[..., 0] + 1j * arr[..., 1]))
            blocks.append(hrow)
        bm = cls(blocks, BlockForm(data["form"]))
        if bm.n != n or bm.d != d:
            raise DimMismatchError("envelope n/d disagree with block data")
        return bm


@dataclass(frozen=True)
class InitialData:
    """Initial derivatives ``(u_0, ..., u_{n-1})``, each a ``d``-vector."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise DimMismatchError("initial data must be n vectors of equal length")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def stacked(self) -> np.ndarray:
        return self.values.reshape(-1).copy()


def _prepare(ops) -> tuple[list[OperatorHandle], int]:
    handles = [as_operator(op, f"A{i}") for i, op in enumerate(ops)]
    if not handles:
        raise ValueError("need at least one operator")
    d = handles[0].dim
    for h in handles:
        if h.dim != d:
            raise DimMismatchError(f"operators have dimensions {[h.dim for h in handles]}")
    return handles, d


def _negated(h: OperatorHandle, zero: OperatorHandle) -> OperatorHandle:
    if h.kind == "zero":
        return zero
    return OperatorHandle(-h.entries, f"-{h.label}")


def build_companion(ops) -> BlockOperatorMatrix:
    A, d = _prepare(ops)
    n = len(A)
    Z, I = OperatorHandle.zero(d), OperatorHandle.identity(d)
    blocks = [[Z] * n for _ in range(n)]
    for i in range(n - 1):
        blocks[i][i + 1] = I
    blocks[n - 1] = [_negated(a, Z) for a in A]
    return BlockOperatorMatrix(blocks, BlockForm.COMPANION, A)


def build_delta(ops) -> BlockOperatorMatrix:
    A, d = _prepare(ops)
    n = len(A)
    Z, I = OperatorHandle.zero(d), OperatorHandle.identity(d)
    blocks = [[Z] * n for _ in range(n)]
    for i in range(n):
        blocks[i][0] = _negated(A[n - 1 - i], Z)
        if i + 1 < n:
            blocks[i][i + 1] = I
    return BlockOperatorMatrix(blocks, BlockForm.DELTA, A)


def build_psi(ops) -> BlockOperatorMatrix:
    A, d = _prepare(ops)
    n = len(A)
    Z, I = OperatorHandle.zero(d), OperatorHandle.identity(d)
    blocks = [[Z] * n for _ in range(n)]
    for i in range(n):
        blocks[i][i] = I
        for k in range(i):
            a = A[n - (i - k)]
            blocks[i][k] = Z if a.kind == "zero" else a
    return BlockOperatorMatrix(blocks, BlockForm.PSI, A)


def psi_apply_inverse(psi: BlockOperatorMatrix, v) -> np.ndarray:
    """Block forward substitution for the unit lower-triangular ``Psi``.

    ``v`` may be a single stacked vector or a ``(T, n*d)`` array of them.
    """
    if psi.form is not BlockForm.PSI:
        raise ValueError(f"expected a PSI block matrix, got {psi.form.value}")
    v = np.asarray(v, dtype=complex)
    single = v.ndim == 1
    V = v.reshape(1, -1) if single else v
    if V.shape[1] != psi.size:
        raise DimMismatchError(f"vector has length {V.shape[1]}, expected {psi.size}")
    n, d = psi.n, psi.d
    Y = np.empty_like(V)
    for i in range(n):
        acc = V[:, i * d:(i + 1) * d].copy()
        for k in range(i):
            b = psi.blocks[i][k]
            if b.kind == "zero":
                continue
            acc -= Y[:, k * d:(k + 1) * d] @ b.entries.T
        Y[:, i * d:(i + 1) * d] = acc
    return Y[0] if single else Y


def _as_initial(init, d: int, n: int) -> np.ndarray:
    if not isinstance(init, InitialData):
        init = InitialData(init)
    if init.n != n or init.d != d:
        raise DimMismatchError(f"initial data is {init.n}x{init.d}, operators need {n}x{d}")
    return init.stacked()


def derivatives_to_delta_state(ops, init) -> np.ndarray:
    """``x = Psi (u_0, ..., u_{n-1})``."""
    psi = build_psi(ops)
    return psi.matvec(_as_initial(init, psi.d, psi.n))


def delta_state_to_derivatives(ops, x) -> np.ndarray:
    return psi_apply_inverse(build_psi(ops), x)
