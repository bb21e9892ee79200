"""Finite-dimensional operator realizations.

* :func:`diag_model` -- diagonal matrices with a prescribed spectrum.
* :func:`ou_matrix` -- finite differences for ``u'' + b x u' + c u`` on
  ``[-L, L)`` with decaying boundary behaviour.
* :func:`derivative_matrix` -- Fourier spectral ``d/ds`` on a periodic grid.

plus the eigenfunction generator for the OU operator and the admissible
weight check used by weighted spaces.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import BoundaryMismatchError, GridTooCoarseError, OutOfOmegaError
from .polyspec import poly_eval
from .reduction import OperatorHandle

__all__ = [
    "Boundary",
    "GridSpec",
    "OUParams",
    "WeightSpec",
    "AdmissibilityResult",
    "diag_model",
    "ou_matrix",
    "ou_eigenfunction",
    "ou_apply_exact",
    "derivative_matrix",
    "derivative_poly",
    "admissible_weight_check",
    "weighted_norm",
    "eigenfunction_csv",
]


class Boundary(enum.Enum):
    PERIODIC = "PERIODIC"
    DECAYING = "DECAYING"


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``x_k = -L + k h``, ``k = 0..N-1``, ``h = 2L/N``."""

    L: float
    N: int
    boundary: Boundary = Boundary.DECAYING

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("half-width L must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("point count N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @classmethod
    def periodic(cls, N: int = 256, L: float = math.pi) -> "GridSpec":
        return cls(L, N, Boundary.PERIODIC)

    @classmethod
    def decaying(cls, N: int = 2048, L: float = 20.0) -> "GridSpec":
        return cls(L, N, Boundary.DECAYING)


@dataclass(frozen=True)
class OUParams:
    b: float = 1.0
    c: float = 2.0

    def __post_init__(self):
        if not (self.c > self.b / 2 > 0):
            raise ValueError(f"need c > b/2 > 0, got b={self.b}, c={self.c}")

    @property
    def omega_edge(self) -> float:
        """Eigenfunctions exist for ``Re(lambda) < c - b/2``."""
        return self.c - self.b / 2


@dataclass(frozen=True)
class WeightSpec:
    rho: np.ndarray
    M: float = 1.0
    omega: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim != 1 or not np.all(rho > 0):
            raise ValueError("weight samples must be a strictly positive 1-D array")
        if self.M < 1:
            raise ValueError("admissibility constant M must be >= 1")
        object.__setattr__(self, "rho", rho)


def diag_model(mu) -> OperatorHandle:
    mu = np.asarray(mu, dtype=complex).ravel()
    return OperatorHandle(np.diag(mu), "diag")


def ou_matrix(params: OUParams, grid: GridSpec) -> OperatorHandle:
    """Second-order finite differences for ``u'' + b x u' + c u``.

    Interior rows use central stencils.  The two edge rows use one-sided
    second-order stencils and no ghost values.
    """
    if grid.boundary is not Boundary.DECAYING:
        raise BoundaryMismatchError("the OU operator is discretized on a DECAYING grid")
    N, h = grid.N, grid.h
    if N < 8:
        raise GridTooCoarseError(f"need N >= 8 points, got {N}", N=N)
    x = grid.x
    D2 = np.zeros((N, N))
    D1 = np.zeros((N, N))
    idx = np.arange(1, N - 1)
    D2[idx, idx - 1] = 1.0
    D2[idx, idx] = -2.0
    D2[idx, idx + 1] = 1.0
    D1[idx, idx - 1] = -0.5
    D1[idx, idx + 1] = 0.5
    D2[0, :4] = [2.0, -5.0, 4.0, -1.0]
    D2[-1, -4:] = [-1.0, 4.0, -5.0, 2.0]
    D1[0, :3] = [-1.5, 2.0, -0.5]
    D1[-1, -3:] = [0.5, -2.0, 1.5]
    A = D2 / h**2 + (params.b * x)[:, None] * (D1 / h) + params.c * np.eye(N)
    return OperatorHandle(A, f"OU(b={params.b}, c={params.c})")


def _ou_profile(xi: np.ndarray, lam: complex, branch: int, params: OUParams) -> np.ndarray:
    """``e^{-xi^2/2b} |xi|^p`` (branch 2) or ``sign(xi)`` times it (branch 1).

    ``p = -(1 + (lam - c)/b)``; ``xi |xi|^{-(2 + (lam-c)/b)}`` equals
    ``sign(xi) |xi|^p``.
    """
    b, c = params.b, params.c
    p = -(1.0 + (lam - c) / b)
    a = np.abs(xi)
    prof = np.zeros(xi.shape, dtype=complex)
    nz = a > 0
    prof[nz] = np.exp(-xi[nz] ** 2 / (2 * b)) * a[nz] ** p
    if branch == 1:
        prof *= np.sign(xi)
    elif p == 0:
        # finite limit at the origin; only singular profiles lose the zero bin
        prof[~nz] = 1.0
    return prof


def ou_eigenfunction(lam: complex, branch: int, params: OUParams, grid: GridSpec, pad: int = 32) -> np.ndarray:
    """Grid samples of the inverse Fourier transform of the OU eigenprofile.

    The profile is sampled on the dual grid of an extended domain of half-width
    ``pad * L`` (same spacing), transformed with one FFT and restricted to the
    working grid.  The extension keeps the slowly decaying tails of the
    eigenfunction from wrapping back onto ``[-L, L)``.  Returns a unit-norm vector.
    """
    lam = complex(lam)
    if not lam.real < params.omega_edge:
        raise OutOfOmegaError(f"Re(lambda)={lam.real} not below c - b/2 = {params.omega_edge}", lam=lam)
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    pad = max(1, int(pad))
    N, h = grid.N, grid.h
    M = pad * N
    x0 = -pad * grid.L
    xi = 2 * np.pi * np.fft.fftfreq(M, d=h)
    prof = _ou_profile(xi, lam, branch, params)
    f = np.fft.ifft(prof * np.exp(1j * xi * x0))
    s = (M - N) // 2
    f = f[s:s + N]
    nrm = np.linalg.norm(f)
    if nrm == 0:
        raise OutOfOmegaError("eigenprofile vanished on this grid", lam=lam)
    return f / nrm


def ou_apply_exact(u, du, d2u, x, params: OUParams):
    """Apply ``u'' + b x u' + c u`` to analytically known derivatives."""
    return d2u + params.b * x * du + params.c * u


def derivative_matrix(grid: GridSpec) -> OperatorHandle:
    """Fourier spectral differentiation on a periodic grid of period ``2L``.

    Uses the closed-form cotangent entries for even ``N`` (the Nyquist mode is
    mapped to zero), which makes the matrix exactly skew-symmetric.
    """
    if grid.boundary is not Boundary.PERIODIC:
        raise BoundaryMismatchError("spectral differentiation needs a PERIODIC grid")
    N = grid.N
    scale = math.pi / grid.L
    k = np.arange(N)
    diff = k[:, None] - k[None, :]
    D = np.zeros((N, N))
    off = diff != 0
    theta = diff[off] * (2 * math.pi / N)
    if N % 2 == 0:
        D[off] = 0.5 * (-1.0) ** diff[off] / np.tan(theta / 2)
    else:
        D[off] = 0.5 * (-1.0) ** diff[off] / np.sin(theta / 2)
    D *= scale
    D = 0.5 * (D - D.T)
    return OperatorHandle(D, "d/ds")


def _wavenumbers(grid: GridSpec) -> np.ndarray:
    N = grid.N
    k = np.fft.fftfreq(N, d=1.0 / N) * (math.pi / grid.L)
    if N % 2 == 0:
        k[N // 2] = 0.0
    return k


def derivative_poly(p, grid: GridSpec) -> OperatorHandle:
    """``P(d/ds)`` as the circulant with symbol ``P(i k)``.

    Agrees with ``matrix_poly(p, derivative_matrix(grid))`` in exact
    arithmetic (the Nyquist mode again sees ``k = 0``) but avoids the
    rounding of repeated dense products.
    """
    if grid.boundary is not Boundary.PERIODIC:
        raise BoundaryMismatchError("spectral differentiation needs a PERIODIC grid")
    symbol = np.array([poly_eval(p, 1j * k) for k in _wavenumbers(grid)], dtype=complex)
    col = np.fft.ifft(symbol)
    N = grid.N
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return OperatorHandle(col[idx], "P(d/ds)")


class AdmissibilityResult(NamedTuple):
    admissible: bool
    worst_ratio: float
    worst_pair: tuple[float, float]


def admissible_weight_check(w: WeightSpec, grid: GridSpec, slack: float = 1e-12) -> AdmissibilityResult:
    """Exhaustively test ``rho(t) <= M e^{omega |t'|} rho(t + t')`` on grid pairs.

    Both ``t`` and ``t + t'`` range over the grid points; ``t'`` is their real
    difference.  The worst ratio ``rho(t) / (M e^{omega|t'|} rho(t+t'))`` is
    returned together with ``(t, t')``.
    """
    if w.rho.shape[0] != grid.N:
        raise ValueError("weight samples do not match the grid")
    s = grid.x
    val, i, j = _kernels.weight_worst_log_ratio(np.log(w.rho), s, math.log(w.M), float(w.omega))
    ratio = math.exp(val) if val < 700 else math.inf
    return AdmissibilityResult(ratio <= 1.0 + slack, ratio, (float(s[i]), float(s[j] - s[i])))


def weighted_norm(u, rho, h: float) -> float:
    """Discrete ``L^2_rho`` norm with diagonal weights ``rho(s_k) h``."""
    u = np.asarray(u)
    return float(np.sqrt(np.sum(np.abs(u) ** 2 * np.asarray(rho) * h)))


def eigenfunction_csv(x, f) -> str:
    lines = ["x,re,im"]
    for xv, fv in zip(np.asarray(x), np.asarray(f, dtype=complex)):
        lines.append(f"{float(xv)!r},{float(fv.real)!r},{float(fv.imag)!r}")
    return "\n".join(lines) + "\n"
