"""Complex polynomials in one variable and the characteristic spectral condition.

Coefficients are held exactly as pairs of :class:`fractions.Fraction`
(real part, imaginary part).  Every finite float is a dyadic rational, so
converting float input is lossless and all ring arithmetic below is exact.
Evaluation is done in ordinary complex floating point.

The characteristic condition of order ``n`` for polynomials
``P_0, ..., P_{n-1}`` and symbol curve ``g`` reads::

    r(t) = (it)^n + sum_{l=0}^{n-1} (it)^l P_l(g(it)) = 0,   t in I.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NotDivisibleError, OutOfDomainError, UnsupportedCurveError

__all__ = [
    "ComplexPoly",
    "CurveKind",
    "SymbolCurve",
    "SpectralCondition",
    "ConditionCheck",
    "poly_eval",
    "matrix_poly",
    "characteristic_residual",
    "characteristic_poly",
    "condition_holds_symbolic",
    "complete_condition",
    "ou_example_polys",
]

_ZERO = (Fraction(0), Fraction(0))


def _exact(value) -> tuple[Fraction, Fraction]:
    """Convert a scalar (or an ``(re, im)`` pair) to an exact Gaussian rational."""
    if isinstance(value, tuple) and len(value) == 2:
        re, im = value
        return (_exact_real(re), _exact_real(im))
    if isinstance(value, (list,)) and len(value) == 2:
        return (_exact_real(value[0]), _exact_real(value[1]))
    if isinstance(value, (complex, np.complexfloating)):
        return (_exact_real(value.real), _exact_real(value.imag))
    if isinstance(value, Number):
        return (_exact_real(value), Fraction(0))
    raise TypeError(f"cannot interpret {value!r} as a complex coefficient")


def _exact_real(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("polynomial coefficients must be finite")
    return Fraction(x)


def _mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _to_complex(c) -> complex:
    return complex(float(c[0]), float(c[1]))


class ComplexPoly:
    """Dense complex polynomial, coefficients lowest degree first.

    >>> p = ComplexPoly([0, -1, 1])   # z^2 - z
    >>> p(2)
    (2+0j)
    >>> p.degree
    2
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Sequence = ()):
        c = [_exact(v) for v in coeffs]
        while c and c[-1] == _ZERO:
            c.pop()
        self._c = tuple(c)

    @classmethod
    def _from_exact(cls, c) -> "ComplexPoly":
        obj = cls.__new__(cls)
        c = list(c)
        while c and c[-1] == _ZERO:
            c.pop()
        obj._c = tuple(c)
        return obj

    @classmethod
    def monomial(cls, k: int, coeff=1) -> "ComplexPoly":
        return cls([0] * k + [coeff])

    @classmethod
    def zero(cls) -> "ComplexPoly":
        return cls()

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    @property
    def coeffs(self) -> list[complex]:
        return [_to_complex(c) for c in self._c]

    @property
    def exact_coeffs(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return self._c

    def is_zero(self) -> bool:
        return not self._c

    def __call__(self, z):
        return poly_eval(self, z)

    def __eq__(self, other):
        if isinstance(other, ComplexPoly):
            return self._c == other._c
        return NotImplemented

    def __hash__(self):
        return hash(self._c)

    def __repr__(self):
        return f"ComplexPoly({self.coeffs!r})"

    def __neg__(self):
        return ComplexPoly._from_exact((-a, -b) for a, b in self._c)

    def __add__(self, other):
        other = _as_poly(other)
        m = max(len(self._c), len(other._c))
        a = self._c + (_ZERO,) * (m - len(self._c))
        b = other._c + (_ZERO,) * (m - len(other._c))
        return ComplexPoly._from_exact(_add(x, y) for x, y in zip(a, b))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if not self._c or not other._c:
            return ComplexPoly()
        out = [_ZERO] * (len(self._c) + len(other._c) - 1)
        for i, a in enumerate(self._c):
            for j, b in enumerate(other._c):
                out[i + j] = _add(out[i + j], _mul(a, b))
        return ComplexPoly._from_exact(out)

    __rmul__ = __mul__

    def shift(self, k: int) -> "ComplexPoly":
        """Multiply by ``z**k`` (``k >= 0``) or exactly divide by ``z**-k``.

        Division drops the low coefficients; callers check divisibility first.
        """
        if k >= 0:
            return ComplexPoly._from_exact((_ZERO,) * k + self._c)
        return ComplexPoly._from_exact(self._c[-k:])

    def to_json(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in self._c]

    @classmethod
    def from_json(cls, data) -> "ComplexPoly":
        if isinstance(data, str):
            data = json.loads(data)
        return cls([(float(re), float(im)) for re, im in data])


def _as_poly(x) -> ComplexPoly:
    if isinstance(x, ComplexPoly):
        return x
    return ComplexPoly([x])


def poly_eval(p: ComplexPoly, z) -> complex:
    """Horner evaluation at a complex point."""
    c = p.coeffs
    if not c:
        return 0j
    acc = c[-1]
    for a in reversed(c[:-1]):
        acc = acc * z + a
    return complex(acc)


def matrix_poly(p: ComplexPoly, A: np.ndarray) -> np.ndarray:
    """Evaluate ``p(A)`` for a square matrix by Horner's scheme."""
    A = np.asarray(A, dtype=complex)
    d = A.shape[0]
    c = p.coeffs
    if not c:
        return np.zeros((d, d), dtype=complex)
    out = c[-1] * np.eye(d, dtype=complex)
    for a in reversed(c[:-1]):
        out = out @ A
        out[np.diag_indices(d)] += a
    return out


class CurveKind(enum.Enum):
    IDENTITY = "IDENTITY"
    TABLE = "TABLE"


@dataclass(frozen=True)
class SymbolCurve:
    """Scalar map ``it -> g(it)`` on a real interval.

    IDENTITY curves return ``it``.  TABLE curves hold sampled pairs and refuse
    to interpolate between them.
    """

    kind: CurveKind = CurveKind.IDENTITY
    interval: tuple[float, float] = (-math.inf, math.inf)
    table: dict = field(default_factory=dict)

    @classmethod
    def identity(cls, interval=(-math.inf, math.inf)) -> "SymbolCurve":
        return cls(CurveKind.IDENTITY, tuple(interval))

    @classmethod
    def from_samples(cls, ts, values, interval=None) -> "SymbolCurve":
        ts = [float(t) for t in ts]
        if interval is None:
            interval = (min(ts), max(ts))
        return cls(CurveKind.TABLE, tuple(interval), dict(zip(ts, map(complex, values))))

    def contains(self, t: float) -> bool:
        a, b = self.interval
        if not a <= t <= b:
            return False
        return self.kind is CurveKind.IDENTITY or float(t) in self.table

    def __call__(self, t: float) -> complex:
        a, b = self.interval
        if not a <= t <= b:
            raise OutOfDomainError(f"t={t} outside interval [{a}, {b}]", t=t)
        if self.kind is CurveKind.IDENTITY:
            return 1j * t
        try:
            return self.table[float(t)]
        except KeyError:
            raise OutOfDomainError(f"t={t} is not a stored sample of the table curve", t=t) from None


@dataclass(frozen=True)
class SpectralCondition:
    n: int
    polys: tuple[ComplexPoly, ...]
    g: SymbolCurve = field(default_factory=SymbolCurve.identity)
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("order n must be >= 1")
        polys = tuple(_as_poly(p) for p in self.polys)
        if len(polys) != self.n:
            raise ValueError(f"expected {self.n} polynomials, got {len(polys)}")
        object.__setattr__(self, "polys", polys)
        if self.interval is None:
            object.__setattr__(self, "interval", tuple(self.g.interval))
        else:
            object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))


def characteristic_residual(cond: SpectralCondition, t: float) -> complex:
    a, b = cond.interval
    if not a <= t <= b:
        raise OutOfDomainError(f"t={t} outside interval [{a}, {b}]", t=t)
    g = cond.g(t)
    it = 1j * t
    r = it ** cond.n
    for l, p in enumerate(cond.polys):
        r += it**l * poly_eval(p, g)
    return complex(r)


def characteristic_poly(n: int, polys: Sequence[ComplexPoly]) -> ComplexPoly:
    """``q(z) = z^n + sum_l z^l P_l(z)``, computed exactly."""
    q = ComplexPoly.monomial(n)
    for l, p in enumerate(polys):
        q = q + _as_poly(p).shift(l)
    return q


class ConditionCheck(NamedTuple):
    holds: bool
    offending: list[tuple[int, complex]]


def condition_holds_symbolic(cond: SpectralCondition, tol: float | None = None) -> ConditionCheck:
    """Certify the characteristic condition coefficient-wise for ``g = IDENTITY``.

    With ``tol=None`` the zero test is exact.  A float ``tol`` instead accepts
    coefficients of magnitude ``<= tol``.
    """
    if cond.g.kind is not CurveKind.IDENTITY:
        raise UnsupportedCurveError("symbolic check needs an IDENTITY symbol curve")
    q = characteristic_poly(cond.n, cond.polys)
    offending = []
    for k, c in enumerate(q.exact_coeffs):
        if c == _ZERO:
            continue
        val = _to_complex(c)
        if tol is not None and abs(val) <= tol:
            continue
        offending.append((k, val))
    return ConditionCheck(not offending, offending)


def complete_condition(n: int, lower: Sequence[ComplexPoly]) -> ComplexPoly:
    """Solve the IDENTITY condition for the missing top polynomial ``P_{n-1}``."""
    if len(lower) != n - 1:
        raise ValueError(f"expected {n - 1} lower polynomials, got {len(lower)}")
    partial = characteristic_poly(n, list(lower))
    low = [(k, _to_complex(c)) for k, c in enumerate(partial.exact_coeffs[: n - 1]) if c != _ZERO]
    if low:
        raise NotDivisibleError(
            f"z^{n - 1} does not divide the partial sum; surviving powers {[k for k, _ in low]}",
            offending=low,
        )
    return -partial.shift(-(n - 1))


def ou_example_polys(c1=2) -> list[ComplexPoly]:
    """The fourth-order choice ``P3 = -z + c1``, ``P2 = -c1 z``, ``P1 = P0 = 0``."""
    c1 = _exact(c1)
    return [
        ComplexPoly(),
        ComplexPoly(),
        ComplexPoly([0, (-c1[0], -c1[1])]),
        ComplexPoly([c1, -1]),
    ]
