from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab.errors import NotDivisibleError, OutOfDomainError, UnsupportedCurveError
from hclab.polyspec import (
    ComplexPoly,
    CurveKind,
    SpectralCondition,
    SymbolCurve,
    characteristic_poly,
    characteristic_residual,
    complete_condition,
    condition_holds_symbolic,
    matrix_poly,
    ou_example_polys,
    poly_eval,
)

small_fraction = st.fractions(min_value=-8, max_value=8, max_denominator=6)
gauss = st.tuples(small_fraction, small_fraction)
polys = st.lists(gauss, max_size=5).map(ComplexPoly)


def _sympy_char_poly(n, ps):
    """Independent expansion of ``z^n + sum_l z^l P_l(z)`` with sympy rationals."""
    z = sympy.Symbol("z")
    expr = z**n
    for l, p in enumerate(ps):
        for k, (re, im) in enumerate(p.exact_coeffs):
            coeff = sympy.Rational(re.numerator, re.denominator)
            coeff += sympy.I * sympy.Rational(im.numerator, im.denominator)
            expr += coeff * z ** (l + k)
    return sympy.Poly(sympy.expand(expr), z)


@pytest.mark.parametrize("c1", [1, 2, 1 + 1j, Fraction(1, 3)])
def test_ou_example_family_certifies(c1):
    ps = ou_example_polys(c1)
    assert [p.degree for p in ps] == [-1, -1, 1, 1]
    check = condition_holds_symbolic(SpectralCondition(4, ps))
    assert check.holds and check.offending == []
    assert _sympy_char_poly(4, ps).is_zero


def test_ou_example_coefficients():
    ps = ou_example_polys(2)
    assert ps[3].coeffs == [2, -1]
    assert ps[2].coeffs == [0, -2]


def test_broken_family_reports_offending_power():
    ps = ou_example_polys(2)
    ps[2] = ComplexPoly([0, -3])
    check = condition_holds_symbolic(SpectralCondition(4, ps))
    assert not check.holds
    # z^4 + z^3(-z+2) + z^2(-3z) = -z^3
    assert check.offending == [(3, -1 + 0j)]


def test_tolerance_mode_accepts_small_coefficients():
    ps = [ComplexPoly([1e-14]), ComplexPoly([0, -1])]
    cond = SpectralCondition(2, ps)
    assert not condition_holds_symbolic(cond).holds
    assert condition_holds_symbolic(cond, tol=1e-12).holds


def test_table_curve_is_rejected_by_symbolic_check():
    g = SymbolCurve.from_samples([0.0, 1.0], [0j, 1j])
    with pytest.raises(UnsupportedCurveError):
        condition_holds_symbolic(SpectralCondition(1, [ComplexPoly([0, -1])], g))


def test_characteristic_residual_vanishes_on_example():
    cond = SpectralCondition(4, ou_example_polys(2), interval=(-3, 3))
    for t in np.linspace(-3, 3, 13):
        assert abs(characteristic_residual(cond, t)) < 1e-12
    with pytest.raises(OutOfDomainError):
        characteristic_residual(cond, 4.0)


def test_table_curve_lookup():
    g = SymbolCurve.from_samples([0.5, 1.5], [2j, 3j])
    assert g.kind is CurveKind.TABLE
    assert g(1.5) == 3j
    assert g.contains(0.5) and not g.contains(1.0)
    with pytest.raises(OutOfDomainError):
        g(1.0)


def test_complete_condition_not_divisible():
    with pytest.raises(NotDivisibleError) as info:
        complete_condition(3, [ComplexPoly([1]), ComplexPoly()])
    assert info.value.details["offending"] == [(0, 1 + 0j)]


def test_complete_condition_known_answer():
    # n=3, P0 = 0, P1 = a z: z^3 + a z^2 + z^2 P2 = 0 -> P2 = -z - a
    top = complete_condition(3, [ComplexPoly(), ComplexPoly([0, 5])])
    assert top.coeffs == [-5, -1]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.lists(polys, min_size=4, max_size=4))
def test_completed_families_certify(n, qs):
    lower = [qs[l].shift(n - 1 - l) for l in range(n - 1)]
    top = complete_condition(n, lower)
    ps = lower + [top]
    assert condition_holds_symbolic(SpectralCondition(n, ps)).holds
    assert _sympy_char_poly(n, ps).is_zero


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.lists(polys, min_size=4, max_size=4))
def test_characteristic_poly_matches_sympy(n, ps):
    ps = ps[:n]
    mine = characteristic_poly(n, ps)
    ref = _sympy_char_poly(n, ps).all_coeffs()[::-1]
    ref = [complex(sympy.re(c), sympy.im(c)) for c in ref]
    while ref and ref[-1] == 0:
        ref.pop()
    assert mine.coeffs == pytest.approx(ref, abs=0)


@settings(max_examples=80, deadline=None)
@given(polys, polys, st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_arithmetic_is_exact_and_evaluates(p, q, z):
    assert (p * q).exact_coeffs == (q * p).exact_coeffs
    assert ((p + q) - q) == p
    assert poly_eval(p * q, z) == pytest.approx(poly_eval(p, z) * poly_eval(q, z), rel=1e-9, abs=1e-9)
    assert p.shift(3).shift(-3) == p


def test_json_round_trip_and_float_exactness():
    p = ComplexPoly([0.1, (0.25, -1.5), 3])
    q = ComplexPoly.from_json(p.to_json())
    assert q == p
    assert p.exact_coeffs[0][0] == Fraction(0.1)


def test_zero_polynomial():
    z = ComplexPoly()
    assert z.is_zero() and z.degree == -1 and z.to_json() == []
    assert poly_eval(z, 2.0) == 0


def test_matrix_poly_against_explicit_powers():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    p = ComplexPoly([1, -2j, 0.5, 3])
    ref = np.eye(5) - 2j * A + 0.5 * A @ A + 3 * A @ A @ A
    assert np.allclose(matrix_poly(p, A), ref, atol=1e-12)
    assert np.array_equal(matrix_poly(ComplexPoly(), A), np.zeros((5, 5)))


def test_nonfinite_coefficient_rejected():
    with pytest.raises(ValueError):
        ComplexPoly([float("nan")])
