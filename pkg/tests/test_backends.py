import math

import numpy as np
import pytest
from scipy.special import dawsn

from hclab import _kernels
from hclab.backends import (
    Boundary,
    GridSpec,
    OUParams,
    WeightSpec,
    admissible_weight_check,
    derivative_matrix,
    derivative_poly,
    diag_model,
    eigenfunction_csv,
    ou_eigenfunction,
    ou_matrix,
    weighted_norm,
)
from hclab.errors import BoundaryMismatchError, GridTooCoarseError, OutOfOmegaError
from hclab.polyspec import ComplexPoly, matrix_poly

P = OUParams(1.0, 2.0)


def _aligned_error(f, ref):
    ref = ref / np.linalg.norm(ref)
    return np.abs(f - ref * np.vdot(ref, f)).max()


def test_grid_layout():
    g = GridSpec.decaying(8, 2.0)
    assert g.h == 0.5
    assert np.array_equal(g.x, [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])
    assert GridSpec.periodic().boundary is Boundary.PERIODIC
    with pytest.raises(ValueError):
        GridSpec(0.0, 8)


def test_ou_params_validated():
    with pytest.raises(ValueError):
        OUParams(1.0, 0.4)
    assert P.omega_edge == 1.5


@pytest.mark.parametrize("b,c", [(1.0, 2.0), (0.5, 3.0)])
def test_ou_matrix_exact_on_quadratics(b, c):
    # second-order stencils (edges included) differentiate x^2 exactly
    g = GridSpec.decaying(64, 5.0)
    x = g.x
    A = ou_matrix(OUParams(b, c), g).entries
    ref = 2.0 + (2 * b + c) * x**2
    assert np.allclose(A @ x**2, ref, rtol=1e-12, atol=1e-9)


def test_ou_matrix_guards():
    with pytest.raises(GridTooCoarseError):
        ou_matrix(P, GridSpec.decaying(4, 1.0))
    with pytest.raises(BoundaryMismatchError):
        ou_matrix(P, GridSpec.periodic(16))


def test_gaussian_eigenfunction_oracle():
    # lambda = c - b gives p = 0: branch 2 is the Gaussian e^{-b x^2 / 2}
    g = GridSpec.decaying(1024, 20.0)
    f = ou_eigenfunction(P.c - P.b, 2, P, g)
    assert _aligned_error(f, np.exp(-g.x**2 / 2)) < 1e-13


def test_odd_eigenfunction_dawson_oracle():
    # branch 1 with p = 0 transforms to a multiple of Dawson's function
    g = GridSpec.decaying(1024, 20.0)
    f = ou_eigenfunction(P.c - P.b, 1, P, g)
    assert _aligned_error(f, dawsn(g.x / math.sqrt(2)) + 0j) < 1e-5


def test_eigen_residual_shrinks_with_resolution():
    res = []
    for N in (512, 1024):
        g = GridSpec.decaying(N, 20.0)
        A = ou_matrix(P, g).entries
        f = ou_eigenfunction(1j, 1, P, g)
        res.append(np.linalg.norm(A @ f - 1j * f))
    assert res[1] < res[0] / 2


def test_out_of_omega():
    g = GridSpec.decaying(64, 10.0)
    with pytest.raises(OutOfOmegaError):
        ou_eigenfunction(1.6, 1, P, g)
    with pytest.raises(ValueError):
        ou_eigenfunction(0.0, 3, P, g)


def test_derivative_matrix_on_modes():
    g = GridSpec.periodic(64)
    D = derivative_matrix(g).entries
    assert np.array_equal(D, -D.T)
    for k in range(-31, 32):
        e = np.exp(1j * k * g.x)
        assert np.linalg.norm(D @ e - 1j * k * e) / np.linalg.norm(e) < 1e-12


def test_derivative_matrix_other_period():
    g = GridSpec.periodic(32, 2.0)
    D = derivative_matrix(g).entries
    w = math.pi / 2.0 * 3
    e = np.exp(1j * w * g.x)
    assert np.allclose(D @ e, 1j * w * e, atol=1e-12)


def test_derivative_poly_matches_matrix_poly():
    g = GridSpec.periodic(32)
    p = ComplexPoly([1, -2j, 0.5])
    ref = matrix_poly(p, derivative_matrix(g).entries)
    got = derivative_poly(p, g).entries
    assert np.abs(got - ref).max() <= 1e-11 * np.abs(ref).max()
    with pytest.raises(BoundaryMismatchError):
        derivative_poly(p, GridSpec.decaying(32, 1.0))


def test_derivative_needs_periodic_grid():
    with pytest.raises(BoundaryMismatchError):
        derivative_matrix(GridSpec.decaying(16, 1.0))


def test_diag_model():
    A = diag_model([1, 2j])
    assert np.array_equal(A.entries, np.diag([1, 2j]))


def test_weight_constant_is_admissible():
    g = GridSpec.periodic(64)
    res = admissible_weight_check(WeightSpec(np.ones(64)), g)
    assert res.admissible and res.worst_ratio == 1.0


def test_weight_exponential_needs_enough_omega():
    g = GridSpec.periodic(128)
    rho = np.exp(-np.abs(g.x))
    assert admissible_weight_check(WeightSpec(rho, 1.0, 1.0), g).admissible
    res = admissible_weight_check(WeightSpec(rho, 1.0, 0.5), g)
    assert not res.admissible
    # worst pair moves from the origin to the far edge: ratio e^{pi - pi/2}
    assert res.worst_ratio == pytest.approx(math.exp(math.pi / 2), rel=1e-2)


@pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernels not built")
def test_weight_kernels_agree():
    rng = np.random.default_rng(0)
    s = np.sort(rng.uniform(-3, 3, 200))
    lr = rng.standard_normal(200)
    assert _kernels.compiled.weight_worst_log_ratio(lr, s, 0.1, 0.7) == \
        _kernels.python.weight_worst_log_ratio(lr, s, 0.1, 0.7)


def test_weight_spec_validation():
    with pytest.raises(ValueError):
        WeightSpec(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        WeightSpec(np.ones(3), M=0.5)


def test_weighted_norm_and_csv():
    g = GridSpec.periodic(16)
    u = np.ones(16)
    assert weighted_norm(u, np.ones(16), g.h) == pytest.approx(math.sqrt(16 * g.h))
    text = eigenfunction_csv(g.x[:2], [1 + 2j, 3])
    assert text.splitlines()[0] == "x,re,im"
    assert text.splitlines()[1].endswith(",1.0,2.0")
