import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import Polynomial
from scipy import integrate

from hadamard import (EulerPolynomial, QuadrantFn, diff_axis, edge_mask, euler_apply,
                      euler_apply_array, euler_dual, euler_pair, euler_shift, grid_from_window,
                      monomial, monomial_exponents, sample)

from conftest import log_bump

polys2 = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3)),
    st.fractions(min_value=-5, max_value=5, max_denominator=4), min_size=1,
).map(lambda c: EulerPolynomial(2, c))


def test_dual_of_theta():
    # theta* = -theta - 1
    assert euler_dual(EulerPolynomial.theta((1,))) == EulerPolynomial(1, {(1,): -1, (0,): -1})


@given(polys2)
def test_dual_is_involution(P):
    assert euler_dual(euler_dual(P)) == P


@given(polys2, st.integers(0, 5), st.integers(0, 5))
def test_dual_evaluates_at_reflected_point(P, a, b):
    assert euler_dual(P)((a, b)) == P((-a - 1, -b - 1))


@given(polys2, st.fractions(-3, 3, max_denominator=5), st.fractions(-3, 3, max_denominator=5))
def test_shift_is_exact(P, q1, q2):
    Q = euler_shift(P, (q1, q2))
    for z in ((0, 0), (1, 2), (Fraction(1, 3), -2)):
        assert Q(z) == P((z[0] - q1, z[1] - q2))


def test_polynomial_algebra_and_dict_roundtrip():
    P = EulerPolynomial(1, {(2,): 3, (0,): -1})
    Q = EulerPolynomial.theta((1,))
    assert (P * Q)((2,)) == P((2,)) * 2
    assert (P + Q)((3,)) == P((3,)) + 3
    assert EulerPolynomial.from_dict(P.to_dict()) == P
    assert P.degree == 2
    with pytest.raises(ValueError):
        EulerPolynomial(1, {(-1,): 1})
    with pytest.raises(ValueError):
        EulerPolynomial(2, {(1,): 1})


def test_monomial_exponents_lexicographic():
    assert list(monomial_exponents((1, 2))) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


@pytest.mark.parametrize("method", ["fd4", "spectral"])
def test_derivative_of_gaussian(method):
    g = grid_from_window(1, -8.0, 8.0, 512)
    s = g.axis(0)
    f = np.exp(-s * s)
    for order, exact in [(1, -2 * s * f), (2, (4 * s * s - 2) * f), (3, (12 * s - 8 * s ** 3) * f)]:
        got = diff_axis(f, g.dt[0], 0, order, method)
        # spectral: roundoff grows like (pi/dt)^order
        tol = 1e-9 if method == "spectral" else 5e-5
        assert np.max(np.abs(got - exact)) < tol


def test_fd4_exact_on_quartic_including_edges():
    h = 0.1
    s = np.arange(12) * h
    got = diff_axis(s ** 4, h, 0, 1, "fd4")
    assert np.allclose(got, 4 * s ** 3, atol=1e-10)


def test_diff_axis_rejects_unknown_method():
    with pytest.raises(ValueError):
        diff_axis(np.zeros(10), 0.1, 0, 1, "fd2")


def _gauss_poly(c, w, coeffs):
    p = Polynomial(coeffs)
    lin = Polynomial([c / w ** 2, -1 / w ** 2])
    g = lambda s: np.exp(-(s - c) ** 2 / (2 * w * w))  # noqa: E731
    return p, lin, g


@given(st.floats(-1, 1), st.floats(0.5, 0.8), st.floats(0.5, 1.0),
       st.lists(st.floats(-1, 1), max_size=2))
def test_fd4_order_four(c, w, lead, coeffs):
    coeffs = [lead, *coeffs]
    # theta = d/ds on the log side; error ratio ~16 when dt halves
    p, lin, g = _gauss_poly(c, w, coeffs)
    dp = p.deriv() + p * lin
    errs = []
    for n in (513, 1025):
        grid = grid_from_window(1, -6.0, 6.0, n)
        s = grid.axis(0)
        f = QuadrantFn(grid, (1,), p(s) * g(s))
        errs.append(np.max(np.abs(euler_apply(EulerPolynomial.theta((1,)), f).values
                                  - dp(s) * g(s))))
    assert errs[1] < 1e-6
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.3)


@pytest.mark.parametrize("alpha", range(5))
@pytest.mark.parametrize("gamma", range(4))
def test_monomials_are_eigenvectors(grid1, alpha, gamma):
    x = monomial(grid1, (alpha,))
    out = euler_apply(EulerPolynomial.theta((gamma,)), x).values
    interior = ~edge_mask(grid1)
    scale = max(1, alpha ** gamma) * np.abs(x.values)
    assert np.max((np.abs(out - alpha ** gamma * x.values) / scale)[interior]) < 1e-5


def test_monomial_signs_on_negative_quadrant(grid2):
    x = monomial(grid2, (1, 2), (-1, 1))
    t = grid2.mesh()
    assert np.allclose(x.values, -np.exp(t[0] + 2 * t[1]), rtol=1e-14)


def test_euler_apply_2d_mixed_word(grid2):
    f = sample(log_bump(0.0, 0.5), grid2)
    s = grid2.mesh()
    w2 = 0.25
    exact = (s[0] / w2) * (s[1] / w2) * f.values
    got = euler_apply(EulerPolynomial.theta((1, 1)), f, "spectral").values
    assert np.max(np.abs(got - exact)) < 1e-9


def test_euler_pair_against_quadrature(grid1):
    # <theta t, phi> = int t (-theta - 1) phi dx, with t = phi = log bumps
    t = sample(log_bump(0.2, 0.5), grid1)
    phi = sample(log_bump(-0.1, 0.4), grid1)
    got = euler_pair(EulerPolynomial.theta((1,)), t, phi, "spectral")
    got_fd4 = euler_pair(EulerPolynomial.theta((1,)), t, phi)

    def integrand(x):
        u = math.log(x)
        tv = math.exp(-(u - 0.2) ** 2 / 0.5)
        ph = math.exp(-(u + 0.1) ** 2 / 0.32)
        theta_phi = -(u + 0.1) / 0.16 * ph
        return tv * (-theta_phi - ph)

    ref = sum(integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
              for a, b in [(1e-4, 1.0), (1.0, 60.0)])
    assert got == pytest.approx(ref, rel=1e-10)
    assert got_fd4 == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("beta", [1, 2, 3])
def test_integration_by_parts(grid1, beta):
    t = sample(log_bump(0.3, 0.6), grid1)
    phi = sample(log_bump(-0.2, 0.6), grid1)
    word = EulerPolynomial.theta((beta,))
    lhs = euler_pair(word, t, phi, "spectral")
    rhs = euler_pair(EulerPolynomial.constant(1), euler_apply(word, t, "spectral"), phi,
                     "spectral")
    assert abs(lhs - rhs) < 1e-8


def test_apply_array_dimension_check(grid1):
    with pytest.raises(ValueError):
        euler_apply_array(EulerPolynomial.theta((1, 1)), np.zeros(grid1.shape), grid1.dt)
