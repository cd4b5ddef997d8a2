from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hadamard import (DeltaExpansion, EulerPolynomial, annihilation_check, delta_diff,
                      delta_mul_x, euler_apply_delta, euler_dual, euler_eigen_delta)

coeff = st.fractions(min_value=-10, max_value=10, max_denominator=7)
expansions = st.dictionaries(st.integers(0, 12), coeff, max_size=5).map(DeltaExpansion)
polys = st.dictionaries(st.integers(0, 4).map(lambda g: (g,)), st.integers(-6, 6),
                        min_size=1).map(lambda c: EulerPolynomial(1, c))


def test_rules():
    assert delta_mul_x(DeltaExpansion.delta(3)) == DeltaExpansion.delta(2, -3)
    assert delta_mul_x(DeltaExpansion.delta(0)) == DeltaExpansion.zero()
    assert delta_diff(DeltaExpansion.delta(2, 5)) == DeltaExpansion.delta(3, 5)


def test_theta_on_delta2():
    # theta delta^(2) = -3 delta^(2)
    out = euler_apply_delta(EulerPolynomial.theta((1,)), DeltaExpansion.delta(2))
    assert out == DeltaExpansion.delta(2, -3)


@pytest.mark.parametrize("k", range(11))
def test_theta_eigenvalue_family(k):
    out = euler_apply_delta(EulerPolynomial.theta((1,)), DeltaExpansion.delta(k))
    assert out == DeltaExpansion.delta(k, -k - 1)


@given(polys, st.integers(0, 10), coeff.filter(bool))
def test_closed_form(P, k, c):
    u = DeltaExpansion.delta(k, c)
    assert euler_apply_delta(P, u) == euler_eigen_delta(P, u)
    assert euler_eigen_delta(P, u) == DeltaExpansion.delta(k, c * P((-k - 1,)))


@given(polys, st.integers(0, 10))
def test_dual_eigenvalue_agrees(P, k):
    # P on delta^(k) and P* on x^k share the eigenvalue P(-k-1)
    assert euler_dual(P)((k,)) == P((-k - 1,))


@given(expansions)
def test_heisenberg(u):
    assert delta_diff(delta_mul_x(u)) - delta_mul_x(delta_diff(u)) == u


@pytest.mark.parametrize("k", range(11))
@pytest.mark.parametrize("beta", range(1, 6))
def test_annihilation(k, beta):
    r = annihilation_check(DeltaExpansion.delta(k, Fraction(2, 3)), beta)
    assert r.b == r.closed_form
    assert r.vanishes == (beta > k)


def test_expansion_normalizes_and_validates():
    assert DeltaExpansion({1: 0, 2: Fraction(1, 2)}).coeffs == {2: Fraction(1, 2)}
    assert not DeltaExpansion.zero()
    with pytest.raises(ValueError):
        DeltaExpansion({-1: 1})
    with pytest.raises(ValueError):
        annihilation_check(DeltaExpansion({1: 1, 2: 1}), 1)
    with pytest.raises(ValueError):
        euler_apply_delta(EulerPolynomial.theta((1, 0)), DeltaExpansion.delta(0))
