from hypothesis import given, strategies as st

from twistorsion.algebra import Mode, Poly, gaussian
from twistorsion.chebyshev import cheb, cheb_derivative, cheb_identity_suite

z = Poly.z()


def test_base_cases():
    assert cheb(0).is_zero()
    assert cheb(1) == Poly.const(1)
    assert cheb(2) == z
    assert cheb(3) == z * z - 1


def test_negative_indices():
    assert cheb(-1) == Poly.const(-1)
    assert cheb(-2) == -z


def test_derivatives():
    assert cheb_derivative(1).is_zero()
    assert cheb_derivative(3) == 2 * z
    assert cheb_derivative(-2) == Poly.const(-1)


def test_identity_small_cases():
    s1, s0 = cheb(1), cheb(0)
    assert s1 * s1 - z * s1 * s0 + s0 * s0 == Poly.const(1)
    s2 = cheb(2)
    assert s2 * s2 - z * s2 * s1 + s1 * s1 == Poly.const(1)
    lhs = (z * z - 4) * cheb_derivative(5)
    assert lhs == 4 * z * cheb(5) - 10 * cheb(4)


def test_identity_suite():
    rep = cheb_identity_suite(12)
    assert rep.passed
    assert len(rep.checks) == 5 * 25


@given(st.integers(-40, 40))
def test_recurrence_and_antisymmetry(k):
    assert cheb(k + 1) == z * cheb(k) - cheb(k - 1)
    assert cheb(-k) == -cheb(k)
    assert cheb(k).degree == (abs(k) - 1 if k else float("-inf"))


@given(st.integers(-20, 20))
def test_gaussian_mode_matches_rational(k):
    g = cheb(k, Mode.GAUSSIAN)
    x = gaussian(1, 2)
    assert g(x) == cheb(k).to_mode(Mode.GAUSSIAN)(x)


@given(st.integers(1, 30))
def test_value_at_two(k):
    # S_k(2) = k
    assert cheb(k)(2) == k
