import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistorsion.algebra import Mode, Poly, gaussian
from twistorsion.variety import (ConsistencyError, Mat2, OffVarietyError, Slope, TwistKnot,
                                 eigen_gamma, eval_F, f_parts, longitude_eigen, longitude_matrix,
                                 mat_power, on_variety_residual, rep_matrices, riley_eval,
                                 sample_points, trace_w, u_from_z, word_matrices, z_fiber)

z = Poly.z()
KNOTS = [-3, -2, -1, 1, 2, 3, 4]


def random_mu(rng):
    m = rng.uniform(0.5, 2) * cmath.exp(2j * cmath.pi * rng.uniform())
    u = complex(rng.normal(), rng.normal())
    return m, u


# -- knots and slopes ----------------------------------------------------------


def test_knot_validation():
    with pytest.raises(ValueError):
        TwistKnot(0)
    assert not TwistKnot(1).hyperbolic
    assert TwistKnot(-1).hyperbolic


def test_slope_normalization():
    assert Slope.of(-5, -3) == Slope(5, 3)
    assert Slope.parse("-5/3") == Slope(-5, 3)
    assert Slope.parse("5/-3") == Slope(-5, 3)
    assert Slope.parse("1/0") == Slope(1, 0)
    assert Slope.of(-1, 0) == Slope(1, 0)
    for bad in ("2/4", "2/0", "-1/0", "x"):
        with pytest.raises(ValueError):
            Slope.parse(bad)
    with pytest.raises(ValueError):
        Slope(1, -2)


# -- polynomial data -----------------------------------------------------------


def test_f_parts_examples():
    f1, f2, _ = f_parts(TwistKnot(1))
    assert f1 == Poly.const(1) and f2 == 1 - z
    f1, f2, _ = f_parts(TwistKnot(-1))
    assert f1 == 1 - z and f2 == z * z - z + 1
    f1, f2, f3 = f_parts(TwistKnot(2))
    assert f1 == z * (z - 1) and f2 == -(z - 1) * z * z + 1
    assert f3.num * f1 == f2 * f3.den


@pytest.mark.parametrize("n", [2, 3, 4])
def test_degree_laws(n):
    f1, f2, f3 = f_parts(TwistKnot(n))
    assert f1.degree == 2 * n - 2
    assert f2.degree == 2 * n - 1
    assert f3.degree == 1


def test_F_examples():
    k = TwistKnot(1)
    m, zz = Fraction(3, 2), Fraction(5, 7)
    assert eval_F(k, m, zz) == m * m + 1 / (m * m) - zz + 1
    assert eval_F(k, 1, 3) == 0
    assert eval_F(k, 1, Fraction(1)) == 2


@given(st.sampled_from(KNOTS), st.fractions(-3, 3).filter(bool), st.fractions(-3, 3))
@settings(max_examples=60)
def test_F_inversion_symmetry(n, m, zz):
    k = TwistKnot(n)
    assert eval_F(k, m, zz) == eval_F(k, 1 / m, zz)


def test_riley_trefoil_closed_form():
    k = TwistKnot(1)
    m, u = Fraction(2, 3), Fraction(-5, 4)
    x = m * m + 1 / (m * m)
    zz = trace_w(m, u)
    assert riley_eval(k, m, u) == zz - u * u + (u + 1) * (x - 3)


def test_trace_w_examples():
    assert trace_w(Fraction(3), 0) == 2
    assert trace_w(1, Fraction(5)) == 27


def test_trace_w_matches_matrix_product():
    rng = np.random.default_rng(3)
    for _ in range(100):
        m, u = random_mu(rng)
        a, b = rep_matrices(m, u)
        w = b @ a.adjugate() @ b.adjugate() @ a
        assert abs(w.trace() - trace_w(m, u)) <= 1e-10 * max(1, abs(w.trace()))


def test_u_from_z_examples():
    zz = Fraction(7, 3)
    assert u_from_z(TwistKnot(1), zz) == zz - 2
    assert u_from_z(TwistKnot(3), 2) == 0
    assert u_from_z(TwistKnot(-1), zz) == -(zz - 2) / (zz - 1)


# -- matrices ------------------------------------------------------------------


def test_rep_matrices():
    a, b = rep_matrices(Fraction(3, 2), Fraction(2, 5))
    assert a.det() == 1 and b.det() == 1
    a, b = rep_matrices(Fraction(3, 2), 0)
    assert b.a21 == 0


def test_mat_power_examples():
    a, _ = rep_matrices(Fraction(3, 2), Fraction(1, 3))
    assert mat_power(a, 0) == Mat2.identity(Mode.RATIONAL)
    assert mat_power(a, 1) == a
    assert mat_power(a, -1) == a.adjugate()
    assert mat_power(a, 3) == a @ a @ a


@pytest.mark.parametrize("n", KNOTS)
def test_word_matrices_match_products(n):
    rng = np.random.default_rng(100 + n)
    k = TwistKnot(n)
    for _ in range(20):
        m, u = random_mu(rng)
        word_matrices(k, m, u, check=True)


def test_word_matrices_exact():
    m, u = Fraction(3, 2), Fraction(-2, 7)
    wn, _ = word_matrices(TwistKnot(3), m, u, check=True)
    a, b = rep_matrices(m, u)
    w = b @ a.adjugate() @ b.adjugate() @ a
    assert wn == w @ w @ w


def test_word_matrices_n0_self_test():
    # the closed form with S_1 = 1, S_0 = 0 gives the identity
    m, u = Fraction(3, 2), Fraction(1, 5)
    mi = 1 / m
    sn1, sn = 1, 0
    wn = Mat2(sn1 - (1 + (2 - mi * mi) * u + u * u) * sn, (mi - m - m * u) * sn,
              ((m - mi) * u + m * u * u) * sn, sn1 - (1 - m * m * u) * sn)
    assert wn == Mat2.identity(Mode.RATIONAL)


# -- on the variety --------------------------------------------------------------


@pytest.fixture(scope="module")
def points():
    rng = np.random.default_rng(11)
    return {n: sample_points(TwistKnot(n), 12, rng) for n in KNOTS}


def test_sample_points_on_variety(points):
    for n, pts in points.items():
        k = TwistKnot(n)
        for p in pts:
            assert on_variety_residual(k, p.m, p.z) < 1e-9
            assert abs(riley_eval(k, p.m, p.u)) < 1e-8 * max(1, abs(p.u) ** (2 * abs(n) + 2))


def test_off_variety_rejected():
    with pytest.raises(OffVarietyError):
        longitude_eigen(TwistKnot(2), 1.3 + 0.2j, 0.7 - 0.1j)


def test_longitude_eigen_matches_matrix(points):
    for n, pts in points.items():
        k = TwistKnot(n)
        for p in pts:
            l = longitude_eigen(k, p.m, p.z)
            L = longitude_matrix(k, p.m, p.u)
            assert abs(L.a11 - l) <= 1e-9 * max(1, abs(l))
            assert abs(L.a21) <= 1e-8 * max(1, L.max_abs())
            assert abs(l * longitude_eigen(k, 1 / p.m, p.z) - 1) < 1e-9


def test_longitude_exact_point():
    # trefoil: F = m^2 + m^-2 - z + 1 vanishes exactly at z = x + 1
    k = TwistKnot(1)
    m = Fraction(3, 2)
    zz = m * m + 1 / (m * m) + 1
    l = longitude_eigen(k, m, zz)
    assert l * longitude_eigen(k, 1 / m, zz) == 1


@pytest.mark.parametrize("slope", ["1/0", "0/1", "1/1", "2/1", "-5/3", "3/2"])
def test_eigen_gamma_matches_matrices(points, slope):
    s = Slope.parse(slope)
    for n, pts in points.items():
        k = TwistKnot(n)
        for p in pts[:6]:
            E = eigen_gamma(k, s, p.m, p.z)
            a, _ = rep_matrices(p.m, p.u)
            M = mat_power(a, s.p) @ mat_power(longitude_matrix(k, p.m, p.u), s.q)
            ev = M.eigenvalues(det=1)
            target = sorted([E, 1 / E], key=abs)
            got = sorted(ev, key=abs)
            for g, t in zip(got, target):
                assert abs(g - t) <= 1e-9 * max(1, abs(t))
            assert abs(eigen_gamma(k, s, 1 / p.m, p.z) * E - 1) < 1e-9


def test_meridian_eigen():
    k = TwistKnot(2)
    m = 1.1 + 0.3j
    zz = z_fiber(k, m)[0]
    assert eigen_gamma(k, Slope(1, 0), m, zz) == m


def test_gaussian_point_exact():
    k = TwistKnot(-1)
    m = gaussian(1, 1)
    # F is quadratic in z; pick m so that nothing is needed beyond evaluation
    assert eval_F(k, m, gaussian(2, 0)) == eval_F(k, 1 / m, gaussian(2, 0))
