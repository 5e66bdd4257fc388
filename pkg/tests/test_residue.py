import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistorsion.algebra import GenericityError, Mode, Poly, RatFunc, exact_gaussian, gaussian, to_mode
from twistorsion.residue import (alpha_beta, d_divides_certify, degree_report, det_certify_even,
                                 det_certify_odd, detzero_certify, detzero_residual, evaluate_sum,
                                 fiber_solve, h_alternate_form_certify, h_seq, reduce, reduce_even,
                                 reduce_odd, sample_c, unit_identity_certify, vanishing_sum)
from twistorsion.torsion import torsion_mu
from twistorsion.variety import (Slope, TwistKnot, eigen_gamma, on_variety_residual, riley_eval,
                                 sample_points)

z = Poly.z()
C73 = Fraction(7, 3)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# -- h_k and the reductions ------------------------------------------------------


def test_h_seq_examples():
    f3 = TwistKnot(2).data().f3
    assert h_seq(f3, 0).is_zero()
    assert h_seq(f3, 1) == RatFunc.of(Poly.const(1))
    assert h_seq(f3, 2) == -f3
    assert h_seq(f3, -1) == RatFunc.of(Poly.const(-1))


@given(st.sampled_from([-2, -1, 2, 3]), st.integers(-12, 12))
@settings(max_examples=40)
def test_h_seq_antisymmetry_and_recursion(n, k):
    f3 = TwistKnot(n).data().f3
    assert h_seq(f3, -k) == -h_seq(f3, k)
    assert h_seq(f3, k + 1) == -f3 * h_seq(f3, k) - h_seq(f3, k - 1)


def test_reduce_even_longitude():
    k = TwistKnot(2)
    d = k.data()
    red = reduce_even(k, Slope(0, 1), C73)
    assert red.alpha == d.g1
    assert red.beta == RatFunc.of(C73 - d.g2)


def test_reduce_odd_meridian():
    red = reduce_odd(TwistKnot(3), Slope(1, 0), C73)
    assert red.alpha == RatFunc.of(Poly.const(1))
    assert red.beta.is_zero()


def test_reduce_rejects_degenerate_c():
    with pytest.raises(GenericityError):
        reduce_odd(TwistKnot(2), Slope(1, 1), 1)
    with pytest.raises(GenericityError):
        reduce_even(TwistKnot(2), Slope(0, 1), 0)
    with pytest.raises(ValueError):
        reduce_even(TwistKnot(2), Slope(1, 1), C73)


def test_unit_identity_examples():
    assert unit_identity_certify(TwistKnot(2), Slope(1, 0)).passed
    assert unit_identity_certify(TwistKnot(-1), Slope(1, 2)).passed
    assert unit_identity_certify(TwistKnot(3), Slope(3, 2)).passed
    with pytest.raises(ValueError):
        unit_identity_certify(TwistKnot(3), Slope(2, 1))


def test_spurious_factor_slope_2_1():
    # S_2 - S_1 = z - 1 vanishes at z = 1 for every c
    red = reduce(TwistKnot(2), Slope(2, 1), C73)
    assert any(abs(s - 1) < 1e-12 for s in red.spurious_z)
    assert red.fiber_poly.degree < red.H1.degree
    assert red.fiber_poly(1) != 0


@pytest.mark.parametrize("n,slope", [(2, "2/1"), (-2, "0/1"), (3, "3/2"), (-1, "-5/3")])
def test_h_alternate_forms(n, slope):
    for c in (C73, gaussian(Fraction(1, 2), Fraction(3, 2))):
        s = Slope.parse(slope)
        if s.even:
            continue
        assert h_alternate_form_certify(TwistKnot(n), s, c).passed


def test_h_alternate_examples():
    assert h_alternate_form_certify(TwistKnot(-1), Slope(1, 0), 2).passed
    assert h_alternate_form_certify(TwistKnot(2), Slope(1, 1), Fraction(3, 2)).passed
    assert h_alternate_form_certify(TwistKnot(2), Slope(1, 1), gaussian(1, 1)).passed


@pytest.mark.parametrize("n", [-2, -1, 2, 3])
@pytest.mark.parametrize("slope", ["1/0", "0/1", "2/1", "1/2", "3/2", "-5/3"])
def test_d_divides(n, slope):
    assert d_divides_certify(TwistKnot(n), Slope.parse(slope)).passed


# -- fibers -------------------------------------------------------------------------


def test_trefoil_meridian_fiber():
    c = 1.3 + 0.4j
    fiber = fiber_solve(TwistKnot(1), Slope(1, 0), c)
    assert len(fiber) == 1
    p = fiber[0].point
    assert abs(p.m - c) < 1e-12
    assert abs(p.z - (c * c + 1 / (c * c) + 1)) < 1e-12
    assert abs(fiber[0].torsion.value + 0.5) < 1e-12


def test_figure_eight_meridian_fiber():
    c = 0.7 - 1.1j
    x = c * c + 1 / (c * c)
    fiber = fiber_solve(TwistKnot(-1), Slope(1, 0), c)
    assert len(fiber) == 2
    r = cmath.sqrt((x + 1) ** 2 - 4 * (x + 1))
    roots = [((x + 1) + r) / 2, ((x + 1) - r) / 2]
    for fp in fiber:
        zz = fp.point.z
        assert min(abs(zz - q) for q in roots) < 1e-12
        assert rel(fp.torsion.value, zz - (x + 1) / 2) < 1e-12
    assert abs(sum(1 / fp.torsion.value for fp in fiber)) < 1e-12


@pytest.mark.parametrize("n", [-2, 2, 3])
@pytest.mark.parametrize("slope", ["0/1", "1/1", "2/1", "1/2", "3/2", "-5/3"])
def test_fiber_points_valid(n, slope):
    k, s = TwistKnot(n), Slope.parse(slope)
    c = 1.2 + 0.9j
    red = reduce(k, s, c)
    fiber = fiber_solve(k, s, c, reduction=red)
    mult = 2 if s.even else 1
    assert len(fiber) == red.fiber_poly.degree * mult
    for fp in fiber:
        p = fp.point
        assert on_variety_residual(k, p.m, p.z) < 1e-9
        assert abs(eigen_gamma(k, s, p.m, p.z) - c) < 1e-9 * abs(c)
        assert abs(riley_eval(k, p.m, p.u)) < 1e-9 * max(1, abs(p.u)) ** (2 * abs(n) + 2)
        # exact evaluation at the Gaussian rational equal to the float z
        zg = exact_gaussian(p.z)
        a, b = (to_mode(f.to_mode(Mode.GAUSSIAN)(zg), Mode.COMPLEX) for f in (red.alpha, red.beta))
        if s.even:
            assert rel(p.m * p.m, b / a) < 1e-9
        else:
            cc = complex(c)
            assert rel(p.m, (cc * cc * a + b) / (cc * (a * a - b * b))) < 1e-9


# -- the sum -------------------------------------------------------------------------


def test_trefoil_sum_is_minus_two():
    for c in (1.3 + 0.4j, -0.6 + 1.7j, 2.2 - 0.1j):
        rep = vanishing_sum(TwistKnot(1), Slope(1, 0), c)
        assert abs(rep.sum_bivariate + 2) < 1e-10
        assert abs(rep.sum_univariate + 2) < 1e-10
        assert rep.verdict == "nonvanishing"


def test_trefoil_longitude_nonvanishing():
    rng = np.random.default_rng(2)
    for _ in range(3):
        rep = vanishing_sum(TwistKnot(1), Slope(0, 1), sample_c(rng), rng=rng)
        assert rep.relative_magnitude > 1e-3


@pytest.mark.parametrize("n", [-2, 2, 3])
@pytest.mark.parametrize("slope", ["1/0", "0/1", "1/1", "2/1", "1/2", "3/2"])
def test_vanishing(n, slope):
    rep = vanishing_sum(TwistKnot(n), Slope.parse(slope), 0.9 + 1.4j)
    assert rep.verdict == "vanishes"
    assert rep.relative_bivariate < 1e-8 and rep.relative_univariate < 1e-8
    assert rep.route_gap < 1e-7
    assert rep.jacobi_bound_holds


def test_exact_rational_c():
    rep = vanishing_sum(TwistKnot(-2), Slope(3, 2), C73)
    assert rep.verdict == "vanishes"


def test_float_mode():
    rep = vanishing_sum(TwistKnot(2), Slope(1, 1), 0.9 + 1.4j, exact=False)
    assert rep.verdict == "vanishes"


def test_resampling_on_degenerate_c():
    rep = vanishing_sum(TwistKnot(2), Slope(1, 1), 1, rng=np.random.default_rng(0))
    assert rep.genericity_retries >= 1
    assert rep.verdict == "vanishes"


def test_budget_exhaustion_is_inconclusive():
    rep = vanishing_sum(TwistKnot(2), Slope(1, 1), 1, resample_budget=0)
    assert rep.verdict == "inconclusive"
    assert rep.failures


def test_seeded_determinism():
    a = vanishing_sum(TwistKnot(3), Slope(1, 2), sample_c(np.random.default_rng(9)))
    b = vanishing_sum(TwistKnot(3), Slope(1, 2), sample_c(np.random.default_rng(9)))
    assert a.sum_bivariate == b.sum_bivariate and a.c == b.c


def test_sample_c_is_generic():
    rng = np.random.default_rng(4)
    for _ in range(200):
        c = sample_c(rng)
        assert 0.4 <= abs(c) <= 2.5 + 1e-12
        assert abs(c - 1) > 0.1 and abs(c + 1) > 0.1


# -- determinant lemmas and degrees --------------------------------------------------


@pytest.mark.parametrize("n,slope", [(-2, "2/1"), (2, "0/1"), (3, "-2/3"), (-1, "0/1")])
def test_det_even(n, slope):
    assert det_certify_even(TwistKnot(n), Slope.parse(slope), C73).passed


@pytest.mark.parametrize("n,slope", [(-1, "1/0"), (2, "3/2"), (3, "1/1"), (-2, "-5/3")])
def test_det_odd(n, slope):
    assert det_certify_odd(TwistKnot(n), Slope.parse(slope), gaussian(Fraction(1, 2), 2)).passed


def test_detzero():
    k = TwistKnot(-2)
    pts = sample_points(k, 10, np.random.default_rng(1))
    assert detzero_certify(k, 6, pts).passed
    # k = 1: m^2 - h_1 m^2 + h_0 is identically zero
    assert detzero_residual(k, pts[0].m, pts[0].z, 1) == 0


def test_degree_examples():
    rep = degree_report(TwistKnot(2), Slope(1, 1), C73)
    assert rep.passed
    assert rep.params["deg_alpha"] == 5 and rep.params["deg_beta"] == 4
    rep = degree_report(TwistKnot(1), Slope(1, 0), C73)
    assert rep.passed and rep.params["expected_failure"]


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("slope", ["1/1", "3/2", "1/2", "-5/3", "5/2"])
def test_degree_laws(n, slope):
    assert degree_report(TwistKnot(n), Slope.parse(slope), C73).passed


def test_alpha_beta_cached_and_c_free():
    a1, b1 = alpha_beta(2, 3, 2)
    a2, b2 = alpha_beta(2, 3, 2)
    assert a1 is a2 and b1 is b2
