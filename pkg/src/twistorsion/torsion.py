"""Adjoint torsion values by four independent routes.

``jacobian``         -(m / 2E) det d(F, E)/d(m, z) with E in Laurent form
``closed_lambda``    closed longitude formula in z alone
``change_of_curve``  T_lambda * (p (l/m) dm/dl + q)
``three_variable``   -(m / 2E) det d(F, m^p l^q, H)/d(m, z, l)

plus the meridian shortcut ``T_mu = F_z / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .algebra import GenericityError, Mode, Poly, RatFunc, ipow, mode_of
from .report import CertificationReport
from .variety import (
    BivLaurent,
    Slope,
    TwistKnot,
    VarietyPoint,
    eigen_laurent,
    longitude_eigen,
    OffVarietyError,
    require_on_variety,
)

REGULARITY_TOL = 1e-10
ROUTES = ("closed_lambda", "jacobian", "change_of_curve", "three_variable")


@dataclass(frozen=True)
class TorsionValue:
    value: complex
    point: VarietyPoint
    slope: Slope
    route: str

    def __post_init__(self):
        if not self.value:
            raise GenericityError("zero torsion: the character is not gamma-regular")


def _mode(m, z) -> Mode:
    modes = {mode_of(m), mode_of(z)} - {None}
    return modes.pop() if len(modes) == 1 else Mode.RATIONAL


def torsion_lambda(knot: TwistKnot, z):
    """Torsion for the canonical longitude; depends on ``z`` only."""
    d = knot.data(_mode(z, z))
    if not d.delta(z):
        raise GenericityError("S_n - S_{n-1} vanishes; torsion_lambda undefined")
    return d.torsion_lambda(z)


def torsion_mu(knot: TwistKnot, m, z):
    d = knot.data(_mode(m, z))
    x = m * m + ipow(m, -2)
    return (d.f1.derivative()(z) * x + d.f2.derivative()(z)) / 2


@lru_cache(maxsize=None)
def _laurent_parts(n: int, mode: Mode):
    from .variety import _knot_data
    d = _knot_data(n, mode)
    return (d.F.d_m(), d.F.d_z(), d.l_plus, d.l_plus.d_m(), d.l_plus.d_z(),
            d.l_minus, d.l_minus.d_m(), d.l_minus.d_z())


@lru_cache(maxsize=None)
def _expanded_parts(n: int, p: int, q: int, mode: Mode):
    E = eigen_laurent(n, p, q, mode)
    return E, E.d_m(), E.d_z()


def _log_partials_l(n: int, mode: Mode, m, z):
    """``l`` and ``(d log l/dm, d log l/dz)`` from the Laurent forms.

    Whichever of ``l`` and ``1/l`` has the larger modulus is differentiated;
    the smaller one is a near-cancellation of its Laurent terms.
    """
    _, _, lp, lpm, lpz, lm, lmm, lmz = _laurent_parts(n, mode)
    a, b = lp(m, z), lm(m, z)
    if mode.exact or abs(complex(a)) >= abs(complex(b)):
        return a, lpm(m, z) / a, lpz(m, z) / a
    return 1 / b, -lmm(m, z) / b, -lmz(m, z) / b


def jacobian_det(knot: TwistKnot, slope: Slope, m, z, expanded: bool = False):
    """``det d(F, E_gamma)/d(m, z)``, the value of ``E_gamma``, and a magnitude scale.

    The partials of ``E = m^p l^q`` come from the chain rule
    ``dE = E (p dm/m + q dl/l)`` over the Laurent form of ``l`` (or of
    ``1/l``).  ``expanded=True`` differentiates the fully expanded
    Laurent polynomial of ``E`` instead; the value is the same on ``F = 0``
    but the expansion loses precision in floating point.
    """
    mode = _mode(m, z)
    Fm, Fz = _laurent_parts(knot.n, mode)[:2]
    a, c = Fm(m, z), Fz(m, z)
    p, q = slope.p, slope.q
    if expanded:
        E, Em, Ez = (f(m, z) for f in _expanded_parts(knot.n, p, q, mode))
    elif q == 0:
        E, Em, Ez = ipow(m, p), p * ipow(m, p - 1), 0
    else:
        l, lm, lz = _log_partials_l(knot.n, mode, m, z)
        E = ipow(m, p) * l ** q
        Em = E * (p * ipow(m, -1) + q * lm)
        Ez = E * q * lz
    det = a * Ez - c * Em
    scale = abs(complex(a * Ez)) + abs(complex(c * Em)) if mode is Mode.COMPLEX else 0.0
    return det, E, scale


def torsion_jacobian(knot: TwistKnot, slope: Slope, m, z, check: bool = True,
                     regularity_tol: float = REGULARITY_TOL, expanded: bool = False):
    """``-(m / 2E) det d(F, E)/d(m, z)``."""
    if check:
        require_on_variety(knot, m, z)
    det, E, scale = jacobian_det(knot, slope, m, z, expanded=expanded)
    value = -m * det / (2 * E)
    if _mode(m, z) is Mode.COMPLEX:
        if abs(value) <= regularity_tol * abs(m / (2 * E)) * scale:
            raise GenericityError("degenerate Jacobian: point is not gamma-regular")
    elif not value:
        raise GenericityError("degenerate Jacobian: point is not gamma-regular")
    return value


def _use_reciprocal(d, m, z) -> bool:
    """Whether the fraction form of ``1/l`` is better conditioned than that of ``l``."""
    if d.mode.exact:
        return False
    g1, g2 = d.g1(z), d.g2(z)
    return abs(g1 * m * m + g2) < abs(g1 / (m * m) + g2)


def dl_dm(knot: TwistKnot, m, z, reciprocal: bool = False):
    """Derivative along ``F = 0`` of ``l = g1 m^2 + g2`` (or of ``1/l = g1 m^-2 + g2``).

    Uses ``dz/dm = -2(m - m^-3)/f3'``.
    """
    d = knot.data(_mode(m, z))
    df3 = d.f3.derivative()(z)
    if not df3:
        raise GenericityError("f3' vanishes: dz/dm undefined")
    g1, dg1, dg2 = d.g1(z), d.g1.derivative()(z), d.g2.derivative()(z)
    dz = -2 * (m - ipow(m, -3)) / df3
    if reciprocal:
        return -2 * g1 * ipow(m, -3) + dz * (dg1 * ipow(m, -2) + dg2)
    return 2 * m * g1 + dz * (dg1 * m * m + dg2)


def change_of_curve(knot: TwistKnot, slope: Slope, m, z, check: bool = True):
    """``T_lambda * (p (l/m)(dm/dl) + q)``."""
    if check:
        require_on_variety(knot, m, z)
    tl = torsion_lambda(knot, z)
    if slope.p == 0:
        return tl * slope.q
    d = knot.data(_mode(m, z))
    if _use_reciprocal(d, m, z):
        # l/(dl/dm) = -(1/l) / (d(1/l)/dm)
        li = d.g1(z) * ipow(m, -2) + d.g2(z)
        dli = dl_dm(knot, m, z, reciprocal=True)
        if abs(dli) < 1e-300:
            raise GenericityError("dl/dm vanishes")
        ratio = -li / dli
    else:
        l = d.g1(z) * m * m + d.g2(z)
        dl = dl_dm(knot, m, z)
        if not dl or (_mode(m, z) is Mode.COMPLEX and abs(dl) < 1e-300):
            raise GenericityError("dl/dm vanishes")
        ratio = l / dl
    return tl * (slope.p * ratio / m + slope.q)


def torsion_three_variable(knot: TwistKnot, slope: Slope, m, z, l, tol: float = 1e-9,
                           reciprocal: bool | None = None):
    """``-(m / 2E) det d(F, E, H)/d(m, z, l)`` with ``H = l - (g1 m^2 + g2)``.

    With ``reciprocal`` the third variable is ``1/l`` and
    ``H = 1/l - (g1 m^-2 + g2)``; both give the torsion on ``F = H = 0``.
    By default the better conditioned of the two is used.
    """
    mode = _mode(m, z)
    d = knot.data(mode)
    require_on_variety(knot, m, z)
    if reciprocal is None:
        reciprocal = _use_reciprocal(d, m, z)
    g1, g2 = d.g1(z), d.g2(z)
    dg1, dg2 = d.g1.derivative()(z), d.g2.derivative()(z)
    p, q = slope.p, slope.q
    s = -1 if reciprocal else 1  # exponent of m in the fraction form
    v = 1 / l if reciprocal else l
    h = v - (g1 * ipow(m, 2 * s) + g2)
    if mode is Mode.COMPLEX:
        if abs(h) > tol * max(1.0, abs(v), abs(g1 * ipow(m, 2 * s)), abs(g2)):
            raise OffVarietyError(f"constraint H(m,z,l) residual {abs(h):.3g} too large")
    elif h:
        raise OffVarietyError("constraint H(m,z,l) is not satisfied")
    F = d.F
    e = s * q  # E = m^p v^e
    E = ipow(m, p) * ipow(v, e)
    rows = (
        (F.d_m()(m, z), F.d_z()(m, z), 0),
        (p * ipow(m, p - 1) * ipow(v, e), 0, e * ipow(m, p) * ipow(v, e - 1) if e else 0),
        (-2 * s * g1 * ipow(m, 2 * s - 1), -(dg1 * ipow(m, 2 * s) + dg2), 1),
    )
    det = _det3(rows)
    return -m * det / (2 * E)


def _det3(r):
    (a, b, c), (d, e, f), (g, h, i) = r
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def torsion_value(knot: TwistKnot, slope: Slope, point: VarietyPoint, route: str) -> TorsionValue:
    m, z = point.m, point.z
    if route == "jacobian":
        v = torsion_jacobian(knot, slope, m, z)
    elif route == "closed_lambda":
        if (slope.p, slope.q) == (0, 1):
            v = torsion_lambda(knot, z)
        elif (slope.p, slope.q) == (1, 0):
            v = torsion_mu(knot, m, z)
        else:
            raise ValueError("closed forms exist only for the longitude and the meridian")
    elif route == "change_of_curve":
        v = change_of_curve(knot, slope, m, z)
    elif route == "three_variable":
        v = torsion_three_variable(knot, slope, m, z, longitude_eigen(knot, m, z))
    else:
        raise ValueError(f"unknown torsion route {route!r}")
    return TorsionValue(complex(v), point, slope, route)


# ---------------------------------------------------------------------------
# exact certification


def zeqn_certify(knot: TwistKnot) -> CertificationReport:
    """The two z-only identities tying ``g1, g2, f3`` to ``T_lambda``.

    With the actual polynomials ``S_n, S_{n-1}`` substituted, the factor
    ``S_n^2 - z S_n S_{n-1} + S_{n-1}^2 - 1`` is identically zero, so the
    identities must hold exactly in Q(z).
    """
    d = knot.data()
    g1, g2, f3, tl = d.g1, RatFunc.of(d.g2), d.f3, d.torsion_lambda
    dg1, dg2, df3 = g1.derivative(), g2.derivative(), f3.derivative()
    f1 = RatFunc.of(d.f1)
    first = -dg1 * f3 + 2 * dg2 - g1 * df3 + g1 * tl / f1
    second = -2 * dg1 + dg2 * f3 + g2 * tl / f1
    z = Poly.z()
    unit = d.s * d.s - z * d.s * d.s_prev + d.s_prev * d.s_prev - 1
    report = CertificationReport("zeqn", {"n": knot.n})
    report.record(f"unit factor n={knot.n}", unit.is_zero())
    report.record(f"first n={knot.n}", first.is_zero(), residual=str(first))
    report.record(f"second n={knot.n}", second.is_zero(), residual=str(second))
    return report


def simp_certify(knot: TwistKnot) -> CertificationReport:
    """Laurent identity rewriting ``(m - m^-3)(g1' m^2 + g2') - m g1 f3'``.

    The difference of both sides must reduce to zero modulo
    ``m^2 + m^-2 + f3``.
    """
    d = knot.data()
    g1, g2, f3 = d.g1, RatFunc.of(d.g2), d.f3
    dg1, dg2, df3 = g1.derivative(), g2.derivative(), f3.derivative()
    mode = Mode.RATIONAL

    def mono(e, c):
        return BivLaurent.monomial(e, c, mode)

    lhs = (mono(1, 1) - mono(-3, 1)) * (mono(2, dg1) + mono(0, dg2)) - mono(1, g1 * df3)
    rhs = mono(1, -dg1 * f3 + 2 * dg2 - g1 * df3) + mono(-1, -2 * dg1 + dg2 * f3)
    residual = (lhs - rhs).reduce(f3)
    report = CertificationReport("simp", {"n": knot.n})
    report.record(f"simp n={knot.n}", residual.is_zero(), residual=str(residual))
    return report
