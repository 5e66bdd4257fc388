"""The twist knot ``K_{2n}``: its character variety and boundary eigenvalues.

Points of the irreducible character variety are pairs ``(m, z)`` with
``F(m, z) = 0`` where::

    F(m, z) = S_n (S_n - S_{n-1}) (m^2 + m^-2) - (z - 1) S_n^2 + S_{n-1}^2

``m`` is the meridian eigenvalue and ``z`` the trace of ``rho(w)`` for
``w = b a^-1 b^-1 a``.  ``(m, z)`` and ``(1/m, z)`` are the same character.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np

from .algebra import (
    GenericityError,
    Mode,
    ModeError,
    Poly,
    RatFunc,
    common_mode,
    find_roots,
    ipow,
    mode_of,
    one,
    to_mode,
    zero,
)
from .chebyshev import cheb

ON_VARIETY_TOL = 1e-9


class OffVarietyError(ValueError):
    """The point does not satisfy ``F(m, z) = 0`` within tolerance."""


class ConsistencyError(AssertionError):
    """Two independent evaluations of the same quantity disagree."""


@dataclass(frozen=True)
class TwistKnot:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n == 0:
            raise ValueError("twist knot index n must be a nonzero integer")

    @property
    def hyperbolic(self) -> bool:
        return self.n not in (0, 1)

    def data(self, mode: Mode = Mode.RATIONAL) -> "KnotData":
        return _knot_data(self.n, mode)

    def __str__(self):
        return f"K_{2 * self.n}"


@dataclass(frozen=True)
class Slope:
    """Boundary curve ``mu^p lambda^q``, normalized to ``q >= 0`` (meridian is 1/0)."""

    p: int
    q: int

    def __post_init__(self):
        if gcd(self.p, self.q) != 1:
            raise ValueError(f"slope {self.p}/{self.q} is not coprime")
        if self.q < 0 or (self.q == 0 and self.p != 1):
            raise ValueError(f"slope {self.p}/{self.q} is not normalized; use Slope.of")

    @classmethod
    def of(cls, p: int, q: int) -> "Slope":
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        return cls(p, q)

    @classmethod
    def parse(cls, text: str) -> "Slope":
        """Parse ``"p/q"`` (``q = 0`` only as ``"1/0"``)."""
        try:
            ps, qs = text.strip().split("/")
            p, q = int(ps), int(qs)
        except ValueError:
            raise ValueError(f"cannot parse slope {text!r}; expected p/q") from None
        if q == 0 and p != 1:
            raise ValueError("the meridian slope must be written 1/0")
        return cls.of(p, q)

    @property
    def even(self) -> bool:
        return self.p % 2 == 0

    def __str__(self):
        return f"{self.p}/{self.q}"


class BivLaurent:
    """Laurent polynomial in ``m`` whose coefficients are functions of ``z``.

    ``terms`` maps an ``m``-exponent to a :class:`Poly` or :class:`RatFunc`.
    """

    __slots__ = ("terms", "mode")

    def __init__(self, terms: dict, mode: Mode):
        self.terms = {e: c for e, c in terms.items() if not c.is_zero()}
        self.mode = mode

    @classmethod
    def monomial(cls, e: int, coeff, mode: Mode) -> "BivLaurent":
        if not isinstance(coeff, (Poly, RatFunc)):
            coeff = Poly.const(coeff, mode)
        return cls({e: coeff}, mode)

    def _check(self, other: "BivLaurent"):
        if other.mode is not self.mode:
            raise ModeError("mode mismatch")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return BivLaurent(out, self.mode)

    def __neg__(self):
        return BivLaurent({e: -c for e, c in self.terms.items()}, self.mode)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, BivLaurent):
            return BivLaurent({e: c * other for e, c in self.terms.items()}, self.mode)
        self._check(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                t = c1 * c2
                out[e] = out[e] + t if e in out else t
        return BivLaurent(out, self.mode)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a Laurent polynomial")
        result = BivLaurent.monomial(0, 1, self.mode)
        for _ in range(k):
            result = result * self
        return result

    def shift(self, e: int) -> "BivLaurent":
        """Multiply by ``m**e``."""
        return BivLaurent({k + e: c for k, c in self.terms.items()}, self.mode)

    def is_zero(self) -> bool:
        return not self.terms

    def d_m(self) -> "BivLaurent":
        return BivLaurent({e - 1: e * c for e, c in self.terms.items() if e != 0}, self.mode)

    def d_z(self) -> "BivLaurent":
        return BivLaurent({e: c.derivative() for e, c in self.terms.items()}, self.mode)

    def to_mode(self, mode: Mode) -> "BivLaurent":
        return BivLaurent({e: c.to_mode(mode) for e, c in self.terms.items()}, mode)

    def __call__(self, m, z):
        total = zero(self.mode)
        for e, c in self.terms.items():
            total = total + c(z) * ipow(m, e)
        return total

    def abs_scale(self, m, z) -> float:
        """``sum_e |m|^e |c_e|(|z|)`` for polynomial coefficients."""
        am = abs(complex(to_mode(m, Mode.COMPLEX)))
        az = abs(complex(to_mode(z, Mode.COMPLEX)))
        s = 0.0
        for e, c in self.terms.items():
            if isinstance(c, RatFunc):
                zc = complex(to_mode(z, Mode.COMPLEX))
                den = np.polyval(c.den.float_coeffs()[::-1], zc)
                cs = c.num.abs_scale(az) / max(abs(den), 1e-300)
            else:
                cs = c.abs_scale(az)
            s += am ** e * cs
        return s

    def reduce(self, f3: RatFunc) -> "BivLaurent":
        """Normal form modulo ``m^2 + m^-2 + f3`` on the basis ``m^-1, 1, m, m^2``."""
        terms = {e: RatFunc.of(c) for e, c in self.terms.items()}
        while terms:
            top = max(terms)
            if top <= 2:
                break
            c = terms.pop(top)
            # m^e = -f3 m^(e-2) - m^(e-4)
            for e, t in ((top - 2, -(f3 * c)), (top - 4, -c)):
                terms[e] = terms[e] + t if e in terms else t
            terms = {e: t for e, t in terms.items() if not t.is_zero()}
        while terms:
            low = min(terms)
            if low >= -1:
                break
            c = terms.pop(low)
            # m^e = -f3 m^(e+2) - m^(e+4)
            for e, t in ((low + 2, -(f3 * c)), (low + 4, -c)):
                terms[e] = terms[e] + t if e in terms else t
            terms = {e: t for e, t in terms.items() if not t.is_zero()}
        return BivLaurent(terms, f3.mode)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            mono = "" if e == 0 else (f"m^{e}" if e != 1 else "m")
            parts.append(f"({self.terms[e]})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def __repr__(self):
        return f"BivLaurent({self})"


@dataclass(frozen=True)
class KnotData:
    """Polynomials attached to ``K_{2n}`` in one scalar mode."""

    n: int
    mode: Mode
    s_next: Poly  # S_{n+1}
    s: Poly       # S_n
    s_prev: Poly  # S_{n-1}
    delta: Poly   # S_n - S_{n-1}
    f1: Poly
    f2: Poly
    f3: RatFunc
    g1: RatFunc   # l = g1 m^2 + g2 on F = 0
    g2: Poly
    torsion_lambda: RatFunc
    F: BivLaurent
    l_plus: BivLaurent   # Laurent form of l
    l_minus: BivLaurent  # Laurent form of 1/l


@lru_cache(maxsize=None)
def _knot_data(n: int, mode: Mode) -> KnotData:
    if mode is not Mode.RATIONAL:
        base = _knot_data(n, Mode.RATIONAL)
        return KnotData(
            n=n, mode=mode,
            **{k: getattr(base, k).to_mode(mode) for k in (
                "s_next", "s", "s_prev", "delta", "f1", "f2", "f3", "g1", "g2",
                "torsion_lambda", "F", "l_plus", "l_minus")},
        )
    z = Poly.z()
    s_next, s, s_prev = cheb(n + 1), cheb(n), cheb(n - 1)
    delta = s - s_prev
    f1 = s * delta
    f2 = -(z - 1) * s * s + s_prev * s_prev
    g1 = RatFunc(-(z - 2) * (s_next - s_prev) * s * s, delta)
    g2 = (z - 2) * (s + s_prev) * s + 1
    tl = (RatFunc.of(-(2 * n + 1) * s * s + 2 * n * s * s_prev)
          - RatFunc(2 * (s.derivative() - s_prev.derivative()), delta))
    F = BivLaurent({2: f1, -2: f1, 0: f2}, mode)
    a4 = -(z - 2) * s * s
    a2 = -(z - 2) * f1
    a0 = delta * delta
    return KnotData(
        n=n, mode=mode, s_next=s_next, s=s, s_prev=s_prev, delta=delta,
        f1=f1, f2=f2, f3=RatFunc(f2, f1), g1=g1, g2=g2, torsion_lambda=tl,
        F=F,
        l_plus=BivLaurent({4: a4, 2: a2, 0: a0}, mode),
        l_minus=BivLaurent({-4: a4, -2: a2, 0: a0}, mode),
    )


def f_parts(knot: TwistKnot) -> tuple[Poly, Poly, RatFunc]:
    d = knot.data()
    return d.f1, d.f2, d.f3


# ---------------------------------------------------------------------------
# scalar-level model


def _mode(*xs) -> Mode:
    return common_mode(*xs, default=Mode.RATIONAL)


def _nonzero(m):
    if not m:
        raise ZeroDivisionError("the meridian eigenvalue m must be nonzero")


def _x(m):
    """``m^2 + m^-2``."""
    return m * m + ipow(m, -2)


def trace_w(m, u):
    _nonzero(m)
    return 2 + (2 - _x(m)) * u + u * u


def riley_eval(knot: TwistKnot, m, u):
    _nonzero(m)
    mode = _mode(m, u)
    d = knot.data(mode)
    zz = trace_w(m, u)
    return d.s_next(zz) - (u * u - (u + 1) * (_x(m) - 3)) * d.s(zz)


def eval_F(knot: TwistKnot, m, z):
    _nonzero(m)
    mode = _mode(m, z)
    return knot.data(mode).F(m, z)


def F_scale(knot: TwistKnot, m, z) -> float:
    return knot.data(Mode.RATIONAL).F.abs_scale(m, z)


def on_variety_residual(knot: TwistKnot, m, z) -> float:
    """``|F(m, z)|`` relative to the magnitude of its terms."""
    val = eval_F(knot, m, z)
    if mode_of(val) is not Mode.COMPLEX:
        return 0.0 if not val else math.inf
    return abs(val) / max(F_scale(knot, m, z), 1e-300)


def require_on_variety(knot: TwistKnot, m, z, tol: float = ON_VARIETY_TOL) -> None:
    r = on_variety_residual(knot, m, z)
    if r > tol:
        raise OffVarietyError(f"|F(m,z)| relative residual {r:.3g} exceeds {tol:g}")


def u_from_z(knot: TwistKnot, z, tol: float = 1e-12):
    mode = _mode(z)
    d = knot.data(mode)
    den = d.delta(z)
    if mode is Mode.COMPLEX:
        if abs(den) <= tol * max(d.delta.abs_scale(z), 1.0):
            raise GenericityError("S_n - S_{n-1} vanishes at z; u is undetermined")
    elif not den:
        raise GenericityError("S_n - S_{n-1} vanishes at z; u is undetermined")
    return (z - 2) * d.s(z) / den


# ---------------------------------------------------------------------------
# 2x2 matrices


@dataclass(frozen=True)
class Mat2:
    a11: object
    a12: object
    a21: object
    a22: object

    @classmethod
    def identity(cls, mode: Mode) -> "Mat2":
        return cls(one(mode), zero(mode), zero(mode), one(mode))

    def __matmul__(self, o: "Mat2") -> "Mat2":
        return Mat2(
            self.a11 * o.a11 + self.a12 * o.a21, self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21, self.a21 * o.a12 + self.a22 * o.a22,
        )

    def __add__(self, o: "Mat2") -> "Mat2":
        return Mat2(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)

    def scale(self, c) -> "Mat2":
        return Mat2(c * self.a11, c * self.a12, c * self.a21, c * self.a22)

    @property
    def mode(self) -> Mode:
        return _mode(self.a11, self.a12, self.a21, self.a22)

    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a21

    def trace(self):
        return self.a11 + self.a22

    def adjugate(self) -> "Mat2":
        return Mat2(self.a22, -self.a12, -self.a21, self.a11)

    def eigenvalues(self, det=None) -> tuple[complex, complex]:
        """Both eigenvalues, larger modulus first.

        ``det`` supplies a known determinant (1 for products of SL2
        matrices); when entries are large the computed one is mostly
        rounding and the small eigenvalue would be lost.
        """
        t = complex(to_mode(self.trace(), Mode.COMPLEX))
        d = complex(to_mode(self.det() if det is None else det, Mode.COMPLEX))
        r = np.sqrt(complex(t * t - 4 * d))
        # larger root first, the other from the determinant (no cancellation)
        big = (t + r) / 2 if abs(t + r) >= abs(t - r) else (t - r) / 2
        if big == 0:
            return 0j, 0j
        return complex(big), complex(d / big)

    def to_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=complex)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.to_array())))

    def distance(self, o: "Mat2") -> float:
        return float(np.max(np.abs(self.to_array() - o.to_array())))


def _unimodular(A: Mat2, tol: float = 1e-9) -> bool:
    d = A.det()
    if A.mode is Mode.COMPLEX:
        return abs(complex(d) - 1) <= tol * max(1.0, A.max_abs() ** 2)
    return d == 1


def rep_matrices(m, u) -> tuple[Mat2, Mat2]:
    """``rho(a)`` and ``rho(b)`` for the parameters ``(m, u)``."""
    _nonzero(m)
    mode = _mode(m, u)
    mi = ipow(m, -1)
    z0 = zero(mode)
    a = Mat2(m, one(mode), z0, mi)
    b = Mat2(m, z0, -u if mode_of(u) else to_mode(-u, mode), mi)
    return a, b


def mat_power(A: Mat2, k: int) -> Mat2:
    """``A^k`` for ``det A = 1`` via ``A^k = S_k(tr A) A - S_{k-1}(tr A) Id``."""
    if not _unimodular(A):
        raise ValueError("mat_power needs a determinant-1 matrix")
    mode = A.mode
    t = A.trace()
    sk, sk1 = cheb(k, mode)(t), cheb(k - 1, mode)(t)
    return A.scale(sk) + Mat2.identity(mode).scale(-sk1)


def _word_products(m, u) -> tuple[Mat2, Mat2]:
    a, b = rep_matrices(m, u)
    ai, bi = a.adjugate(), b.adjugate()
    w = b @ ai @ bi @ a
    w_star = a @ bi @ ai @ b
    return w, w_star


def word_matrices(knot: TwistKnot, m, u, check: bool = True, tol: float = 1e-10) -> tuple[Mat2, Mat2]:
    """``rho(w^n)`` and ``rho(w*^n)`` from the closed forms.

    With ``check`` the result is compared against ``mat_power`` of the
    explicit four-letter products.
    """
    _nonzero(m)
    mode = _mode(m, u)
    d = knot.data(mode)
    zz = trace_w(m, u)
    sn1, sn = d.s_next(zz), d.s(zz)
    mi = ipow(m, -1)
    wn = Mat2(
        sn1 - (1 + (2 - mi * mi) * u + u * u) * sn, (mi - m - m * u) * sn,
        ((m - mi) * u + m * u * u) * sn, sn1 - (1 - m * m * u) * sn,
    )
    wsn = Mat2(
        sn1 - (1 - mi * mi * u) * sn, (m - mi - mi * u) * sn,
        ((mi - m) * u + mi * u * u) * sn, sn1 - (1 + (2 - m * m) * u + u * u) * sn,
    )
    if check:
        w, ws = _word_products(m, u)
        for closed, direct, name in ((wn, mat_power(w, knot.n), "w^n"), (wsn, mat_power(ws, knot.n), "w*^n")):
            if mode.exact:
                ok = closed == direct
            else:
                ok = closed.distance(direct) <= tol * max(1.0, direct.max_abs())
            if not ok:
                raise ConsistencyError(f"closed form of rho({name}) disagrees with the direct product")
    return wn, wsn


def longitude_matrix(knot: TwistKnot, m, u) -> Mat2:
    """``rho(lambda) = rho(w*^n) rho(w^n)``."""
    wn, wsn = word_matrices(knot, m, u, check=False)
    return wsn @ wn


def _l_fraction(d: KnotData, m, z):
    return d.g1(z) * m * m + d.g2(z)


def longitude_eigen(knot: TwistKnot, m, z, tol: float = 1e-9, check: bool = True):
    """Eigenvalue ``l`` of ``rho(lambda)`` on the eigenvector shared with ``rho(mu)``.

    Evaluates both the fraction form and the Laurent form and requires
    them to agree (they coincide only on ``F = 0``).  In floating point,
    when ``|l| < 1`` the value is taken as the reciprocal of the Laurent
    form of ``1/l``, which does not suffer the cancellation.
    """
    mode = _mode(m, z)
    d = knot.data(mode)
    if check:
        require_on_variety(knot, m, z)
    lau = d.l_plus(m, z)
    if not mode.exact:
        inv = d.l_minus(m, z)
        if abs(inv) > abs(lau):
            lau = 1 / inv
    if not check:
        return lau
    frac = _l_fraction(d, m, z)
    if mode.exact:
        ok = frac == lau
    else:
        scale = d.l_plus.abs_scale(m, z)
        ok = abs(frac - lau) <= tol * max(scale, 1.0)
    if not ok:
        raise ConsistencyError("fraction and Laurent forms of the longitude eigenvalue disagree")
    return lau


@lru_cache(maxsize=None)
def eigen_laurent(n: int, p: int, q: int, mode: Mode = Mode.RATIONAL) -> BivLaurent:
    """``E = m^p l^q`` expanded as a Laurent polynomial (valid on ``F = 0``)."""
    if mode is not Mode.RATIONAL:
        return eigen_laurent(n, p, q).to_mode(mode)
    d = _knot_data(n, Mode.RATIONAL)
    base = d.l_plus if q >= 0 else d.l_minus
    return (base ** abs(q)).shift(p)


def eigen_gamma(knot: TwistKnot, slope: Slope, m, z, check: bool = True):
    """``E_gamma(m, z) = m^p l^q``."""
    if slope.q == 0:
        if check:
            require_on_variety(knot, m, z)
        return ipow(m, slope.p)
    l = longitude_eigen(knot, m, z, check=check)
    return ipow(m, slope.p) * l ** slope.q


# ---------------------------------------------------------------------------
# points on the variety


@dataclass(frozen=True)
class VarietyPoint:
    m: complex
    z: complex
    u: complex
    residual: float

    @classmethod
    def at(cls, knot: TwistKnot, m, z, tol: float = ON_VARIETY_TOL) -> "VarietyPoint":
        m, z = complex(m), complex(z)
        require_on_variety(knot, m, z, tol)
        return cls(m, z, complex(u_from_z(knot, z)), on_variety_residual(knot, m, z))

    def inverted(self, knot: TwistKnot) -> "VarietyPoint":
        return VarietyPoint(1 / self.m, self.z, self.u, on_variety_residual(knot, 1 / self.m, self.z))


def z_fiber(knot: TwistKnot, m) -> list[complex]:
    """All ``z`` with ``F(m, z) = 0`` for a fixed complex ``m``."""
    d = knot.data(Mode.COMPLEX)
    m = complex(m)
    poly = d.f1 * _x(m) + d.f2
    if poly.degree < 1:
        return []
    return list(find_roots(poly).roots)


def sample_points(knot: TwistKnot, count: int, rng: np.random.Generator,
                  min_delta: float = 1e-6) -> list[VarietyPoint]:
    """Random on-variety points: random ``m`` in an annulus, all ``z`` over it."""
    d = knot.data(Mode.COMPLEX)
    pts: list[VarietyPoint] = []
    while len(pts) < count:
        r = rng.uniform(0.5, 2.0)
        m = r * np.exp(2j * np.pi * rng.uniform())
        for z in z_fiber(knot, m):
            if abs(d.delta(z)) < min_delta * max(1.0, d.delta.abs_scale(z)):
                continue
            try:
                pts.append(VarietyPoint.at(knot, m, z))
            except (OffVarietyError, GenericityError):
                continue
            if len(pts) == count:
                break
    return pts
