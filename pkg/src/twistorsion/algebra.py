"""Scalar fields, univariate polynomials, rational functions and root finding.

Three scalar modes are supported:

* ``Mode.RATIONAL``  -- exact rationals (``gmpy2.mpq`` through sympy's ``QQ``)
* ``Mode.GAUSSIAN``  -- exact Gaussian rationals ``a + b*i`` (sympy's ``QQ_I``)
* ``Mode.COMPLEX``   -- IEEE double complex numbers

Values never change mode implicitly.  Python ``int`` literals are accepted
everywhere since they embed canonically in every mode; anything else must be
converted explicitly with :func:`to_mode` / :meth:`Poly.to_mode`.
"""

from __future__ import annotations

import cmath
import enum
import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

import gmpy2
import numpy as np
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.domains.gaussiandomains import GaussianRational
from sympy.polys.euclidtools import dup_gcd

NEG_INF = -math.inf

_MPQ = type(QQ(1, 2))


class ModeError(TypeError):
    """Raised when values from different scalar modes are combined."""


class RootFindingError(RuntimeError):
    """The simultaneous iteration did not converge or failed certification."""


class GenericityError(ArithmeticError):
    """A sampled parameter hit a degenerate locus; the caller should resample."""


class Mode(enum.Enum):
    RATIONAL = "rational"
    GAUSSIAN = "gaussian"
    COMPLEX = "complex"

    @property
    def exact(self) -> bool:
        return self is not Mode.COMPLEX


def mode_of(x) -> Mode | None:
    """Mode of a scalar, or ``None`` for plain integers (mode neutral)."""
    if isinstance(x, bool):
        raise ModeError("booleans are not scalars")
    if isinstance(x, Integral):
        return None
    if isinstance(x, (_MPQ, Fraction)):
        return Mode.RATIONAL
    if isinstance(x, GaussianRational):
        return Mode.GAUSSIAN
    if isinstance(x, (complex, float, np.complexfloating, np.floating)):
        return Mode.COMPLEX
    raise ModeError(f"unsupported scalar type {type(x).__name__}")


def common_mode(*values, default: Mode = Mode.RATIONAL) -> Mode:
    """The single mode shared by ``values``; integers adapt to the others."""
    modes = {m for m in map(mode_of, values) if m is not None}
    if len(modes) > 1:
        raise ModeError(f"mixed scalar modes: {sorted(m.value for m in modes)}")
    return modes.pop() if modes else default


def to_mode(x, mode: Mode):
    """Explicitly convert a scalar into ``mode``.

    Exact values convert to complex floats freely; the reverse direction is
    only allowed for floats that are exactly integral (no silent rounding).
    Rationals embed into the Gaussian rationals.
    """
    src = mode_of(x)
    if mode is Mode.COMPLEX:
        if src is Mode.GAUSSIAN:
            return complex(float(x.x), float(x.y))
        if src is Mode.RATIONAL:
            return complex(float(x))
        return complex(x)
    if src is Mode.COMPLEX:
        z = complex(x)
        if z.imag == 0 and z.real.is_integer():
            x = int(z.real)
        else:
            raise ModeError("refusing to convert an inexact float to an exact mode")
    if isinstance(x, Fraction):
        x = QQ(x.numerator, x.denominator)
    if mode is Mode.RATIONAL:
        if src is Mode.GAUSSIAN:
            if x.y != 0:
                raise ModeError("Gaussian rational with nonzero imaginary part")
            return x.x
        return QQ(x)
    if src is Mode.GAUSSIAN:
        return x
    return QQ_I(QQ(x), 0)


def gaussian(re, im=0):
    """Exact ``re + im*i`` from integers, Fractions or ``"a/b"`` strings."""
    return QQ_I(QQ(Fraction(re)), QQ(Fraction(im)))


def exact_gaussian(x) -> GaussianRational:
    """The Gaussian rational exactly equal to a binary floating point ``x``."""
    x = complex(x)
    return gaussian(Fraction(x.real), Fraction(x.imag))


@contextmanager
def working_digits(digits: int):
    """MPFR working precision of about ``digits`` decimal digits."""
    with gmpy2.context(gmpy2.get_context(), precision=int(digits * 3.33) + 8) as ctx:
        yield ctx


def to_mp(x):
    """A scalar of any mode as a ``gmpy2.mpc`` at the working precision."""
    src = mode_of(x)
    if src is None:
        return gmpy2.mpc(int(x))
    if src is Mode.GAUSSIAN:
        return gmpy2.mpc(gmpy2.mpfr(gmpy2.mpq(x.x)), gmpy2.mpfr(gmpy2.mpq(x.y)))
    if src is Mode.RATIONAL:
        return gmpy2.mpc(gmpy2.mpfr(gmpy2.mpq(x)))
    return gmpy2.mpc(complex(x))


def zero(mode: Mode):
    return to_mode(0, mode)


def one(mode: Mode):
    return to_mode(1, mode)


def _check_scalar(x, mode: Mode):
    m = mode_of(x)
    if m is not None and m is not mode:
        raise ModeError(f"{m.value} scalar used with a {mode.value} polynomial")
    if m is None and mode is not Mode.COMPLEX:
        return to_mode(x, mode)
    if mode is Mode.COMPLEX:
        return complex(x)
    if isinstance(x, Fraction):
        return to_mode(x, mode)
    return x


def ipow(x, e: int):
    """``x**e`` for integer ``e`` of either sign, in the mode of ``x``."""
    if e >= 0:
        return x ** e
    return 1 / (x ** (-e)) if not isinstance(x, Integral) else QQ(1, x ** (-e))


# ---------------------------------------------------------------------------
# Polynomials


class Poly:
    """Univariate polynomial in ``z``; ``coeffs[i]`` is the coefficient of ``z**i``.

    >>> z = Poly.z()
    >>> (z + 1) * (z - 1)
    Poly(z^2 - 1)
    >>> Poly.zero().degree
    -inf
    """

    __slots__ = ("coeffs", "mode", "_float", "_mp")

    def __init__(self, coeffs=(), mode: Mode = Mode.RATIONAL):
        cs = [_check_scalar(c, mode) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)
        self.mode = mode
        self._float = None
        self._mp = None

    @classmethod
    def _raw(cls, coeffs, mode):
        p = cls.__new__(cls)
        cs = list(coeffs)
        while cs and not cs[-1]:
            cs.pop()
        p.coeffs = tuple(cs)
        p.mode = mode
        p._float = None
        p._mp = None
        return p

    @classmethod
    def zero(cls, mode: Mode = Mode.RATIONAL) -> "Poly":
        return cls._raw((), mode)

    @classmethod
    def const(cls, c, mode: Mode | None = None) -> "Poly":
        mode = mode or common_mode(c)
        return cls((c,), mode)

    @classmethod
    def z(cls, mode: Mode = Mode.RATIONAL) -> "Poly":
        return cls((0, 1), mode)

    # -- basic properties --------------------------------------------------
    @property
    def degree(self) -> float:
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    @property
    def leading(self):
        return self.coeffs[-1] if self.coeffs else zero(self.mode)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def _same(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.mode is not self.mode:
                raise ModeError(f"cannot combine {self.mode.value} and {other.mode.value} polynomials")
            return other
        if isinstance(other, RatFunc):
            return NotImplemented
        return Poly((_check_scalar(other, self.mode),), self.mode)

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return Poly._raw(out, self.mode)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw([-c for c in self.coeffs], self.mode)

    def __sub__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly.zero(self.mode)
        if len(b) == 1:
            c = b[0]
            return Poly._raw([x * c for x in a], self.mode)
        if len(a) == 1:
            c = a[0]
            return Poly._raw([c * x for x in b], self.mode)
        if self.mode is Mode.COMPLEX:
            return Poly._raw(np.convolve(np.array(a), np.array(b)).tolist(), self.mode)
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if not x:
                continue
            for j, y in enumerate(b):
                out[i + j] += x * y
        return Poly._raw(out, self.mode)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative polynomial power")
        result = Poly.const(1, self.mode)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (Poly, RatFunc)):
            return RatFunc(self, other) if isinstance(other, Poly) else RatFunc.of(self) / other
        c = _check_scalar(other, self.mode)
        inv = (1 / c) if self.mode is Mode.COMPLEX else one(self.mode) / c
        return Poly._raw([x * inv for x in self.coeffs], self.mode)

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        """Long division ``self = q*other + r`` with ``deg r < deg other``."""
        other = self._same(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.coeffs)
        d = other.coeffs
        dl = len(d)
        lead = d[-1]
        inv = (1 / lead) if self.mode is Mode.COMPLEX else one(self.mode) / lead
        q = [zero(self.mode)] * max(len(r) - dl + 1, 0)
        for k in range(len(r) - dl, -1, -1):
            t = r[k + dl - 1] * inv
            q[k] = t
            if t:
                for j in range(dl):
                    r[k + j] -= t * d[j]
        return Poly._raw(q, self.mode), Poly._raw(r[: dl - 1], self.mode)

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def exact_quo(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if not r.is_zero():
            raise ArithmeticError("polynomial division is not exact")
        return q

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.mode is other.mode and self.coeffs == other.coeffs
        if isinstance(other, RatFunc):
            return other == self
        try:
            return self == Poly((other,), self.mode)
        except ModeError:
            return False

    def __hash__(self):
        return hash((self.mode, self.coeffs))

    # -- calculus and evaluation --------------------------------------------
    def derivative(self) -> "Poly":
        return Poly._raw([i * c for i, c in enumerate(self.coeffs)][1:], self.mode)

    def __call__(self, x):
        """Horner evaluation at a scalar of the same mode (or an int)."""
        x = _check_scalar(x, self.mode)
        acc = zero(self.mode)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def float_coeffs(self) -> np.ndarray:
        """Complex coefficient array (ascending), cached."""
        if self._float is None:
            self._float = np.array([to_mode(c, Mode.COMPLEX) for c in self.coeffs], dtype=complex)
        return self._float

    def mp_eval(self, x):
        """Horner evaluation in MPFR arithmetic at the current working precision."""
        prec = gmpy2.get_context().precision
        if self._mp is None or self._mp[0] != prec:
            self._mp = (prec, [to_mp(c) for c in self.coeffs])
        acc = gmpy2.mpc(0)
        for c in reversed(self._mp[1]):
            acc = acc * x + c
        return acc

    def abs_scale(self, x) -> float:
        """``sum |a_i| |x|^i`` -- the natural scale of ``|p(x)|``."""
        return float(np.polyval(np.abs(self.float_coeffs())[::-1], abs(x))) if self.coeffs else 0.0

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        return self / self.leading

    def to_mode(self, mode: Mode) -> "Poly":
        if mode is self.mode:
            return self
        return Poly._raw([to_mode(c, mode) for c in self.coeffs], mode)

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.float_coeffs()))) if self.coeffs else 0.0

    def __repr__(self):
        return f"Poly({self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
            if self.mode is Mode.GAUSSIAN and c.x != 0 and c.y != 0:
                cs = f"({c})"
            elif self.mode is Mode.COMPLEX:
                cs = f"({c.real:.12g}{c.imag:+.12g}j)"
            else:
                cs = str(c)
            if mono and cs in ("1", "-1"):
                cs = cs[:-1]
            elif mono:
                cs += "*"
            terms.append(cs + mono)
        s = " + ".join(terms)
        return s.replace("+ -", "- ")


def _domain(mode: Mode):
    if mode is Mode.RATIONAL:
        return QQ
    if mode is Mode.GAUSSIAN:
        return QQ_I
    raise ModeError("gcd is only defined for exact modes")


def poly_arith(a: Poly, b: Poly, kind: str) -> Poly:
    """``kind`` is one of ``"add"``, ``"sub"``, ``"mul"``."""
    if a.mode is not b.mode:
        raise ModeError("mode mismatch")
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    raise ValueError(f"unknown polynomial operation {kind!r}")


def poly_derivative(a: Poly) -> Poly:
    return a.derivative()


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd in an exact mode; ``gcd(0, 0) == 0``."""
    if a.mode is not b.mode:
        raise ModeError("mode mismatch")
    dom = _domain(a.mode)
    if a.is_zero() and b.is_zero():
        return a
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    if a.degree == 0 or b.degree == 0:
        return Poly.const(1, a.mode)
    g = dup_gcd(list(reversed(a.coeffs)), list(reversed(b.coeffs)), dom)
    return Poly._raw(list(reversed(g)), a.mode).monic()


def squarefree_part(a: Poly) -> Poly:
    """``a / gcd(a, a')`` made monic (exact modes)."""
    if a.degree < 1:
        return Poly.const(1, a.mode)
    return a.exact_quo(poly_gcd(a, a.derivative())).monic()


# ---------------------------------------------------------------------------
# Rational functions


class RatFunc:
    """Quotient ``num/den`` of polynomials.

    In exact modes the pair is kept coprime with a monic denominator, so
    equality is structural.  In complex mode no normalization is attempted.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None, *, normalized: bool = False):
        if den is None:
            den = Poly.const(1, num.mode)
        if num.mode is not den.mode:
            raise ModeError("numerator and denominator modes differ")
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.mode.exact and not normalized:
            if num.is_zero():
                den = Poly.const(1, num.mode)
            else:
                g = poly_gcd(num, den)
                if g.degree > 0:
                    num, den = num.exact_quo(g), den.exact_quo(g)
                lc = den.leading
                if lc - 1:
                    num, den = num / lc, den / lc
        self.num = num
        self.den = den

    @classmethod
    def of(cls, x, mode: Mode | None = None) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, Poly):
            return cls(x, Poly.const(1, x.mode), normalized=True)
        mode = mode or common_mode(x)
        return cls(Poly.const(x, mode), Poly.const(1, mode), normalized=True)

    @property
    def mode(self) -> Mode:
        return self.num.mode

    @property
    def degree(self) -> float:
        """``deg num - deg den`` (``-inf`` for the zero function)."""
        return self.num.degree - self.den.degree

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return self.den.degree == 0

    def _coerce(self, other) -> "RatFunc":
        if isinstance(other, RatFunc):
            if other.mode is not self.mode:
                raise ModeError("mode mismatch")
            return other
        if isinstance(other, Poly):
            if other.mode is not self.mode:
                raise ModeError("mode mismatch")
            return RatFunc.of(other)
        return RatFunc.of(_check_scalar(other, self.mode), self.mode)

    def __add__(self, other):
        o = self._coerce(other)
        a, b, c, d = self.num, self.den, o.num, o.den
        if not self.mode.exact:
            if b == d:
                return RatFunc(a + c, b)
            return RatFunc(a * d + c * b, b * d)
        if a.is_zero():
            return o
        if c.is_zero():
            return self
        # Henrici: only the gcd of the two denominators can cancel.
        g = poly_gcd(b, d)
        if g.degree == 0:
            return RatFunc(a * d + c * b, b * d, normalized=True)._monic_den()
        bg, dg = b.exact_quo(g), d.exact_quo(g)
        t = a * dg + c * bg
        if t.is_zero():
            return RatFunc.of(Poly.zero(self.mode))
        g2 = poly_gcd(t, g)
        if g2.degree > 0:
            t, g = t.exact_quo(g2), g.exact_quo(g2)
        return RatFunc(t, bg * g * dg, normalized=True)._monic_den()

    __radd__ = __add__

    def _monic_den(self):
        lc = self.den.leading
        if not lc - 1:
            return self
        return RatFunc(self.num / lc, self.den / lc, normalized=True)

    def __neg__(self):
        return RatFunc(-self.num, self.den, normalized=True)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if not self.mode.exact:
            return RatFunc(self.num * o.num, self.den * o.den)
        if self.is_zero() or o.is_zero():
            return RatFunc.of(Poly.zero(self.mode))
        a, b, c, d = self.num, self.den, o.num, o.den
        g1, g2 = poly_gcd(a, d), poly_gcd(c, b)
        if g1.degree > 0:
            a, d = a.exact_quo(g1), d.exact_quo(g1)
        if g2.degree > 0:
            c, b = c.exact_quo(g2), b.exact_quo(g2)
        return RatFunc(a * c, b * d, normalized=True)._monic_den()

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero rational function")
        if not self.mode.exact:
            return RatFunc(self.den, self.num)
        return RatFunc(self.den, self.num, normalized=True)._monic_den()

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        if self.mode.exact:
            return RatFunc(self.num ** e, self.den ** e, normalized=True)
        return RatFunc(self.num ** e, self.den ** e)

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except ModeError:
            return False
        if self.mode.exact:
            return self.num == o.num and self.den == o.den
        return (self.num * o.den - o.num * self.den).is_zero()

    def __hash__(self):
        return hash((self.num, self.den))

    def derivative(self) -> "RatFunc":
        n, d = self.num, self.den
        return RatFunc(n.derivative() * d - n * d.derivative(), d * d)

    def __call__(self, x, tol: float = 1e-14):
        den = self.den(x)
        if self.mode is Mode.COMPLEX or mode_of(x) is Mode.COMPLEX:
            if abs(den) <= tol * max(self.den.abs_scale(x), 1e-300):
                raise ZeroDivisionError("rational function evaluated at a pole")
        elif not den:
            raise ZeroDivisionError("rational function evaluated at a pole")
        return self.num(x) / den

    def to_mode(self, mode: Mode) -> "RatFunc":
        return RatFunc(self.num.to_mode(mode), self.den.to_mode(mode),
                       normalized=mode is Mode.COMPLEX or self.mode.exact)

    def __repr__(self):
        return f"RatFunc({self})"

    def __str__(self):
        if self.is_poly() and not self.den.leading - 1:
            return str(self.num)
        return f"({self.num})/({self.den})"


def ratfunc_arith(a: RatFunc, b: RatFunc, kind: str) -> RatFunc:
    """``kind`` is one of ``"add"``, ``"sub"``, ``"mul"``, ``"div"``."""
    if a.mode is not b.mode:
        raise ModeError("mode mismatch")
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise ValueError(f"unknown rational function operation {kind!r}")


# ---------------------------------------------------------------------------
# Root finding


@dataclass(frozen=True)
class RootSet:
    roots: tuple[complex, ...]
    residuals: tuple[float, ...]
    min_separation: float
    iterations: int
    precise: tuple | None = None  # gmpy2.mpc roots when refined

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)


def _initial_guesses(c: np.ndarray) -> np.ndarray:
    """Starting points on circles read off the Newton polygon of ``|c_k|``."""
    n = len(c) - 1
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(c))
    pts = [k for k in range(n + 1) if np.isfinite(logs[k])]
    hull: list[int] = []
    for k in pts:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            if (logs[j] - logs[i]) * (k - i) <= (logs[k] - logs[i]) * (j - i):
                hull.pop()
            else:
                break
        hull.append(k)
    guesses = []
    sigma = 0.7
    for i, j in zip(hull, hull[1:]):
        m = j - i
        r = math.exp((logs[i] - logs[j]) / m)
        for k in range(m):
            ang = 2 * math.pi * k / m + 2 * math.pi * i / n + sigma
            guesses.append(r * cmath.exp(1j * ang))
    return np.array(guesses, dtype=complex)


def _aberth(c: np.ndarray, z: np.ndarray, max_iter: int, rtol: float):
    n = len(z)
    desc = c[::-1]
    ddesc = np.polyder(desc)
    active = np.ones(n, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        zi = z[idx]
        p = np.polyval(desc, zi)
        dp = np.polyval(ddesc, zi)
        diff = zi[:, None] - z[None, :]
        diff[np.arange(idx.size), idx] = np.inf
        s = np.sum(1.0 / diff, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            w = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(w)
        if bad.any():
            w[bad] = 0.0
            # exact hit on a root (p == 0) freezes it
            active[idx[bad & (p == 0)]] = False
        z[idx] = zi - w
        # backward-error stopping: |p| at rounding level, or tiny updates
        scale = np.polyval(np.abs(desc), np.abs(zi))
        done = (np.abs(w) <= rtol * np.maximum(np.abs(zi), 1e-300)) | (np.abs(p) <= 4 * n * 2.2e-16 * scale)
        active[idx[done]] = False
    return z, it, active


def find_roots(p: Poly, tol: float = 1e-10, max_iter: int = 500, digits: int | None = None) -> RootSet:
    """All complex roots of ``p`` by Aberth-Ehrlich iteration plus Newton polish.

    Each root ``r`` is certified by ``|p(r)| <= tol * sum_i |a_i| |r|^i``.
    Clustered roots are kept apart and show up in ``min_separation``.

    For an exact ``p``, ``digits`` requests a further Newton refinement on
    the exact coefficients at that many decimal digits; the refined roots
    are in ``precise`` and their roundings in ``roots``.

    >>> sorted(round(r.real) for r in find_roots(Poly((2, -1, -2, 1))))
    [-1, 1, 2]
    """
    if p.is_zero() or p.degree < 1:
        raise ValueError("find_roots needs a polynomial of degree >= 1")
    c = p.float_coeffs()
    c = c / c[-1]
    # factor out roots at zero exactly
    nz = 0
    while nz < len(c) - 1 and not c[nz]:
        nz += 1
    core = c[nz:]
    n = len(core) - 1
    if n == 0:
        roots = np.zeros(0, dtype=complex)
        it = 0
    elif n == 1:
        roots = np.array([-core[0] / core[1]])
        it = 0
    else:
        z0 = _initial_guesses(core)
        roots, it, active = _aberth(core, z0.copy(), max_iter, 1e-13)
        if active.any():
            raise RootFindingError(f"Aberth iteration did not converge after {max_iter} steps "
                                   f"({int(active.sum())} of {n} roots unsettled)")
        roots = _newton_polish(core, roots)
    roots = np.concatenate([roots, np.zeros(nz, dtype=complex)])
    if digits is not None:
        if not p.mode.exact:
            raise ModeError("refinement needs exact coefficients")
        precise = _mp_refine(p, roots, digits)
        return _root_set([complex(r) for r in precise], c, it, precise)
    return _root_set(roots, c, it, None, tol)


def _root_set(roots, c, it, precise, tol=None) -> RootSet:
    roots = np.asarray(roots, dtype=complex)
    desc = c[::-1]
    resid = np.abs(np.polyval(desc, roots))
    scale = np.polyval(np.abs(desc), np.abs(roots))
    if tol is not None and np.any(resid > tol * np.maximum(scale, 1e-300)):
        worst = float(np.max(resid / np.maximum(scale, 1e-300)))
        raise RootFindingError(f"root residual certification failed (relative {worst:.3g} > {tol:g})")
    deg = len(roots)
    if deg > 1:
        d = np.abs(roots[:, None] - roots[None, :])
        d[np.arange(deg), np.arange(deg)] = np.inf
        sep = float(d.min())
    else:
        sep = math.inf
    return RootSet(tuple(complex(r) for r in roots), tuple(float(x) for x in resid), sep, it,
                   tuple(precise) if precise is not None else None)


def _mp_refine(p: Poly, roots, digits: int, max_sweeps: int = 200) -> list:
    """Aberth sweeps on the exact coefficients at ``digits`` decimal digits.

    Starting from double precision roots this converges in a few sweeps;
    the mutual repulsion term keeps clustered roots apart where plain
    Newton would let them merge.
    """
    dp = p.derivative()
    with working_digits(digits):
        zs = [gmpy2.mpc(complex(r)) for r in roots]
        n = len(zs)
        # cubic convergence: a step below 10^(-digits/3) leaves an error at
        # the working precision
        eps = gmpy2.mpfr(10) ** (-(digits // 3))
        active = [True] * n
        for _ in range(max_sweeps):
            if not any(active):
                break
            for i in range(n):
                if not active[i]:
                    continue
                zi = zs[i]
                d = dp.mp_eval(zi)
                v = p.mp_eval(zi)
                if v == 0:
                    active[i] = False
                    continue
                if d == 0:
                    # nudge off a critical point
                    zs[i] = zi + eps * max(1, abs(zi))
                    continue
                ratio = v / d
                rep = sum(1 / (zi - zs[j]) for j in range(n) if j != i)
                w = ratio / (1 - ratio * rep)
                zs[i] = zi - w
                if abs(w) <= eps * max(1, abs(zi)):
                    active[i] = False
        if any(active):
            raise RootFindingError("Aberth refinement did not converge")
    sep = min((abs(complex(a) - complex(b)) for i, a in enumerate(zs) for b in zs[i + 1:]), default=math.inf)
    if sep < 1e-12 * max(1.0, max(abs(complex(r)) for r in zs)):
        raise RootFindingError("refinement merged distinct roots")
    return zs


def _newton_polish(c: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    desc = c[::-1]
    ddesc = np.polyder(desc)
    out = roots.copy()
    for k in range(len(out)):
        r = out[k]
        best = abs(np.polyval(desc, r))
        for _ in range(steps):
            dp = np.polyval(ddesc, r)
            if not dp:
                break
            cand = r - np.polyval(desc, r) / dp
            val = abs(np.polyval(desc, cand))
            if val >= best:
                break
            r, best = cand, val
        out[k] = r
    return out


@dataclass(frozen=True)
class JacobiSum:
    """``sum g(r)/f'(r)`` over the roots of ``f``."""

    value: complex
    scale: float  # sum of |g(r)/f'(r)|
    bound_holds: bool  # deg g <= deg f - 2, so the sum must vanish
    roots: RootSet

    def __complex__(self):
        return complex(self.value)

    @property
    def relative(self) -> float:
        return abs(self.value) / self.scale if self.scale else 0.0


def jacobi_sum(f: Poly, g: Poly, sep_tol: float = 1e-7, digits: int | None = None,
               roots: RootSet | None = None) -> JacobiSum:
    """``sum g(r)/f'(r)`` over the roots of ``f``.

    With exact inputs and ``digits`` the roots and terms are computed in
    MPFR arithmetic at that precision.  ``roots`` may pass in a root set of
    ``f`` that is already known.
    """
    if f.mode is not g.mode:
        raise ModeError("mode mismatch")
    if f.degree < 1:
        raise ValueError("f must be non-constant")
    if not f(0):
        raise ValueError("f(0) = 0: Jacobi's residue identity needs f(0) != 0")
    rs = roots if roots is not None else find_roots(f, digits=digits)
    if len(rs) != f.degree:
        raise ValueError("root set does not match the degree of f")
    if rs.min_separation < sep_tol:
        raise GenericityError(f"f has (nearly) multiple roots: separation {rs.min_separation:.3g}")
    if rs.precise is not None:
        df = f.derivative()
        with working_digits(digits):
            terms = [complex(g.mp_eval(r) / df.mp_eval(r)) for r in rs.precise]
    else:
        fc = f.to_mode(Mode.COMPLEX)
        gc = g.to_mode(Mode.COMPLEX)
        df = fc.derivative()
        terms = [gc(r) / df(r) for r in rs.roots]
    return JacobiSum(
        value=complex(sum(terms)),
        scale=float(sum(abs(t) for t in terms)),
        bound_holds=g.degree <= f.degree - 2,
        roots=rs,
    )


def _random_gaussian_poly(rng: np.random.Generator, degree: int, bound: int = 9) -> Poly:
    while True:
        cs = [gaussian(int(a), int(b)) for a, b in rng.integers(-bound, bound + 1, size=(degree + 1, 2))]
        if cs[-1]:
            return Poly(cs, Mode.GAUSSIAN)


def jacobi_self_test(count: int, rng: np.random.Generator, tol: float = 1e-9,
                     max_degree: int = 12, digits: int = 50):
    """Random instances of Jacobi's identity over Q(i).

    ``f`` has Gaussian-integer coefficients, ``f(0) != 0`` and separated
    roots (otherwise it is redrawn); ``deg g <= deg f - 2``.
    """
    from .report import CertificationReport

    report = CertificationReport("jacobi", {"count": count, "tol": tol, "max_degree": max_degree})
    i = 0
    while i < count:
        deg = int(rng.integers(2, max_degree + 1))
        f = _random_gaussian_poly(rng, deg)
        if not f(0):
            continue
        g = _random_gaussian_poly(rng, int(rng.integers(0, deg - 1)))
        try:
            js = jacobi_sum(f, g, digits=digits)
        except (GenericityError, RootFindingError):
            continue
        report.record(f"trial {i} deg f={deg} deg g={g.degree}",
                      js.bound_holds and abs(js.value) <= tol * js.scale, relative=js.relative)
        i += 1
    return report
