"""The family ``S_k(z)``: ``S_0 = 0``, ``S_1 = 1``, ``S_{k+1} = z S_k - S_{k-1}``.

Defined for every integer ``k`` (the recursion runs backwards for negative
indices, giving ``S_{-k} = -S_k``).  Values are cached per scalar mode.
"""

from __future__ import annotations

import threading

from .algebra import Mode, Poly
from .report import CertificationReport

_lock = threading.Lock()
_tables: dict[Mode, dict[int, Poly]] = {}


def _table(mode: Mode) -> dict[int, Poly]:
    table = _tables.get(mode)
    if table is None:
        table = {0: Poly.zero(mode), 1: Poly.const(1, mode)}
        _tables[mode] = table
    return table


def cheb(k: int, mode: Mode = Mode.RATIONAL) -> Poly:
    """``S_k`` as a polynomial in ``z``.

    >>> cheb(3)
    Poly(z^2 - 1)
    >>> cheb(-2)
    Poly(-z)
    """
    table = _tables.get(mode)
    if table is not None and k in table:
        return table[k]
    with _lock:
        table = _table(mode)
        z = Poly.z(mode)
        if k > 0:
            top = max(j for j in table if j >= 0)
            for j in range(top, k):
                table[j + 1] = z * table[j] - table[j - 1]
        else:
            bottom = min(j for j in table if j <= 1)
            for j in range(bottom, k, -1):
                # S_{j-1} = z S_j - S_{j+1}
                table[j - 1] = z * table[j] - table[j + 1]
        return table[k]


def cheb_derivative(k: int, mode: Mode = Mode.RATIONAL) -> Poly:
    return cheb(k, mode).derivative()


def cheb_identity_suite(k_max: int) -> CertificationReport:
    """Check the exact identities used throughout for every ``|k| <= k_max``.

    (i)   S_k^2 - z S_k S_{k-1} + S_{k-1}^2 = 1
    (ii)  k S_{k-1} + (k-1) S_k = (z+2)(S'_k - S'_{k-1})
    (iii) (z^2-4) S'_k = (k-1) z S_k - 2k S_{k-1}
    (iv)  (z^2-4) S'_{k-1} = 2(k-1) S_k - z k S_{k-1}
    (v)   derivative of (i)
    """
    report = CertificationReport("chebyshev", {"k_max": k_max})
    z = Poly.z()
    one = Poly.const(1)
    for k in range(-k_max, k_max + 1):
        s, t = cheb(k), cheb(k - 1)
        ds, dt = s.derivative(), t.derivative()
        checks = {
            "i": s * s - z * s * t + t * t - one,
            "ii": k * t + (k - 1) * s - (z + 2) * (ds - dt),
            "iii": (z * z - 4) * ds - ((k - 1) * z * s - 2 * k * t),
            "iv": (z * z - 4) * dt - (2 * (k - 1) * s - z * k * t),
            "v": 2 * s * ds - s * t - z * ds * t - z * s * dt + 2 * t * dt,
        }
        for name, residual in checks.items():
            report.record(f"({name}) k={k}", residual.is_zero(), residual=str(residual) if residual else "0")
    return report
