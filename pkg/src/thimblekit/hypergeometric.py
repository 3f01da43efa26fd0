"""Gauss hypergeometric function on the principal sheet and along paths.

``hyp2f1`` combines the Taylor series at 0, the Pfaff transformation, the
logarithmic expansion at ``x = 1`` for ``c = a + b`` and, everywhere else,
chained Taylor re-expansion of the hypergeometric ODE

    x (1 - x) F'' + (c - (a + b + 1) x) F' - a b F = 0.

Points on the cut ``(1, inf)`` are read as limits from the side given by the
sign of ``Im x`` (``+0.0`` above, ``-0.0`` below).
"""
from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.special import digamma, gamma

from .errors import UnsupportedGermError

SERIES_RADIUS = 0.8
LOG_RADIUS = 0.75
STEP_FRACTION = 0.4
_EPS = 1e-17
_MAX_TERMS = 400


def _series(a, b, c, x: complex) -> tuple[complex, complex]:
    """Taylor sum at 0 returning ``F`` and ``F'``."""
    coef, xp = 1.0 + 0j, 1.0 + 0j
    f, df = 0j, 0j
    for n in range(_MAX_TERMS):
        nxt = coef * (a + n) * (b + n) / ((c + n) * (n + 1))
        f += coef * xp
        df += (n + 1) * nxt * xp
        if n > 2 and abs(coef * xp) < _EPS * abs(f) and abs(nxt * xp) * n < _EPS * (1 + abs(df)):
            break
        coef = nxt
        xp *= x
    return f, df


def _log_expansion(a, b, x: complex) -> tuple[complex, complex]:
    """``F(a, b; a+b; x)`` for ``|1 - x| < 1`` from the logarithmic expansion.

    ``F = K sum_n (a)_n (b)_n / (n!)^2 [2 psi(n+1) - psi(a+n) - psi(b+n)
    - log(1-x)] (1-x)^n`` with ``K = Gamma(a+b) / (Gamma(a) Gamma(b))``.
    """
    y = complex(1.0 - x.real, -x.imag)  # keeps the sign of a zero imaginary part
    L = cmath.log(y)
    K = gamma(a + b) / (gamma(a) * gamma(b))
    pa, pb, p1 = digamma(a), digamma(b), digamma(1.0)
    w = 1.0 + 0j  # (a)_n (b)_n / (n!)^2 y^n
    f = 0j
    dfy = 0j  # derivative with respect to y
    for n in range(_MAX_TERMS):
        h = 2.0 * p1 - pa - pb
        f += w * (h - L)
        if n > 0:
            dfy += w * (h - L) * n / y
        dfy -= w / y
        if abs(w) < _EPS * (1 + abs(f)) and n > 4:
            break
        w *= (a + n) * (b + n) / ((n + 1) ** 2) * y
        p1 += 1.0 / (n + 1)
        pa += 1.0 / (a + n)
        pb += 1.0 / (b + n)
    return K * f, -K * dfy


def _pfaff(a, b, c, x: complex) -> tuple[complex, complex]:
    """``F(a,b;c;x) = (1-x)^(-a) F(a, c-b; c; x/(x-1))``."""
    y = x / (x - 1.0)
    g, dg = _series(a, c - b, c, y)
    pre = (1.0 - x) ** (-a)
    dy = -1.0 / (x - 1.0) ** 2
    return pre * g, pre * (a / (1.0 - x) * g + dg * dy)


def taylor_coefficients(a, b, c, x0: complex, f0: complex, df0: complex,
                        n_terms: int) -> np.ndarray:
    """Coefficients of ``F(x0 + t)`` from the ODE recurrence."""
    return np.array(_coefficients(a, b, c, complex(x0), complex(f0), complex(df0), n_terms))


def _coefficients(a, b, c, x0: complex, f0: complex, df0: complex, n_terms: int) -> list:
    # plain complex arithmetic: numpy scalar indexing dominates otherwise
    p0, p1 = x0 * (1.0 - x0), 1.0 - 2.0 * x0
    q0, q1 = c - (a + b + 1.0) * x0, -(a + b + 1.0)
    r = -a * b
    inv = 1.0 / p0
    f = [f0, df0]
    for k in range(n_terms - 2):
        f.append(-((p1 * k * (k + 1) + q0 * (k + 1)) * f[k + 1]
                   + (-k * (k - 1) + q1 * k + r) * f[k]) * inv / ((k + 1) * (k + 2)))
    return f


def _radius(x0: complex) -> float:
    return min(abs(x0), abs(1.0 - x0))


def taylor_step(a, b, c, x0: complex, f0: complex, df0: complex,
                x1: complex) -> tuple[complex, complex]:
    """Re-expand at ``x0`` and evaluate ``F, F'`` at ``x1``."""
    t = x1 - x0
    ratio = abs(t) / _radius(x0)
    if ratio >= 0.95:
        raise ValueError("continuation step leaves the disc of convergence")
    n = min(_MAX_TERMS, max(20, int(math.log(1e-18) / math.log(max(ratio, 1e-3))) + 10))
    coef = _coefficients(a, b, c, x0, f0, df0, n)
    val, der = 0j, 0j
    for k in range(n - 1, 0, -1):
        der = der * t + k * coef[k]
        val = val * t + coef[k]
    return val * t + coef[0], der


def continue_along(a, b, c, path, f0: complex, df0: complex,
                   step_fraction: float = STEP_FRACTION) -> tuple[complex, complex]:
    """Continue ``(F, F')`` along the polyline ``path`` starting at ``path[0]``.

    Each straight piece is cut into steps no longer than ``step_fraction``
    times the distance to the nearest singular point ``0`` or ``1``.
    """
    x = complex(path[0])
    f, df = f0, df0
    for target in path[1:]:
        target = complex(target)
        while abs(target - x) > 0:
            h = step_fraction * _radius(x)
            if h < 1e-14:
                raise UnsupportedGermError("continuation path runs into a singular point")
            d = target - x
            nxt = target if abs(d) <= h else x + d * (h / abs(d))
            f, df = taylor_step(a, b, c, x, f, df, nxt)
            x = nxt
    return f, df


def _side(x: complex) -> float:
    return math.copysign(1.0, x.imag)


def hyp2f1_with_derivative(a, b, c, x: complex) -> tuple[complex, complex]:
    """``(F, F')`` at ``x`` on the principal sheet (see module notes on the cut)."""
    x = complex(x)
    if c <= 0 and float(c).is_integer():
        raise UnsupportedGermError("c must not be a non-positive integer")
    if abs(x) <= SERIES_RADIUS:
        return _series(a, b, c, x)
    if x == 1:
        raise UnsupportedGermError("x = 1 is a singular point")
    if abs(c - a - b) < 1e-15 and abs(1.0 - x) <= LOG_RADIUS:
        return _log_expansion(a, b, x)
    if x.real < 1.0 and abs(x / (x - 1.0)) <= SERIES_RADIUS:
        return _pfaff(a, b, c, x)
    start = complex(0.5, 0.5 * _side(x))
    f0, df0 = _series(a, b, c, start)
    return continue_along(a, b, c, [start, x], f0, df0)


def hyp2f1(a, b, c, x):
    """Principal-branch ``2F1(a, b; c; x)``; vectorizes over ``x``."""
    if np.ndim(x) == 0:
        return hyp2f1_with_derivative(a, b, c, x)[0]
    arr = np.asarray(x, dtype=complex)
    out = np.empty(arr.shape, dtype=complex)
    for idx, v in np.ndenumerate(arr):
        out[idx] = hyp2f1_with_derivative(a, b, c, v)[0]
    return out
