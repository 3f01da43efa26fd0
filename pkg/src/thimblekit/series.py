"""Truncated formal power series with exact coefficients, and saddle expansions.

Coefficients are ``Fraction`` or :class:`~thimblekit.exact.GaussianRational`
and stay exact through ring operations, ``exp`` and ``log``. Floating point
appears only in :meth:`PowerSeries.evaluate` and the numerical density
:func:`gelfand_leray_density`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .actions import Action, CriticalPoint, ModelKind, critical_point
from .errors import ContinuationError
from .exact import GaussianRational, I

#: Largest supported truncation order.
MAX_TERMS = 64


def _clean(c):
    if isinstance(c, GaussianRational):
        return c.re if c.im == 0 else c
    return Fraction(c)


@dataclass(frozen=True)
class PowerSeries:
    """``hbar**alpha * sum_m coeffs[m] * hbar**m`` truncated after ``len(coeffs)``.

    Parameters
    ----------
    coeffs : sequence
        Exact coefficients; ints are promoted to ``Fraction``.
    alpha : Fraction
        Starting exponent (0 or 1/2 here).
    """

    coeffs: tuple
    alpha: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(_clean(c) for c in self.coeffs))
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if not self.coeffs:
            raise ValueError("a series needs at least one coefficient")

    @property
    def N(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, m: int):
        return self.coeffs[m]

    def __len__(self) -> int:
        return len(self.coeffs)

    def truncate(self, n: int) -> "PowerSeries":
        return PowerSeries(self.coeffs[:n], self.alpha)

    def _match(self, other: "PowerSeries") -> int:
        if self.alpha != other.alpha:
            raise ValueError("series with different starting exponents")
        return min(self.N, other.N)

    def __add__(self, other):
        if not isinstance(other, PowerSeries):
            c = list(self.coeffs)
            c[0] = c[0] + other
            return PowerSeries(c, self.alpha)
        n = self._match(other)
        return PowerSeries([a + b for a, b in zip(self.coeffs[:n], other.coeffs[:n])],
                           self.alpha)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries([-c for c in self.coeffs], self.alpha)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            return PowerSeries([c * other for c in self.coeffs], self.alpha)
        n = min(self.N, other.N)
        out = []
        for m in range(n):
            out.append(sum((self.coeffs[k] * other.coeffs[m - k] for k in range(m + 1)),
                           Fraction(0)))
        return PowerSeries(out, self.alpha + other.alpha)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return self.alpha == other.alpha and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.alpha, self.coeffs))

    def substitute(self, scale) -> "PowerSeries":
        """Series in ``scale*hbar`` (the ``hbar**alpha`` factor is left alone)."""
        out, pw = [], Fraction(1)
        for c in self.coeffs:
            out.append(c * pw)
            pw = pw * scale
        return PowerSeries(out, self.alpha)

    def exp(self) -> "PowerSeries":
        """``exp`` of a series with zero constant term.

        Uses ``f' = g' f``, i.e. ``f_n = (1/n) sum_k k g_k f_{n-k}``.
        """
        if self.alpha != 0 or self.coeffs[0] != 0:
            raise ValueError("exp needs an integer-power series with zero constant term")
        g = self.coeffs
        f = [Fraction(1)]
        for n in range(1, self.N):
            s = sum((k * g[k] * f[n - k] for k in range(1, n + 1)), Fraction(0))
            f.append(s / n)
        return PowerSeries(f)

    def log(self) -> "PowerSeries":
        """``log`` of a series with constant term 1 (inverse of :meth:`exp`)."""
        if self.alpha != 0 or self.coeffs[0] != 1:
            raise ValueError("log needs an integer-power series with constant term 1")
        f = self.coeffs
        g = [Fraction(0)]
        for n in range(1, self.N):
            s = n * f[n] - sum((k * g[k] * f[n - k] for k in range(1, n)), Fraction(0))
            g.append(s / n)
        return PowerSeries(g)

    def complex_coeffs(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs])

    def evaluate(self, hbar: complex, terms: int | None = None) -> complex:
        """Partial sum at ``hbar`` (principal power for ``hbar**alpha``)."""
        c = self.complex_coeffs()[:terms]
        val = np.polyval(c[::-1], hbar)
        return complex(val * hbar ** float(self.alpha)) if self.alpha else complex(val)


@dataclass(frozen=True)
class TransMonomial:
    """``exp(-action/hbar) * gauss * hbar**(hbar_half_power/2) * series(hbar)``."""

    action: complex
    gauss: complex
    series: PowerSeries
    hbar_half_power: int = 1
    label: str = ""

    def __mul__(self, other: "TransMonomial") -> "TransMonomial":
        return TransMonomial(self.action + other.action, self.gauss * other.gauss,
                             self.series * other.series,
                             self.hbar_half_power + other.hbar_half_power)

    def evaluate(self, hbar: float, terms: int | None = None) -> complex:
        """Truncated sum, useful only for small ``hbar``."""
        return (cmath.exp(-self.action / hbar) * self.gauss
                * hbar ** (0.5 * self.hbar_half_power) * self.series.evaluate(hbar, terms))


# Coefficient generators ------------------------------------------------------

def _check_terms(N: int) -> None:
    if not 1 <= N <= MAX_TERMS:
        raise ValueError(f"N must lie in [1, {MAX_TERMS}]")


def airy_coefficients(N: int) -> list[Fraction]:
    """``c_m = (6m)! / (576**m (2m)! (3m)!)`` by the ratio recurrence."""
    _check_terms(N)
    c = [Fraction(1)]
    for m in range(1, N):
        # ratio c_m / c_{m-1}
        num = math.prod(range(6 * m - 5, 6 * m + 1))
        den = 576 * (2 * m - 1) * (2 * m) * (3 * m - 2) * (3 * m - 1) * (3 * m)
        c.append(c[-1] * Fraction(num, den))
    return c


def airy_phi(N: int) -> tuple[PowerSeries, PowerSeries]:
    """Reduced saddle series at ``p+`` and ``p-`` (the latter alternates)."""
    c = airy_coefficients(N)
    plus = PowerSeries(c)
    return plus, plus.substitute(-1)


def bessel_coefficients(N: int) -> list[Fraction]:
    """``a_m = ((2m-1)!!)**2 / (m! 8**m)``."""
    _check_terms(N)
    a = [Fraction(1)]
    for m in range(1, N):
        a.append(a[-1] * Fraction((2 * m - 1) ** 2, 8 * m))
    return a


def bessel_phi(N: int) -> tuple[PowerSeries, PowerSeries]:
    """Reduced saddle series at ``w+`` (alternating) and ``w-``."""
    minus = PowerSeries(bessel_coefficients(N))
    return minus.substitute(-1), minus


def bernoulli(n: int) -> list[Fraction]:
    """``B_0 .. B_n`` with ``B_1 = -1/2``, from ``sum_k C(m+1,k) B_k = 0``."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        s = sum((math.comb(m + 1, k) * B[k] for k in range(m)), Fraction(0))
        B.append(-s / (m + 1))
    return B


def stirling_log(N: int) -> PowerSeries:
    """``sum_k B_2k / (2k (2k-1)) hbar**(2k-1)`` truncated to ``N`` terms."""
    _check_terms(N)
    B = bernoulli(N + 1)
    g = [Fraction(0)] * N
    for k in range(1, (N + 1) // 2 + 1):
        m = 2 * k - 1
        if m < N:
            g[m] = B[2 * k] / (2 * k * (2 * k - 1))
    return PowerSeries(g)


def stirling_phi(N: int) -> PowerSeries:
    """Stirling series ``exp(stirling_log)``: ``1 + hbar/12 + hbar**2/288 + ...``."""
    return stirling_log(N).exp()


def gamma_phi(N: int) -> PowerSeries:
    """Reduced Gamma saddle series ``stirling_phi(i*hbar)``."""
    return stirling_phi(N).substitute(I)


def gamma_log(N: int) -> PowerSeries:
    """``log`` of :func:`gamma_phi`, i.e. ``stirling_log(i*hbar)``."""
    return stirling_log(N).substitute(I)


# Transmonomials --------------------------------------------------------------

_SQRT_PI = math.sqrt(math.pi)
_SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class SaddleData:
    """Action (in the model's wall frame) and Gaussian constant of a saddle."""

    label: str
    action: complex
    gauss: complex
    index: int | None = field(default=None)


def saddle_data(kind: ModelKind | str, label: str) -> SaddleData:
    """Exponential weight and Gaussian constant in the wall frame.

    Airy is unrotated; Bessel and Gamma use ``A = -i S`` so the Stokes ray is
    the positive real axis.
    """
    kind = ModelKind(kind)
    if kind is ModelKind.AIRY:
        table = {"p+": (-2.0 / 3.0, -_SQRT_PI), "p-": (2.0 / 3.0, -1j * _SQRT_PI)}
        A, C = table[label]
        return SaddleData(label, complex(A), complex(C))
    if kind is ModelKind.BESSEL:
        table = {"w+": (1.0, _SQRT_2PI), "w-": (-1.0, 1j * _SQRT_2PI)}
        A, C = table[label]
        return SaddleData(label, complex(A), complex(C))
    p = critical_point(Action(kind), label)
    n = p.index
    return SaddleData(label, complex(-2 * math.pi * n, -1.0),
                      cmath.exp(0.25j * math.pi) * _SQRT_2PI, n)


def saddle_series(kind: ModelKind | str, label: str, N: int) -> PowerSeries:
    kind = ModelKind(kind)
    if kind is ModelKind.AIRY:
        plus, minus = airy_phi(N)
        return {"p+": plus, "p-": minus}[label]
    if kind is ModelKind.BESSEL:
        plus, minus = bessel_phi(N)
        return {"w+": plus, "w-": minus}[label]
    critical_point(Action(kind), label)
    return gamma_phi(N)


def transmonomial(kind: ModelKind | str, label: str, N: int = 24) -> TransMonomial:
    """Formal saddle expansion ``exp(-A/hbar) C sqrt(hbar) phi(hbar)``."""
    d = saddle_data(kind, label)
    return TransMonomial(d.action, d.gauss, saddle_series(kind, label, N), 1, label)


# Gelfand-Leray density -------------------------------------------------------

def _newton(a: Action, target: complex, z: complex, tol: float = 1e-15,
            maxit: int = 50) -> complex:
    prev = math.inf
    for _ in range(maxit):
        dz = (complex(a.value(z)) - target) / complex(a.grad(z))
        z -= dz
        if abs(dz) <= tol * (1.0 + abs(z)):
            return z
        # near the saddle the residual is limited by cancellation in A(z) - target
        if abs(dz) >= 0.5 * prev and abs(dz) <= 1e-9 * (1.0 + abs(z)):
            return z
        prev = abs(dz)
    raise ContinuationError("Newton iteration did not converge")


def gelfand_leray_density(a: Action, p: CriticalPoint, xi: complex, *,
                          orient: complex | None = None, steps: int = 64) -> complex:
    """Density ``dz_A/dxi - dz_B/dxi`` of the vanishing cycle over ``xi``.

    The two preimages of ``A(z) - A(p) = xi`` near ``p`` are seeded from the
    Morse coordinate at ``xi/steps`` and continued along the straight ray to
    ``xi`` by predictor-corrector steps.

    Parameters
    ----------
    a : Action
        Possibly rotated action ``A``.
    orient : complex, optional
        Unit direction ``u`` with ``A''(p) u**2 > 0`` selecting branch A.
        Defaults to the principal one.

    Returns
    -------
    complex
        ``1/A'(z_A) - 1/A'(z_B)``.
    """
    xi = complex(xi)
    if xi == 0:
        raise ValueError("density is singular at xi = 0")
    h = a.rotation * p.hessian
    u = cmath.exp(-0.5j * cmath.phase(h))
    if orient is not None and (orient.conjugate() * u).real < 0:
        u = -u
    base = complex(a.value(p.position))
    ends = []
    for sgn in (1.0, -1.0):
        x0 = xi / steps
        z = p.position + sgn * u * cmath.sqrt(2.0 * x0 / abs(h))
        z = _newton(a, base + x0, z)
        for k in range(2, steps + 1):
            xk = xi * k / steps
            z = _newton(a, base + xk, z + (xi / steps) / complex(a.grad(z)))
        ends.append(z)
    za, zb = ends
    if abs(za - zb) < 1e-8 * (1.0 + abs(za)):
        raise ContinuationError("the two preimage branches collided")
    return 1.0 / complex(a.grad(za)) - 1.0 / complex(a.grad(zb))


__all__ = [
    "PowerSeries", "TransMonomial", "SaddleData", "airy_coefficients", "airy_phi",
    "bessel_coefficients", "bessel_phi", "bernoulli", "stirling_log", "stirling_phi",
    "gamma_phi", "gamma_log", "saddle_data", "saddle_series", "transmonomial",
    "gelfand_leray_density",
]
