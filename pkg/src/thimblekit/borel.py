"""Borel transforms, singularity location, local variations and Stokes constants."""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .actions import ModelKind
from .errors import NotAvailableError, UnsupportedGermError
from .exact import GaussianRational
from .hypergeometric import (
    continue_along,
    hyp2f1_with_derivative,
    taylor_step,
)
from .series import (
    PowerSeries,
    airy_phi,
    bessel_phi,
    gamma_log,
    gamma_phi,
)

RESIDUE_FLOOR = 1e-8
POLE_DRIFT = 1e-2
VARIATION_POINTS = 64
VARIATION_RADIUS_FRACTION = 0.1
PRECISION_LOSS = 1e-6


@dataclass(frozen=True)
class ClosedForm:
    """Closed-form evaluator of a germ.

    ``tag = "hyp2f1"``: ``factor * 2F1(a, b; c; scale*xi)`` with
    ``params = (a, b, c, scale)``. ``tag = "binet"``:
    ``factor * (1/(exp(i xi) - 1) - 1/(i xi) + 1/2) / xi``. ``tag = "pole"``:
    ``factor / (1 - xi/omega)`` with ``params = (omega,)``.
    """

    tag: str
    params: tuple = ()
    factor: complex = 1.0 + 0j


@dataclass
class BorelGerm:
    """``xi**exponent * sum_k coeffs[k] * xi**k`` with exact or float coefficients.

    ``transform`` is ``"ordinary"`` (exponent 0) or ``"shifted"`` (exponent
    ``alpha - 1``). Exact coefficients of shifted half-integer transforms are
    stored without the common factor ``pi**(-inv_sqrt_pi/2)``.
    """

    coeffs: list
    alpha: Fraction = Fraction(0)
    transform: str = "ordinary"
    closed_form: ClosedForm | None = None
    known_singularities: list = field(default_factory=list)
    inv_sqrt_pi: int = 0

    @property
    def exponent(self) -> Fraction:
        return Fraction(0) if self.transform == "ordinary" else self.alpha - 1

    def taylor(self) -> np.ndarray:
        """Floating-point coefficients including the ``sqrt(pi)`` factor."""
        scale = math.pi ** (-0.5 * self.inv_sqrt_pi)
        return np.array([complex(c) for c in self.coeffs]) * scale

    def scaled(self, c: complex) -> "BorelGerm":
        """The germ multiplied by a complex constant (coefficients become floats)."""
        cf = self.closed_form
        if cf is not None:
            cf = ClosedForm(cf.tag, cf.params, cf.factor * c)
        return BorelGerm(list(self.taylor() * c), self.alpha, self.transform, cf,
                         list(self.known_singularities))

    def __call__(self, xi: complex) -> complex:
        return self.evaluate(xi)

    def evaluate(self, xi: complex) -> complex:
        """Value at ``xi``: closed form when present, otherwise the Taylor sum.

        On a cut the side is taken from the sign of a zero imaginary part.
        """
        xi = complex(xi)
        cf = self.closed_form
        if cf is None:
            c = self.taylor()
            return complex(np.polyval(c[::-1], xi)) * xi ** float(self.exponent)
        if cf.tag == "hyp2f1":
            a, b, c, scale = cf.params
            return cf.factor * hyp2f1_with_derivative(a, b, c, _scale(xi, scale))[0]
        if cf.tag == "binet":
            return cf.factor * binet_value(xi)
        if cf.tag == "pole":
            return cf.factor / (1.0 - xi / cf.params[0])
        raise UnsupportedGermError(f"unknown closed form {cf.tag!r}")

    def inverse(self) -> PowerSeries:
        """Undo the factorial weighting (exact coefficients only)."""
        if self.inv_sqrt_pi:
            raise ValueError("inverse of a sqrt(pi)-weighted germ is defined on the exact part")
        out = []
        for k, b in enumerate(self.coeffs):
            if self.transform == "ordinary":
                out.append(b * math.factorial(k))
            else:
                out.append(b * math.factorial(k + int(self.alpha) - 1))
        return PowerSeries(out, Fraction(0) if self.transform == "ordinary" else self.alpha)


def _scale(xi: complex, scale: float) -> complex:
    # real scaling keeps signed zeros on the cut
    return complex(scale * xi.real, scale * xi.imag)


def _binet_taylor(n: int = 40) -> np.ndarray:
    from .series import bernoulli
    B = bernoulli(2 * n)
    # coefficient of xi**(2k-2) is i**(2k-1) B_2k / (2k)!
    return np.array([(1j) ** (2 * k - 1) * float(B[2 * k] / math.factorial(2 * k))
                     for k in range(1, n + 1)])


_BINET_TAYLOR = _binet_taylor()


def binet_value(xi: complex) -> complex:
    """``(1/(exp(i xi) - 1) - 1/(i xi) + 1/2) / xi``, regular at 0.

    The Taylor series (radius ``2 pi``) is used for ``|xi| < 2`` where the
    closed form cancels.
    """
    xi = complex(xi)
    if abs(xi) < 2.0:
        return complex(np.polyval(_BINET_TAYLOR[::-1], xi * xi))
    w = 1j * xi
    return (1.0 / (cmath.exp(w) - 1.0) - 1.0 / w + 0.5) / xi


# Transforms ------------------------------------------------------------------

def borel_ordinary(s: PowerSeries) -> BorelGerm:
    """``sum s_m hbar**m -> sum s_m xi**m / m!``."""
    if s.alpha != 0:
        raise ValueError("the ordinary transform needs an integer-power series")
    coeffs = [c / math.factorial(m) for m, c in enumerate(s.coeffs)]
    return BorelGerm(_exactify(coeffs))


def borel_shifted(s: PowerSeries) -> BorelGerm:
    """``sum s_m hbar**(m+alpha) -> sum s_m xi**(m+alpha-1) / Gamma(m+alpha)``.

    Leading zero coefficients raise ``alpha``. Half-integer ``alpha`` keeps
    exact rationals times ``1/sqrt(pi)`` using
    ``Gamma(m + 1/2) = sqrt(pi) (2m)! / (4**m m!)``.
    """
    coeffs = list(s.coeffs)
    alpha = s.alpha
    while coeffs and coeffs[0] == 0 and len(coeffs) > 1:
        coeffs.pop(0)
        alpha += 1
    if alpha <= 0:
        raise ValueError("the shifted transform needs alpha > 0")
    out = []
    if alpha.denominator == 1:
        for m, c in enumerate(coeffs):
            out.append(c / math.factorial(m + int(alpha) - 1))
        return BorelGerm(_exactify(out), alpha, "shifted")
    if alpha.denominator == 2:
        base = int(alpha - Fraction(1, 2))
        for m, c in enumerate(coeffs):
            j = m + base  # Gamma(j + 1/2)
            out.append(c * Fraction(4**j * math.factorial(j), math.factorial(2 * j)))
        return BorelGerm(_exactify(out), alpha, "shifted", inv_sqrt_pi=1)
    raise ValueError("alpha must be an integer or half-integer")


def _exactify(cs: list) -> list:
    return [c.re if isinstance(c, GaussianRational) and c.im == 0 else c for c in cs]


# Model germs -----------------------------------------------------------------

def model_germ(kind: ModelKind | str, label: str, N: int = 40) -> BorelGerm:
    """Ordinary Borel germ of a reduced saddle series, with its closed form.

    Airy: ``2F1(1/6, 5/6; 1; +-3 xi/4)``; Bessel: ``2F1(1/2, 1/2; 1; -+xi/2)``.
    Gamma has no hypergeometric form; its germ carries no closed form and
    the singularities ``2 pi m``.
    """
    kind = ModelKind(kind)
    if kind is ModelKind.AIRY:
        plus, minus = airy_phi(N)
        s, sc = {"p+": (plus, 0.75), "p-": (minus, -0.75)}[label]
        g = borel_ordinary(s)
        g.closed_form = ClosedForm("hyp2f1", (1 / 6, 5 / 6, 1.0, sc))
        g.known_singularities = [complex(1 / sc)]
        return g
    if kind is ModelKind.BESSEL:
        plus, minus = bessel_phi(N)
        s, sc = {"w+": (plus, -0.5), "w-": (minus, 0.5)}[label]
        g = borel_ordinary(s)
        g.closed_form = ClosedForm("hyp2f1", (0.5, 0.5, 1.0, sc))
        g.known_singularities = [complex(1 / sc)]
        return g
    if not label.startswith("p_"):
        raise KeyError(label)
    g = borel_ordinary(gamma_phi(N))
    g.known_singularities = [2 * math.pi * m for m in (1, -1, 2, -2)]
    return g


def binet_germ(N: int = 40) -> BorelGerm:
    """Germ of ``log phi_Gamma`` whose Laplace transform is the series itself.

    Equals the shifted transform of :func:`gamma_log`; its closed form is
    meromorphic with simple poles at ``2 pi m``, ``m != 0``.
    """
    g = borel_shifted(gamma_log(N))
    g.closed_form = ClosedForm("binet")
    g.known_singularities = [2 * math.pi * m for m in (1, -1, 2, -2)]
    return g


# Pade ------------------------------------------------------------------------

@dataclass
class PadeScan:
    """Poles of a Padé approximant that survive the spurious-pole filter."""

    poles: list
    nearest: complex | None
    conclusive: bool
    order: int

    def __iter__(self):
        return iter(self.poles)


def _to_mp(c):
    if isinstance(c, Fraction):
        return mpmath.mpf(c.numerator) / c.denominator
    if isinstance(c, GaussianRational):
        return mpmath.mpc(_to_mp(c.re), _to_mp(c.im))
    return mpmath.mpc(complex(c))


def _pade_poles(coeffs: list, L: int, M: int, dps: int) -> list[tuple[complex, float]]:
    with mpmath.workdps(dps):
        mc = [_to_mp(c) for c in coeffs[:L + M + 1]]
        p, q = mpmath.pade(mc, L, M)
        while len(q) > 1 and q[-1] == 0:
            q = q[:-1]
        if len(q) <= 1:
            return []
        roots = mpmath.polyroots(q[::-1], maxsteps=400, extraprec=4 * dps)
        dq = [k * q[k] for k in range(1, len(q))]
        out = []
        for r in roots:
            pv = mpmath.polyval(p[::-1], r)
            dv = mpmath.polyval(dq[::-1], r)
            res = abs(pv / dv) if dv != 0 else mpmath.inf
            out.append((complex(r), float(res)))
        return out


def locate_singularities(g: BorelGerm, N: int = 40, pade_order: int | None = None,
                         dps: int = 80, differentiate: bool = True) -> PadeScan:
    """Singularity estimates from diagonal Padé approximants.

    By default the approximant is built for the derivative of the germ, which
    turns a logarithmic branch point into a simple pole (whose residue is the
    coefficient of the logarithm); poles of the germ itself accumulate along
    the cut and approach the branch point only like ``1/L**2``.

    Poles of the ``[L/L]`` approximant (``L = pade_order`` or the largest
    diagonal order the first ``N`` coefficients allow) are kept when their
    residue exceeds ``RESIDUE_FLOOR`` and a pole of the ``[L-1/L-1]``
    approximant lies within ``POLE_DRIFT``. They are returned by increasing
    modulus.
    """
    if len(g.coeffs) < N:
        raise ValueError("fewer stored coefficients than requested")
    coeffs = list(g.coeffs[:N])
    if differentiate:
        coeffs = [k * coeffs[k] for k in range(1, N)]
    L = pade_order if pade_order is not None else (len(coeffs) - 1) // 2
    if len(coeffs) < 2 * L + 1 or L < 2:
        raise ValueError("too few coefficients for the requested Padé order")
    cur = _pade_poles(coeffs, L, L, dps)
    prev = _pade_poles(coeffs, L - 1, L - 1, dps)
    kept = []
    for r, res in cur:
        if res < RESIDUE_FLOOR:
            continue
        if not prev or min(abs(r - q) for q, _ in prev) > POLE_DRIFT:
            continue
        kept.append(r)
    kept.sort(key=lambda z: (round(abs(z), 9), z.imag))
    nearest = kept[0] if kept else None
    return PadeScan(kept, nearest, bool(kept), L)


def nearest_on_ray(scan: PadeScan, direction: complex = 1.0 + 0j,
                   tol: float = 0.1) -> complex | None:
    """Nearest retained pole within angle ``tol`` of the ray ``direction``."""
    for z in scan.poles:
        if abs(z) > 0 and abs(cmath.phase(z / direction)) < tol:
            return z
    return None


# Variation -------------------------------------------------------------------

def _circle_values(a, b, c, xc: complex, r: float, start_phase: float,
                   f0: complex, df0: complex, loops: int, M: int) -> np.ndarray:
    """March clockwise around ``xc`` and record ``F`` after each of ``loops*M`` steps."""
    out = np.empty(loops * M, dtype=complex)
    x, f, df = xc + r * cmath.exp(1j * start_phase), f0, df0
    for k in range(1, loops * M + 1):
        nxt = xc + r * cmath.exp(1j * (start_phase - 2 * math.pi * k / M))
        f, df = taylor_step(a, b, c, x, f, df, nxt)
        x = nxt
        out[k - 1] = f
    return out


def variation(g: BorelGerm, omega: complex, r: float | None = None,
              M: int = VARIATION_POINTS) -> BorelGerm:
    """Re-centered difference of the continuations on either side of ``omega``.

    The germ is continued to ``omega - r`` (before the singularity on the
    ray), then twice clockwise around ``omega``. The first loop gives the
    branch reached by passing to the right of ``omega`` and the second that
    reached after one more clockwise turn; their difference on the circle
    is expanded by FFT into Taylor coefficients about ``omega``.
    """
    cf = g.closed_form
    if cf is None or cf.tag != "hyp2f1":
        raise UnsupportedGermError("variation needs a logarithmic (hypergeometric) germ")
    a, b, c, scale = cf.params
    omega = complex(omega)
    gaps = [abs(w - omega) for w in g.known_singularities if abs(w - omega) > 1e-12]
    gaps.append(abs(omega))
    if r is None:
        r = VARIATION_RADIUS_FRACTION * min(gaps)
    xc, rx = omega * scale, r * abs(scale)
    # x-plane: clockwise in xi is clockwise in x for scale > 0 and also for scale < 0
    direction = omega / abs(omega)
    x_start = (omega - r * direction) * scale
    start_phase = cmath.phase(x_start - xc)
    f0, df0 = hyp2f1_with_derivative(a, b, c, x_start)
    vals = _circle_values(a, b, c, xc, rx, start_phase, f0, df0, 2, M)
    first, second = vals[:M], vals[M:]
    diff = (first - second) * cf.factor
    # samples at phases start - 2 pi k / M, k = 1..M; rotate to standard order
    phases = start_phase - 2 * math.pi * np.arange(1, M + 1) / M
    order = np.argsort(np.mod(phases, 2 * math.pi))
    diff = diff[order]
    ph0 = np.mod(phases[order][0], 2 * math.pi)
    coef = np.fft.fft(diff) / M
    k = np.arange(M)
    # x - xc = rx e^{i(ph0 + 2 pi j / M)}; coefficients in xi - omega
    coef = coef * np.exp(-1j * k * ph0) / rx**k * scale**k
    tail = np.max(np.abs(coef[M // 2:] * (abs(r) ** k[M // 2:])))
    head = np.max(np.abs(coef[: M // 2] * (abs(r) ** k[: M // 2])))
    if tail > PRECISION_LOSS * head:
        warnings.warn("variation fit lost more than six digits", RuntimeWarning)
    return BorelGerm(list(coef[: M // 2]), Fraction(0), "ordinary", None, [])


def continued_value(g: BorelGerm, path) -> complex:
    """Continue a hypergeometric germ along ``path`` (xi-plane polyline from 0)."""
    cf = g.closed_form
    if cf is None or cf.tag != "hyp2f1":
        raise UnsupportedGermError("path continuation needs a hypergeometric germ")
    a, b, c, scale = cf.params
    xs = [complex(p) * scale for p in path]
    if xs[0] == 0:
        # x = 0 is a singular point of the ODE; start inside the disc instead
        xs[0] = xs[1] * min(1.0, 0.5 / abs(xs[1]))
    f0, df0 = hyp2f1_with_derivative(a, b, c, xs[0])
    return cf.factor * continue_along(a, b, c, xs, f0, df0)[0]


# Stokes constants ------------------------------------------------------------

@dataclass
class SingularityRecord:
    omega: complex
    kind: str
    stokes_constant: complex
    target: str


_TARGETS = {
    (ModelKind.AIRY, "p+"): ("p-", 4.0 / 3.0),
    (ModelKind.BESSEL, "w-"): ("w+", 2.0),
}


def stokes_constant(kind: ModelKind | str, source: str, omega: complex,
                    terms: int = 6) -> complex:
    """Constant ``c`` with ``Delta_omega phi_source = c * phi_target``.

    Airy and Bessel values come from :func:`variation` by least squares on
    the first ``terms`` Taylor coefficients. For Gamma the constant of every
    ``omega = 2 pi m`` with ``m = -1`` or ``m >= 1`` is 1.
    """
    kind = ModelKind(kind)
    omega = complex(omega)
    if kind is ModelKind.GAMMA:
        m = omega.real / (2 * math.pi)
        if abs(omega.imag) < 1e-12 and abs(m - round(m)) < 1e-12 and (
                round(m) == -1 or round(m) >= 1):
            return 1.0 + 0j
        raise NotAvailableError(f"no Stokes constant for the Gamma model at {omega}")
    key = (kind, source)
    if key not in _TARGETS or abs(omega - _TARGETS[key][1]) > 1e-12:
        raise NotAvailableError(f"no first singularity of {source} at {omega}")
    target = _TARGETS[key][0]
    var = variation(model_germ(kind, source, 2 * terms + 4), omega).taylor()[:terms]
    ref = model_germ(kind, target, terms).taylor()[:terms]
    return complex(np.vdot(ref, var) / np.vdot(ref, ref))


def singularity_record(kind: ModelKind | str, source: str) -> SingularityRecord:
    """First singularity on the Stokes ray with its constant and target."""
    kind = ModelKind(kind)
    if kind is ModelKind.GAMMA:
        omega = 2 * math.pi + 0j
        return SingularityRecord(omega, "log", stokes_constant(kind, source, omega), source)
    target, omega = _TARGETS[(kind, source)]
    return SingularityRecord(complex(omega), "log",
                             stokes_constant(kind, source, omega), target)
