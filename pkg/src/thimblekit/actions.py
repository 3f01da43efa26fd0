"""Holomorphic actions of the three exponential-integral models.

Each model is a closed-form function with exactly known critical data:

========  ======================  ==============  =====================
model     action                  domain          critical points
========  ======================  ==============  =====================
airy      z**3/3 - z              plane           z = +1, -1
bessel    sinh(w)                 cylinder 2*pi   w = +i*pi/2, -i*pi/2
gamma     exp(z) - z              plane           z = 2*pi*i*n
========  ======================  ==============  =====================

An :class:`Action` may carry a unit rotation ``rotation = exp(-i*theta_star)``
so that downstream code works with ``A(z) = rotation * S(z)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ActionRangeError

#: Guard on |Re z| for models containing exponentials.
RE_GUARD = 50.0
#: Tolerance below which two phases are considered equal.
PHASE_DEDUP_TOL = 1e-12
#: Threshold on |Im(e^{-i theta}(S(p)-S(q)))| defining a regular phase.
REGULAR_PHASE_TOL = 1e-10
#: Largest admissible critical-point window.
MAX_WINDOW_SIZE = 64


class ModelKind(str, Enum):
    AIRY = "airy"
    BESSEL = "bessel"
    GAMMA = "gamma"


class Domain(str, Enum):
    PLANE = "plane"
    CYLINDER = "cylinder_2pi"


def unit_phase(theta: float) -> complex:
    """Return ``exp(-i*theta)``, exact when theta is a multiple of pi/2."""
    q = theta / (0.5 * math.pi)
    k = round(q)
    if abs(q - k) < 1e-15:
        return (1.0 + 0j, -1j, -1.0 + 0j, 1j)[k % 4]
    return cmath.exp(-1j * theta)


@dataclass(frozen=True)
class IndexWindow:
    """Inclusive range of Gamma critical-point indices."""

    n_min: int = -2
    n_max: int = 2

    def __post_init__(self) -> None:
        if self.n_min > self.n_max:
            raise ValueError(f"empty window [{self.n_min}, {self.n_max}]")
        if self.n_max - self.n_min + 1 > MAX_WINDOW_SIZE:
            raise ValueError(f"window larger than {MAX_WINDOW_SIZE} points")

    def __iter__(self):
        return iter(range(self.n_min, self.n_max + 1))

    def __len__(self) -> int:
        return self.n_max - self.n_min + 1

    def __contains__(self, n: object) -> bool:
        return isinstance(n, (int, np.integer)) and self.n_min <= n <= self.n_max


@dataclass(frozen=True)
class CriticalPoint:
    """Nondegenerate critical point with its unrotated value and hessian."""

    label: str
    position: complex
    value: complex
    hessian: complex
    index: int | None = None


@dataclass(frozen=True)
class Action:
    """One of the hard-coded model actions, optionally rotated.

    Parameters
    ----------
    kind : ModelKind
        Which model.
    rotation : complex
        Unit phase multiplying ``S``; ``unit_phase(theta_star)`` produces the
        rotated action used when a Stokes ray is moved onto the positive axis.
    """

    kind: ModelKind
    rotation: complex = 1.0 + 0j

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if abs(abs(self.rotation) - 1.0) > 1e-14:
            raise ValueError("rotation must be a unit complex number")

    @property
    def domain(self) -> Domain:
        return Domain.CYLINDER if self.kind is ModelKind.BESSEL else Domain.PLANE

    def rotated(self, theta_star: float) -> "Action":
        """Return the same model with ``rotation = exp(-i*theta_star)``."""
        return Action(self.kind, unit_phase(theta_star))

    # Raw evaluators work on scalars and numpy arrays alike.
    def _guard(self, z) -> None:
        if self.kind is ModelKind.AIRY:
            return
        if np.any(np.abs(np.real(z)) > RE_GUARD):
            raise ActionRangeError(
                f"|Re z| exceeds {RE_GUARD} for the {self.kind.value} model"
            )

    def value(self, z):
        """Return ``rotation * S(z)``."""
        self._guard(z)
        if self.kind is ModelKind.AIRY:
            s = z**3 / 3.0 - z
        elif self.kind is ModelKind.BESSEL:
            s = np.sinh(z)
        else:
            s = np.exp(z) - z
        return self.rotation * s

    def grad(self, z):
        """Return ``rotation * S'(z)``."""
        self._guard(z)
        if self.kind is ModelKind.AIRY:
            d = z * z - 1.0
        elif self.kind is ModelKind.BESSEL:
            d = np.cosh(z)
        else:
            d = np.exp(z) - 1.0
        return self.rotation * d

    def hess(self, z):
        """Return ``rotation * S''(z)``."""
        self._guard(z)
        if self.kind is ModelKind.AIRY:
            h = 2.0 * z
        elif self.kind is ModelKind.BESSEL:
            h = np.sinh(z)
        else:
            h = np.exp(z)
        return self.rotation * h


def eval_action(a: Action, z):
    """Evaluate the (possibly rotated) action at ``z``."""
    return a.value(z)


def eval_grad(a: Action, z):
    """Evaluate the derivative of the (possibly rotated) action."""
    return a.grad(z)


def eval_hess(a: Action, z):
    """Evaluate the second derivative of the (possibly rotated) action."""
    return a.hess(z)


def _raw_critical(kind: ModelKind, window: IndexWindow) -> list[CriticalPoint]:
    if kind is ModelKind.AIRY:
        return [
            CriticalPoint("p+", 1.0 + 0j, -2.0 / 3.0 + 0j, 2.0 + 0j),
            CriticalPoint("p-", -1.0 + 0j, 2.0 / 3.0 + 0j, -2.0 + 0j),
        ]
    if kind is ModelKind.BESSEL:
        half = 0.5 * math.pi
        return [
            CriticalPoint("w+", complex(0.0, half), 1j, 1j),
            CriticalPoint("w-", complex(0.0, -half), -1j, -1j),
        ]
    two_pi = 2.0 * math.pi
    return [
        CriticalPoint(f"p_{n}", complex(0.0, two_pi * n),
                      complex(1.0, -two_pi * n), 1.0 + 0j, index=n)
        for n in window
    ]


def critical_points(a: Action, window: IndexWindow | None = None) -> list[CriticalPoint]:
    """Return the critical points in ``window``.

    Sorted by ``Im(rotation*S)`` and then ``Re(rotation*S)``. The window only
    matters for the Gamma model.
    """
    window = window or IndexWindow()
    pts = _raw_critical(a.kind, window)

    def key(p: CriticalPoint):
        v = a.rotation * p.value
        return (v.imag, v.real)

    return sorted(pts, key=key)


def critical_point(a: Action, label: str) -> CriticalPoint:
    """Look up a critical point by label (Gamma labels are ``p_<n>``)."""
    if a.kind is ModelKind.GAMMA:
        if not label.startswith("p_"):
            raise KeyError(label)
        n = int(label[2:])
        return _raw_critical(a.kind, IndexWindow(n, n))[0]
    for p in _raw_critical(a.kind, IndexWindow()):
        if p.label == label:
            return p
    raise KeyError(label)


def nearest_critical_points(a: Action, z: complex) -> list[CriticalPoint]:
    """Critical points near ``z`` including the relevant periodic copies.

    For Bessel the two saddles are returned shifted to the sheet of the
    cylinder cover closest to ``z``; for Gamma the three lattice points
    nearest ``Im z`` are returned.
    """
    two_pi = 2.0 * math.pi
    if a.kind is ModelKind.AIRY:
        return _raw_critical(a.kind, IndexWindow())
    if a.kind is ModelKind.BESSEL:
        k = round(z.imag / two_pi)
        out = []
        for dk in (-1, 0, 1):
            shift = complex(0.0, two_pi * (k + dk))
            for p in _raw_critical(a.kind, IndexWindow()):
                out.append(CriticalPoint(p.label, p.position + shift, p.value,
                                         p.hessian, index=k + dk))
        return out
    n = round(z.imag / two_pi)
    return _raw_critical(a.kind, IndexWindow(n - 1, n + 1))


def _phases_from_values(values: list[complex]) -> list[float]:
    two_pi = 2.0 * math.pi
    phases: list[float] = []
    for i, u in enumerate(values):
        for v in values[i + 1:]:
            d = u - v
            if d == 0:
                continue
            base = math.atan2(d.imag, d.real) % math.pi
            for ph in (base, base + math.pi):
                ph = ph % two_pi
                if all(min(abs(ph - q), two_pi - abs(ph - q)) > PHASE_DEDUP_TOL
                       for q in phases):
                    phases.append(ph)
    return sorted(phases)


def stokes_phases(a: Action, window: IndexWindow | None = None) -> list[float]:
    """Phases in [0, 2*pi) at which two critical values align.

    A phase ``theta`` qualifies when ``Im(exp(-i*theta)*(S(p)-S(q))) = 0`` for
    some distinct pair. Values are those of the unrotated action.
    """
    pts = critical_points(Action(a.kind), window)
    return _phases_from_values([p.value for p in pts])


def is_regular_phase(a: Action, theta: float, window: IndexWindow | None = None) -> bool:
    """True iff no two critical values in ``window`` align at phase ``theta``."""
    pts = critical_points(Action(a.kind), window)
    rot = cmath.exp(-1j * theta)
    for i, p in enumerate(pts):
        for q in pts[i + 1:]:
            if abs((rot * (p.value - q.value)).imag) <= REGULAR_PHASE_TOL:
                return False
    return True


def stokes_phase(kind: ModelKind | str) -> float:
    """The principal Stokes phase used for each model's wall."""
    kind = ModelKind(kind)
    return 0.0 if kind is ModelKind.AIRY else 0.5 * math.pi


def thimble_orientation(kind: ModelKind | str, label: str) -> complex:
    """Unit tangent orienting the thimble of ``label`` at the model's wall.

    This is the direction ``u`` of the saddle substitution ``z = p + u*t``
    (``t`` increasing) for the action rotated by the Stokes phase. It fixes
    the Gaussian constant ``C = u*sqrt(2*pi/|A''(p)|)``: -sqrt(pi) and
    -i*sqrt(pi) for Airy, sqrt(2*pi) and i*sqrt(2*pi) for Bessel,
    exp(i*pi/4)*sqrt(2*pi) for every Gamma saddle.
    """
    kind = ModelKind(kind)
    if kind is ModelKind.AIRY:
        return {"p+": -1.0 + 0j, "p-": -1j}[label]
    if kind is ModelKind.BESSEL:
        return {"w+": 1.0 + 0j, "w-": 1j}[label]
    if not label.startswith("p_"):
        raise KeyError(label)
    return cmath.exp(0.25j * math.pi)
