"""Negative gradient flow of ``F_theta = Re(exp(-i*theta) S)`` in the flat metric.

The flow is ``dz/ds = -conj(exp(-i*theta) S'(z))``. Along it ``F_theta``
decreases at rate ``|S'|**2`` and ``G_theta = Im(exp(-i*theta) S)`` is
conserved. Stable manifolds (thimbles) are traced by integrating the reversed
field away from a critical point; unstable manifolds (dual thimbles) by
integrating the forward field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .actions import (
    RE_GUARD,
    Action,
    CriticalPoint,
    Domain,
    ModelKind,
    nearest_critical_points,
    unit_phase,
)
from .errors import FlowIntegrationError

EPS_SEED = 1e-6
DELTA_MATCH = 1e-6
CAPTURE_GRAD = 1e-5
F_CUTOFF = 30.0
TOL_INTEGRATE = 1e-12
TOL_G = 1e-9
MAX_STEP = 0.05
NODE_SPACING = 0.01
S_MAX = 200.0
#: Absolute floor (times 1+|F|) below which F differences are rounding noise.
RATE_FLOOR = 1e-14


class PathKind(str, Enum):
    GENERIC = "generic"
    STABLE = "stable_branch"
    UNSTABLE = "unstable_branch"
    CONNECTING = "connecting"


@dataclass
class FlowPath:
    """Oriented polyline sampled along a flow line.

    ``s`` holds flow-time stamps. For stable branches the stamps are negative
    (the branch is the time reversal of a forward flow line), so ``F`` always
    decreases with increasing ``s``. Points are stored in traversal order:
    outward from the launch point for thimble branches.
    """

    s: np.ndarray
    z: np.ndarray
    theta: float
    level_G: float
    kind: PathKind = PathKind.GENERIC
    wrap_count: int = 0
    action: Action | None = None
    tag: str = ""
    termination: str = ""
    captured: CriticalPoint | None = None
    dense: object = field(default=None, repr=False, compare=False)

    @property
    def points(self) -> list[tuple[float, complex]]:
        return list(zip(self.s.tolist(), self.z.tolist()))

    @property
    def F(self) -> np.ndarray:
        return np.real(unit_phase(self.theta) * self.action.value(self.z))

    @property
    def G(self) -> np.ndarray:
        return np.imag(unit_phase(self.theta) * self.action.value(self.z))

    def arclength(self) -> np.ndarray:
        """Cumulative polyline length from the first point."""
        return np.concatenate(([0.0], np.cumsum(np.abs(np.diff(self.z)))))

    def reversed(self) -> "FlowPath":
        return replace(self, s=self.s[::-1].copy(), z=self.z[::-1].copy())


@dataclass
class ThimblePair:
    """Stable half-branches A, B and unstable half-branches C, D of one point.

    The thimble is ``A - B`` and the dual thimble ``C - D``: each branch is
    oriented outward, A leaves along ``orient`` and C along ``1j*orient``, so
    the oriented intersection of thimble and dual at the critical point is +1.
    """

    critical: CriticalPoint
    theta: float
    orient: complex
    A: FlowPath | None = None
    B: FlowPath | None = None
    C: FlowPath | None = None
    D: FlowPath | None = None
    extra: dict = field(default_factory=dict)

    def thimble_polyline(self) -> np.ndarray:
        """Points of ``A - B`` from the far end of B to the end of A.

        The critical point itself is left out, so the segment joining the two
        launch points passes through it.
        """
        return np.concatenate((self.B.z[:0:-1], self.A.z[1:]))

    def dual_polyline(self) -> np.ndarray:
        """Points of ``C - D`` from the far end of D to the end of C."""
        return np.concatenate((self.D.z[:0:-1], self.C.z[1:]))


# Field and level functions ---------------------------------------------------

def flow_field(a: Action, theta: float, z):
    """Velocity ``-conj(exp(-i*theta) S'(z))`` of the negative gradient flow."""
    return -np.conj(unit_phase(theta) * a.grad(z))


def level_F(a: Action, theta: float, z):
    return np.real(unit_phase(theta) * a.value(z))


def level_G(a: Action, theta: float, z):
    return np.imag(unit_phase(theta) * a.value(z))


def local_frame(a: Action, theta: float, p: CriticalPoint) -> tuple[complex, complex]:
    """Unit stable and unstable eigendirections of the linearized flow at ``p``.

    With ``c = exp(-i*theta) S''(p)`` the linearization is
    ``d(eta)/ds = -conj(c*eta)``; ``eta`` along ``u`` decays iff ``c*u**2 > 0``.
    The stable direction is ``exp(-i*arg(c)/2)`` with principal ``arg``.
    """
    c = unit_phase(theta) * a.rotation * p.hessian
    stable = np.exp(-0.5j * np.angle(c))
    return complex(stable), complex(1j * stable)


def oriented_stable_direction(a: Action, theta: float, p: CriticalPoint,
                              reference: complex) -> complex:
    """Stable direction at ``p`` with the sign closest to ``reference``."""
    stable, _ = local_frame(a, theta, p)
    return stable if (np.conj(reference) * stable).real >= 0 else -stable


# Integration -----------------------------------------------------------------

def _capture_candidates(a: Action, z: complex, exclude: complex | None):
    out = []
    for q in nearest_critical_points(a, z):
        if exclude is not None and abs(q.position - exclude) < 1e-9:
            continue
        out.append(q)
    return out


def integrate_flow(
    a: Action,
    theta: float,
    z0: complex,
    s_max: float = S_MAX,
    tol: float = TOL_INTEGRATE,
    *,
    reverse: bool = False,
    f_cutoff: float = F_CUTOFF,
    f_ref: float = 0.0,
    exclude: complex | None = None,
    capture: bool = True,
    max_step: float = MAX_STEP,
    node_spacing: float = NODE_SPACING,
    kind: PathKind = PathKind.GENERIC,
) -> FlowPath:
    """Integrate the flow from ``z0`` with an adaptive embedded Runge-Kutta pair.

    Parameters
    ----------
    a, theta : Action, float
        Model and phase.
    z0 : complex
        Starting point.
    s_max : float
        Largest flow time.
    tol : float
        Relative and absolute tolerance of the DOP853 pair.
    reverse : bool
        Integrate the reversed field (used for stable branches). Time stamps
        are then stored as negative numbers.
    f_cutoff, f_ref : float
        Stop once ``|F - f_ref| > f_cutoff``.
    exclude : complex, optional
        Critical point (usually the launch point) excluded from capture.
    capture : bool
        Stop when ``|z - p| < DELTA_MATCH`` and ``|S'(z)| < CAPTURE_GRAD``.

    Returns
    -------
    FlowPath
        Step points plus interpolated nodes every ``node_spacing``; the
        ``termination`` field is one of ``escape``, ``capture``, ``s_max`` or
        ``guard``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rot = unit_phase(theta)
    sign = 1.0 if reverse else -1.0
    z0 = complex(z0)

    def rhs(_s, y):
        return sign * np.conj(rot * a.grad(y))

    def escape(_s, y):
        return abs(float(np.real(rot * a.value(y[0]))) - f_ref) - f_cutoff

    escape.terminal = True

    def near(_s, y):
        z = complex(y[0])
        cands = _capture_candidates(a, z, exclude)
        return min(abs(z - q.position) for q in cands) - DELTA_MATCH

    near.terminal = True
    near.direction = -1

    def guard(_s, y):
        return RE_GUARD - 1.0 - abs(float(np.real(y[0])))

    guard.terminal = True

    events, names = [escape], ["escape"]
    if capture:
        events.append(near)
        names.append("capture")
    if a.kind is not ModelKind.AIRY:
        events.append(guard)
        names.append("guard")

    sol = solve_ivp(rhs, (0.0, s_max), np.array([z0]), method="DOP853",
                    rtol=tol, atol=tol, max_step=max_step, events=events,
                    dense_output=True)
    if sol.status == -1:
        last = complex(sol.y[0, -1]) if sol.y.size else z0
        raise FlowIntegrationError(f"integration failed: {sol.message}", last)

    t_end = float(sol.t[-1])
    termination = "s_max"
    if sol.status == 1:
        for name, ev in zip(names, sol.t_events):
            if len(ev):
                termination = name
                break
    grid = np.arange(0.0, t_end, node_spacing)
    j = np.clip(np.searchsorted(sol.t, grid), 1, len(sol.t) - 1)
    gap = np.minimum(np.abs(grid - sol.t[j - 1]), np.abs(grid - sol.t[j]))
    ts = np.union1d(sol.t, grid[gap > 1e-6 * node_spacing])
    zs = sol.sol(ts)[0]
    zs[0] = z0
    zs[-1] = sol.y[0, -1]

    captured = None
    if termination == "capture":
        z_end = complex(zs[-1])
        cands = _capture_candidates(a, z_end, exclude)
        q = min(cands, key=lambda c: abs(z_end - c.position))
        if abs(a.grad(z_end)) < CAPTURE_GRAD and abs(z_end - q.position) < 2 * DELTA_MATCH:
            captured = q
        else:
            termination = "grazing"

    g0 = float(np.imag(rot * a.value(z0)))
    s_stamps = -ts if reverse else ts
    return FlowPath(s=s_stamps, z=np.asarray(zs, dtype=complex), theta=theta,
                    level_G=g0, kind=kind, action=a, termination=termination,
                    captured=captured, dense=_DenseOutput(sol.sol, reverse))


class _DenseOutput:
    """Integrator dense output addressed by the path's own time stamps."""

    def __init__(self, sol, reverse: bool):
        self._sol = sol
        self._sign = -1.0 if reverse else 1.0

    def __call__(self, s):
        return self._sol(self._sign * np.asarray(s, dtype=float))[0]


def trace_thimble(
    a: Action,
    theta: float,
    p: CriticalPoint,
    side: str,
    *,
    orient: complex | None = None,
    f_cutoff: float = F_CUTOFF,
    s_max: float = S_MAX,
    tol: float = TOL_INTEGRATE,
    capture: bool = True,
) -> tuple[FlowPath, FlowPath]:
    """Trace the two half-branches of the stable or unstable manifold of ``p``.

    Parameters
    ----------
    side : {"stable", "unstable"}
        Stable branches (A, B) run where ``F`` grows; unstable (C, D) where
        it falls. Escape is measured relative to ``F(p)``.
    orient : complex, optional
        Direction of the A branch. Defaults to the stable eigendirection;
        C leaves along ``1j*orient``.

    Returns
    -------
    (FlowPath, FlowPath)
        A and B (or C and D), each oriented outward from ``p``.
    """
    stable, _ = local_frame(a, theta, p)
    if orient is None:
        orient = stable
    orient = oriented_stable_direction(a, theta, p, orient)
    pos = p.position
    f_p = float(np.real(unit_phase(theta) * a.value(pos)))
    if side == "stable":
        d, tags, reverse, kind = orient, ("A", "B"), True, PathKind.STABLE
    elif side == "unstable":
        d, tags, reverse, kind = 1j * orient, ("C", "D"), False, PathKind.UNSTABLE
    else:
        raise ValueError("side must be 'stable' or 'unstable'")
    out = []
    for sgn, tag in zip((1.0, -1.0), tags):
        z0 = pos + sgn * EPS_SEED * d
        path = integrate_flow(a, theta, z0, s_max, tol, reverse=reverse,
                              f_cutoff=f_cutoff, f_ref=f_p, exclude=pos,
                              capture=capture, kind=kind)
        # prepend the critical point itself so branches start at p
        path.s = np.concatenate(([path.s[0]], path.s))
        path.z = np.concatenate(([pos], path.z))
        path.level_G = float(np.imag(unit_phase(theta) * a.value(pos)))
        path.tag = tag
        if path.captured is not None:
            path.kind = PathKind.CONNECTING
        out.append(path)
    return out[0], out[1]


def trace_pair(a: Action, theta: float, p: CriticalPoint, *,
               orient: complex | None = None, f_cutoff: float = F_CUTOFF,
               s_max: float = S_MAX) -> ThimblePair:
    """Trace all four half-branches of ``p`` at phase ``theta``."""
    stable, _ = local_frame(a, theta, p)
    orient = oriented_stable_direction(a, theta, p, stable if orient is None else orient)
    A, B = trace_thimble(a, theta, p, "stable", orient=orient, f_cutoff=f_cutoff, s_max=s_max)
    C, D = trace_thimble(a, theta, p, "unstable", orient=orient, f_cutoff=f_cutoff, s_max=s_max)
    return ThimblePair(critical=p, theta=theta, orient=orient, A=A, B=B, C=C, D=D)


# Cylinder bookkeeping --------------------------------------------------------

def seam_crossings(path: FlowPath) -> list[tuple[float, float, int]]:
    """Crossings of the seams ``y = pi (mod 2*pi)`` by an unfolded path.

    Returns a list of ``(s, x, direction)`` with ``direction = +1`` when ``y``
    increases through the seam. Positions are linearly interpolated.
    """
    y = path.z.imag
    x = path.z.real
    k = np.floor((y + math.pi) / (2 * math.pi))  # sheet index of each point
    out = []
    for i in np.nonzero(np.diff(k))[0]:
        step = int(k[i + 1] - k[i])
        direction = 1 if step > 0 else -1
        for j in range(abs(step)):
            seam = (2 * (k[i] + (j + 1 if step > 0 else -j)) - 1) * math.pi
            t = (seam - y[i]) / (y[i + 1] - y[i])
            out.append((float(path.s[i] + t * (path.s[i + 1] - path.s[i])),
                        float(x[i] + t * (x[i + 1] - x[i])), direction))
    return out


def reduce_cylinder(path: FlowPath) -> FlowPath:
    """Fold ``Im z`` into (-pi, pi] and count net seam crossings."""
    if path.action is not None and path.action.domain is not Domain.CYLINDER:
        raise ValueError("reduce_cylinder needs a cylinder-domain action")
    y = path.z.imag
    k = np.ceil((y - math.pi) / (2 * math.pi))
    folded = path.z - 2j * math.pi * k
    wraps = int(k[-1] - k[0])
    return replace(path, z=folded, wrap_count=wraps)


# Diagnostics -----------------------------------------------------------------

def hermite_interpolant(path: FlowPath) -> CubicHermiteSpline:
    """Cubic Hermite interpolant of ``z(s)`` using the flow field at nodes."""
    s = path.s
    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    # keep the last of repeated stamps (drops a prepended critical point)
    keep = np.concatenate((np.diff(s_sorted) > 0, [True]))
    s_sorted = s_sorted[keep]
    zs = path.z[order][keep]
    dz = flow_field(path.action, path.theta, zs)
    return CubicHermiteSpline(s_sorted, zs, dz)


def max_speed_time(path: FlowPath) -> float:
    """Flow time at which ``|S'|`` peaks along the path.

    Solves ``d|S'|^2/ds = 2 Re(conj(S') S'' dz/ds) = 0`` by bracketing around
    the fastest node.
    """
    a, theta = path.action, path.theta
    spline = hermite_interpolant(path)
    s_nodes = spline.x
    speed = np.abs(a.grad(spline(s_nodes)))
    i = int(np.argmax(speed))
    lo = s_nodes[max(i - 1, 0)]
    hi = s_nodes[min(i + 1, len(s_nodes) - 1)]

    def dspeed(s):
        z = complex(spline(s))
        return float(np.real(np.conj(a.grad(z)) * a.hess(z) * flow_field(a, theta, z)))

    if dspeed(lo) * dspeed(hi) > 0:
        return float(s_nodes[i])
    return float(brentq(dspeed, lo, hi, xtol=1e-14, rtol=1e-14))


_THIMBLE_KINDS = (PathKind.STABLE, PathKind.UNSTABLE, PathKind.CONNECTING)


def flow_invariants(path: FlowPath) -> dict:
    """Measure G-drift and the rate law ``dF/ds = -|S'|^2`` on a path.

    The rate law is checked in integrated form on each interval between
    consecutive nodes: ``F(z_{i+1}) - F(z_i)`` against
    ``-int |S'(z(s))|^2 ds`` evaluated by 5-point Gauss-Legendre on the
    integrator's dense output (cubic Hermite interpolation if absent). Intervals whose change is at the level of double
    precision rounding of ``F`` are discounted: the mismatch is measured only
    above the absolute floor ``RATE_FLOOR * (1 + |F|)``.

    Returns
    -------
    dict
        ``g_drift`` (max over points of ``|G - level_G| / (1 + arclength)``),
        ``rate_rel`` (max relative rate-law mismatch) and ``monotone``.
    """
    a, theta = path.action, path.theta
    G = path.G
    arc = path.arclength()
    g_drift = float(np.max(np.abs(G - path.level_G) / (1.0 + arc)))

    spline = path.dense if path.dense is not None else hermite_interpolant(path)
    s = np.unique(path.s[1:] if path.kind in _THIMBLE_KINDS else path.s)
    zs = spline(s)
    Fs = np.real(unit_phase(theta) * a.value(zs))
    xg, wg = np.polynomial.legendre.leggauss(5)
    worst = 0.0
    for i in range(len(s) - 1):
        h = s[i + 1] - s[i]
        if h <= 0:
            continue
        nodes = s[i] + 0.5 * h * (xg + 1.0)
        rate = np.abs(a.grad(spline(nodes))) ** 2
        expected = -0.5 * h * float(np.dot(wg, rate))
        got = Fs[i + 1] - Fs[i]
        floor = RATE_FLOOR * (1.0 + abs(Fs[i]))
        err = max(abs(got - expected) - floor, 0.0) / max(abs(expected), 1e-300)
        worst = max(worst, err)
    d = np.diff(Fs)
    monotone = bool(np.all(d <= 1e-14 * (1.0 + np.abs(Fs[:-1]))))
    return {"g_drift": g_drift, "rate_rel": worst, "monotone": monotone}
