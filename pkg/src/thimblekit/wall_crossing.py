"""Connecting trajectories, jump matrices and intersection bookkeeping.

At a Stokes phase the unstable branch of one saddle can run straight into
another saddle. Counting these connections gives the elementary jump of the
thimble basis across the wall. Away from walls, thimbles and dual thimbles
form dual bases under the signed intersection count, which gives the
coefficients of any admissible cycle in the thimble basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .actions import (
    Action,
    CriticalPoint,
    Domain,
    IndexWindow,
    ModelKind,
    critical_points,
    stokes_phase,
    thimble_orientation,
    unit_phase,
)
from .errors import (
    AmbiguousIntersectionError,
    FlowIntegrationError,
    InconsistentMatrixError,
    InvalidCycleError,
    NotAvailableError,
)
from .exact import GaussianRational
from .flow import (
    FlowPath,
    PathKind,
    ThimblePair,
    level_F,
    trace_pair,
    trace_thimble,
)
from .special import lambert_w0

#: Entry contributed to the S_minus matrix by one connecting trajectory.
#: Complex dimension one fixes only the number of trajectories; the sign per
#: model follows the displayed jump matrices (Airy +1, Bessel -1 each of two,
#: Gamma -1 per neighbouring link).
CONNECTION_SIGN = {ModelKind.AIRY: 1, ModelKind.BESSEL: -1, ModelKind.GAMMA: -1}

COLLINEAR_TOL = 1e-9
MIN_CROSSING_ANGLE = 1e-3


@dataclass
class Connection:
    """A direct flow line from ``source`` (higher F) to ``target``."""

    source: CriticalPoint
    target: CriticalPoint
    path: FlowPath
    sign: int
    branch: str


@dataclass
class StokesMatrix:
    """Unitriangular jump matrix on an ordered saddle basis.

    ``direction = "plus"`` maps the basis on the ``>`` side to the ``<`` side
    (``J< = J> S_plus``), ``"minus"`` the reverse. Entries are exact.
    """

    basis: list[str]
    entries: list[list]
    side: str
    direction: str
    raw: np.ndarray | None = None
    residual: float | None = None
    rounded: bool = True

    def __post_init__(self) -> None:
        n = len(self.basis)
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise InconsistentMatrixError("entries do not match the basis size")

    def as_array(self) -> np.ndarray:
        return np.array([[complex(x) for x in row] for row in self.entries])

    def is_unitriangular(self) -> bool:
        n = len(self.basis)
        return all(
            self.entries[i][j] == (1 if i == j else 0)
            for i in range(n) for j in range(n) if i >= j
        )

    def __matmul__(self, other: "StokesMatrix") -> list[list]:
        return mat_mul(self.entries, other.entries)


# Exact matrix helpers --------------------------------------------------------

def identity(n: int) -> list[list]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def mat_mul(x: list[list], y: list[list]) -> list[list]:
    n, m, k = len(x), len(y[0]), len(y)
    return [[sum((x[i][t] * y[t][j] for t in range(k)), Fraction(0))
             for j in range(m)] for i in range(n)]


def unitriangular_inverse(m: list[list]) -> list[list]:
    """Exact inverse of an upper unitriangular matrix by back substitution."""
    n = len(m)
    for i in range(n):
        if m[i][i] != 1 or any(m[i][j] != 0 for j in range(i)):
            raise InconsistentMatrixError("matrix is not upper unitriangular")
    inv = identity(n)
    for j in range(n):
        for i in range(j - 1, -1, -1):
            inv[i][j] = -sum((m[i][t] * inv[t][j] for t in range(i + 1, j + 1)),
                             Fraction(0))
    return inv


# Basis ordering --------------------------------------------------------------

def wall_basis(a: Action, theta_star: float, window: IndexWindow | None = None
               ) -> list[CriticalPoint]:
    """Critical points ordered by decreasing ``F`` at the Stokes phase."""
    pts = critical_points(Action(a.kind), window)
    rot = unit_phase(theta_star)
    return sorted(pts, key=lambda p: -(rot * p.value).real)


# Connections -----------------------------------------------------------------

def _same_point(a: Action, q: CriticalPoint, p: CriticalPoint) -> bool:
    if a.domain is Domain.CYLINDER:
        d = (q.position - p.position) / (2j * math.pi)
        return abs(d - round(d.real)) < 1e-9
    return abs(q.position - p.position) < 1e-9


def find_connections(a: Action, theta_star: float,
                     window: IndexWindow | None = None) -> list[Connection]:
    """Direct connecting trajectories at a Stokes phase.

    Both unstable half-branches of every saddle are integrated; a branch that
    is captured by another saddle of the window whose value aligns with the
    source along the wall yields one connection.

    Returns
    -------
    list of Connection
        Ordered by source, target and launch branch.
    """
    a = Action(a.kind)
    basis = wall_basis(a, theta_star, window)
    order = {p.label: i for i, p in enumerate(basis)}
    rot = unit_phase(theta_star)
    sign = CONNECTION_SIGN[a.kind]
    out: list[Connection] = []
    for p in basis:
        try:
            C, D = trace_thimble(a, theta_star, p, "unstable")
        except FlowIntegrationError:
            continue
        for branch in (C, D):
            q = branch.captured
            if q is None:
                continue
            target = next((t for t in basis if _same_point(a, q, t)), None)
            if target is None:
                continue
            diff = rot * (p.value - target.value)
            if abs(diff.imag) > 1e-10 or diff.real <= 0:
                continue
            out.append(Connection(p, target, branch, sign, branch.tag))
    out.sort(key=lambda c: (order[c.source.label], order[c.target.label], c.branch))
    return out


# Closed-form connecting curves -----------------------------------------------

def gamma_arc_x(y) -> np.ndarray:
    """``x = -1 - W0(-cos(y)/e)``: the connecting arc between p_0 and p_1."""
    return -1.0 - lambert_w0(-np.cos(y) * math.exp(-1.0))


def exact_connection_oracle(a: Action, theta_star: float, pair: tuple[str, str],
                            s_grid, *, branch: int = 0, s0: float = 0.0) -> FlowPath:
    """Closed-form connecting trajectory sampled at flow times ``s_grid``.

    Parameters
    ----------
    pair : (str, str)
        Source and target labels: ("p-", "p+") for Airy, ("w+", "w-") for
        Bessel, ("p_n", "p_{n+1}") for Gamma.
    s_grid : array_like
        Flow times; the trajectory is centred so that its fastest point is at
        ``s0``.
    branch : int
        Bessel only: 0 for the arc inside the strip, 1 for the arc through
        the seam.

    Notes
    -----
    Airy: ``z = tanh(s - s0)``. Bessel: ``y = 2 arctan(exp(-(s - s0))) - pi/2``
    and ``y = 2 arctan(exp(s - s0)) + pi/2`` on ``x = 0``. Gamma: on the arc
    ``x = -1 - W0(-cos(y)/e)`` the flow reduces to ``dy/ds = -x(y)``, which is
    integrated from ``y = pi`` (fastest point) in both directions.
    """
    kind = Action(a.kind).kind
    s = np.asarray(s_grid, dtype=float)
    t = s - s0
    if kind is ModelKind.AIRY and pair == ("p-", "p+") and theta_star % math.pi == 0:
        z = np.tanh(t) + 0j
    elif kind is ModelKind.BESSEL and pair == ("w+", "w-"):
        if branch == 0:
            y = 2.0 * np.arctan(np.exp(-t)) - 0.5 * math.pi
        else:
            y = 2.0 * np.arctan(np.exp(t)) + 0.5 * math.pi
        z = 1j * y
    elif kind is ModelKind.GAMMA:
        n = int(pair[0][2:])
        if pair[1] != f"p_{n + 1}":
            raise NotAvailableError("only neighbouring Gamma connections exist")
        y = _gamma_arc_y(t)
        z = gamma_arc_x(y) + 1j * (y + 2 * math.pi * n)
    else:
        raise NotAvailableError(f"no closed form for {kind.value} {pair}")
    g = float(np.imag(unit_phase(theta_star) * Action(kind).value(z[0])))
    return FlowPath(s=s, z=z, theta=theta_star, level_G=g,
                    kind=PathKind.CONNECTING, action=Action(kind))


def _gamma_arc_y(t: np.ndarray) -> np.ndarray:
    """Solve ``dy/ds = -x(y)`` with ``y(0) = pi`` at the requested times."""
    def rhs(_s, y):
        return -gamma_arc_x(np.clip(y, 0.0, 2 * math.pi))

    out = np.empty_like(t)
    for mask, span in ((t >= 0, 1.0), (t < 0, -1.0)):
        if not np.any(mask):
            continue
        tt = np.abs(t[mask])
        order = np.argsort(tt)
        sol = solve_ivp(lambda s, y: span * rhs(s, y), (0.0, float(tt.max()) + 1e-12),
                        [math.pi], method="DOP853", rtol=1e-13, atol=1e-14,
                        t_eval=tt[order])
        vals = np.empty_like(tt)
        vals[order] = sol.y[0]
        out[mask] = vals
    return out


def curve_distance(path: FlowPath, oracle_x) -> float:
    """Sup over path points of ``|x - oracle_x(y)|`` for curves ``x = f(y)``."""
    return float(np.max(np.abs(path.z.real - oracle_x(path.z.imag))))


# Jump matrices ---------------------------------------------------------------

def jump_matrix_geometric(a: Action, theta_star: float | None = None,
                          window: IndexWindow | None = None,
                          connections: list[Connection] | None = None
                          ) -> dict[str, StokesMatrix]:
    """Jump matrices assembled from counted connections.

    Each connection from ``p`` to ``q`` contributes its sign to the entry
    ``S_minus[p, q]`` (``J> = J< S_minus``). ``S_plus`` is the composite
    obtained by multiplying the elementary factors ``1 - sign*E[p, q]`` of
    the individual links (equal to the exact inverse of ``S_minus``).

    Returns
    -------
    dict
        ``{"minus": StokesMatrix, "plus": StokesMatrix}``.
    """
    a = Action(a.kind)
    if theta_star is None:
        theta_star = stokes_phase(a.kind)
    if connections is None:
        connections = find_connections(a, theta_star, window)
    basis = wall_basis(a, theta_star, window)
    labels = [p.label for p in basis]
    idx = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    minus = identity(n)
    for c in connections:
        minus[idx[c.source.label]][idx[c.target.label]] += c.sign
    plus = identity(n)
    links = sorted({(idx[c.source.label], idx[c.target.label]) for c in connections})
    for i, j in links:
        factor = identity(n)
        factor[i][j] = -minus[i][j]
        plus = mat_mul(plus, factor)
    m = StokesMatrix(labels, minus, "geometric", "minus")
    p = StokesMatrix(labels, plus, "geometric", "plus")
    if not (m.is_unitriangular() and p.is_unitriangular()):
        raise InconsistentMatrixError("geometric jump is not unitriangular")
    if mat_mul(plus, minus) != identity(n):
        raise InconsistentMatrixError("composite plus matrix is not the inverse of minus")
    return {"minus": m, "plus": p}


# Intersections ---------------------------------------------------------------

def _segments(poly: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    poly = np.asarray(poly, dtype=complex)
    keep = np.concatenate(([True], np.abs(np.diff(poly)) > 0))
    poly = poly[keep]
    return poly[:-1], poly[1:]


def _cross(u, v):
    return u.real * v.imag - u.imag * v.real


def signed_crossings(P: np.ndarray, Q: np.ndarray, period: complex | None = None
                     ) -> int:
    """Signed count of transverse crossings of oriented polylines P and Q.

    A crossing counts +1 when Q passes from the right of P to its left
    (``cross(dP, dQ) > 0``). Orientation values within ``COLLINEAR_TOL`` of
    zero are treated as positive, a symbolic perturbation that counts a
    crossing through a shared vertex exactly once.

    Parameters
    ----------
    period : complex, optional
        Translation of a cylinder; Q is then tested in all translates that
        can meet P.
    """
    p0, p1 = _segments(P)
    q0, q1 = _segments(Q)
    shifts = [0j]
    if period is not None:
        span = abs(period)
        pmin, pmax = min(p0.imag.min(), p1.imag.min()), max(p0.imag.max(), p1.imag.max())
        qmin, qmax = min(q0.imag.min(), q1.imag.min()), max(q0.imag.max(), q1.imag.max())
        k0 = math.floor((pmin - qmax) / span) - 1
        k1 = math.ceil((pmax - qmin) / span) + 1
        shifts = [k * period for k in range(k0, k1 + 1)]
    total = 0
    dp = p1 - p0
    lp = np.abs(dp)
    pxmin, pxmax = np.minimum(p0.real, p1.real), np.maximum(p0.real, p1.real)
    pymin, pymax = np.minimum(p0.imag, p1.imag), np.maximum(p0.imag, p1.imag)
    for shift in shifts:
        a0, a1 = q0 + shift, q1 + shift
        dq = a1 - a0
        lq = np.abs(dq)
        qxmin, qxmax = np.minimum(a0.real, a1.real), np.maximum(a0.real, a1.real)
        qymin, qymax = np.minimum(a0.imag, a1.imag), np.maximum(a0.imag, a1.imag)
        chunk = 512
        for start in range(0, len(p0), chunk):
            sl = slice(start, start + chunk)
            box = ((pxmin[sl, None] <= qxmax[None, :]) & (qxmin[None, :] <= pxmax[sl, None])
                   & (pymin[sl, None] <= qymax[None, :]) & (qymin[None, :] <= pymax[sl, None]))
            ii, jj = np.nonzero(box)
            if ii.size == 0:
                continue
            ii = ii + start
            P0, D_P, LP = p0[ii], dp[ii], lp[ii]
            Q0, D_Q, LQ = a0[jj], dq[jj], lq[jj]
            o1 = _cross(D_P, Q0 - P0) / (LP * LQ)
            o2 = _cross(D_P, Q0 + D_Q - P0) / (LP * LQ)
            o3 = _cross(D_Q, P0 - Q0) / (LP * LQ)
            o4 = _cross(D_Q, P0 + D_P - Q0) / (LP * LQ)
            s1, s2, s3, s4 = (np.where(np.abs(o) < COLLINEAR_TOL, 1.0, np.sign(o))
                              for o in (o1, o2, o3, o4))
            hit = (s1 != s2) & (s3 != s4)
            if not np.any(hit):
                continue
            sin_angle = _cross(D_P[hit], D_Q[hit]) / (LP[hit] * LQ[hit])
            if np.any(np.abs(sin_angle) < MIN_CROSSING_ANGLE):
                raise AmbiguousIntersectionError(
                    "near-tangential crossing; trace the branches more finely")
            total += int(np.sum(np.sign(sin_angle)))
    return total


def _period(a: Action) -> complex | None:
    return 2j * math.pi if a.domain is Domain.CYLINDER else None


def intersection_pairing(J: ThimblePair, K: ThimblePair, a: Action | None = None) -> int:
    """Signed intersection number of the thimble of J with the dual of K."""
    a = a or J.A.action
    return signed_crossings(J.thimble_polyline(), K.dual_polyline(), _period(a))


def oriented_pairs(a: Action, theta: float, window: IndexWindow | None = None,
                   reference_phase: float | None = None, **kwargs) -> list[ThimblePair]:
    """Trace thimble/dual pairs at ``theta`` with the model's orientation.

    The orientation of each thimble is the one fixed at the model's wall
    (see :func:`thimblekit.actions.thimble_orientation`).
    """
    a = Action(a.kind)
    pts = wall_basis(a, stokes_phase(a.kind) if reference_phase is None
                     else reference_phase, window)
    return [trace_pair(a, theta, p, orient=thimble_orientation(a.kind, p.label), **kwargs)
            for p in pts]


def pairing_matrix(a: Action, theta: float, window: IndexWindow | None = None
                   ) -> tuple[list[str], np.ndarray]:
    """Matrix of ``<J_p, K_q>`` over the window at a regular phase."""
    pairs = oriented_pairs(a, theta, window)
    n = len(pairs)
    m = np.zeros((n, n), dtype=int)
    for i, J in enumerate(pairs):
        for j, K in enumerate(pairs):
            m[i, j] = intersection_pairing(J, K, a)
    return [p.critical.label for p in pairs], m


def decompose_cycle(a: Action, theta: float, gamma: np.ndarray,
                    window: IndexWindow | None = None, *,
                    end_margin: float = 5.0) -> dict[str, int]:
    """Coefficients of an admissible cycle in the thimble basis at ``theta``.

    ``n_p`` is the signed number of crossings of ``gamma`` with the dual
    thimble ``K_p``.

    Raises
    ------
    InvalidCycleError
        If either end of ``gamma`` does not lie at least ``end_margin`` above
        the largest critical value of ``F`` in the window.
    """
    a = Action(a.kind)
    gamma = np.asarray(gamma, dtype=complex)
    pairs = oriented_pairs(a, theta, window)
    f_top = max(level_F(a, theta, T.critical.position) for T in pairs)
    for end in (gamma[0], gamma[-1]):
        if level_F(a, theta, end) < f_top + end_margin:
            raise InvalidCycleError("cycle ends are not in F -> +infinity regions")
    return {T.critical.label: signed_crossings(gamma, T.dual_polyline(), _period(a))
            for T in pairs}


def jump_matrix_from_intersections(a: Action, theta_star: float | None = None,
                                   window: IndexWindow | None = None,
                                   delta: float = 0.1) -> StokesMatrix:
    """``S_minus`` read off from intersections across the wall.

    Column ``p`` holds ``<J_p at theta*+delta, K_q at theta*-delta>``, the
    coefficients of the thimble on the ``>`` side in the ``<`` basis.
    """
    a = Action(a.kind)
    if theta_star is None:
        theta_star = stokes_phase(a.kind)
    after = oriented_pairs(a, theta_star + delta, window)
    before = oriented_pairs(a, theta_star - delta, window)
    n = len(after)
    entries = [[Fraction(0)] * n for _ in range(n)]
    for j, J in enumerate(after):
        for i, K in enumerate(before):
            entries[i][j] = Fraction(intersection_pairing(J, K, a))
    return StokesMatrix([T.critical.label for T in after], entries,
                        "geometric", "minus")


def exact_matrix(values) -> list[list]:
    """Convert a nested list of ints / Fractions / complex to exact entries."""
    out = []
    for row in values:
        r = []
        for x in row:
            if isinstance(x, complex):
                g = GaussianRational.round_complex(x)
                r.append(g.re if g.im == 0 else g)
            else:
                r.append(Fraction(x))
        out.append(r)
    return out
