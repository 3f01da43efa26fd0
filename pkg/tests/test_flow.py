import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thimblekit.actions import Action, critical_point
from thimblekit.flow import (
    FlowPath,
    PathKind,
    flow_field,
    flow_invariants,
    integrate_flow,
    level_F,
    level_G,
    local_frame,
    max_speed_time,
    reduce_cylinder,
    seam_crossings,
    trace_pair,
    trace_thimble,
)


def _angle_mod_pi(z):
    return np.angle(z) % math.pi


def test_flow_field_examples():
    a = Action("airy")
    assert flow_field(a, 0.0, 0.0) == pytest.approx(1.0)
    assert flow_field(a, 0.0, 1.0) == pytest.approx(0.0)
    assert flow_field(a, 0.0, -1.0) == pytest.approx(0.0)
    b = Action("bessel")
    th = math.pi / 2
    for x, y in [(0.3, 0.7), (-1.2, 2.5), (0.5, -3.0)]:
        v = flow_field(b, th, complex(x, y))
        assert v.real == pytest.approx(-math.sinh(x) * math.sin(y), abs=1e-14)
        assert v.imag == pytest.approx(-math.cosh(x) * math.cos(y), abs=1e-14)


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.3, -0.8, math.pi / 2 - 0.1])
def test_local_frames(theta):
    g = Action("gamma")
    for n in (-1, 0, 2):
        s, u = local_frame(g, theta, critical_point(g, f"p_{n}"))
        assert _angle_mod_pi(s) == pytest.approx((theta / 2) % math.pi, abs=1e-12)
        assert _angle_mod_pi(u) == pytest.approx((theta / 2 + math.pi / 2) % math.pi, abs=1e-12)
    a = Action("airy")
    s, u = local_frame(a, theta, critical_point(a, "p+"))
    assert _angle_mod_pi(s) == pytest.approx((theta / 2) % math.pi, abs=1e-12)
    s, u = local_frame(a, theta, critical_point(a, "p-"))
    assert _angle_mod_pi(s) == pytest.approx((theta / 2 + math.pi / 2) % math.pi, abs=1e-12)
    assert abs((np.conj(s) * u).real) < 1e-15


def test_integrate_examples():
    a = Action("airy")
    P = integrate_flow(a, 0.0, 0.0)
    assert P.captured is not None and P.captured.label == "p+"
    assert abs(P.z[-1] - 1) < 1e-5
    Q = integrate_flow(a, 0.0, -2.0)
    assert Q.termination == "escape"
    assert Q.z[-1].real < -2 and np.max(np.abs(Q.z.imag)) < 1e-12
    b = Action("bessel")
    R = integrate_flow(b, math.pi / 2, 0.3j, 50.0)
    assert np.max(np.abs(R.z.real)) < 1e-12
    assert np.max(np.abs(R.G)) < 1e-12


def test_airy_stable_branches_real():
    a = Action("airy")
    A, B = trace_thimble(a, 0.0, critical_point(a, "p+"), "stable")
    for P in (A, B):
        assert np.max(np.abs(P.z.imag)) < 1e-12
    ends = sorted([A.z[-1].real, B.z[-1].real])
    assert ends[0] > -1 and ends[0] < 1 and ends[1] > 1


def test_airy_unstable_hyperbola():
    a = Action("airy")
    C, D = trace_thimble(a, 0.0, critical_point(a, "p+"), "unstable")
    for P in (C, D):
        u, v = P.z.real, P.z.imag
        assert np.max(np.abs(u**2 - v**2 / 3 - 1)) < 1e-8
        assert np.all(u >= 1 - 1e-9)
    assert np.sign(C.z[-1].imag) == -np.sign(D.z[-1].imag)


def test_airy_connection_tanh():
    a = Action("airy")
    C, D = trace_thimble(a, 0.0, critical_point(a, "p-"), "unstable")
    conn = C if C.captured is not None else D
    assert conn.kind is PathKind.CONNECTING and conn.captured.label == "p+"
    s0 = max_speed_time(conn)
    err = np.max(np.abs(conn.z[1:] - np.tanh(conn.s[1:] - s0)))
    assert err <= 1e-6


def test_gamma_stable_ends():
    g = Action("gamma")
    th = math.pi / 2 - 0.1
    A, B = trace_thimble(g, th, critical_point(g, "p_0"), "stable", f_cutoff=60)
    right, left = (A, B) if A.z[-1].real > 0 else (B, A)
    x, y = right.z[-1].real, right.z[-1].imag
    assert abs(y - th) <= 2 * x * math.exp(-x)
    # left end: y = x tan(theta) + tan(theta) + o(1), dy/dx -> tan(theta)
    zl = left.z
    t = math.tan(th)
    assert zl[-1].real < -6
    assert abs(zl[-1].imag - (zl[-1].real * t + t)) < 0.05
    v = flow_field(g, th, zl[-1])  # tangent of the branch at its end
    assert abs(v.imag / v.real - t) < 1e-2


def test_bessel_wrapped_branch():
    b = Action("bessel")
    A, B = trace_thimble(b, math.pi / 2 + 0.1, critical_point(b, "w-"), "stable")
    right = A if A.z[-1].real > 0 else B
    other = B if right is A else A
    assert abs(reduce_cylinder(right).wrap_count) == 1
    assert reduce_cylinder(other).wrap_count == 0
    (s, x, _), = seam_crossings(right)
    # oracle: bisection on sinh(x) = tan(0.1)
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if math.sinh(mid) < math.tan(0.1) else (lo, mid)
    assert abs(x - lo) < 1e-4
    assert abs(x - 0.1001674) < 1e-4


def _line(ys, x=0.5):
    a = Action("bessel")
    z = x + 1j * np.asarray(ys)
    return FlowPath(s=np.arange(len(z), dtype=float), z=z, theta=0.0, level_G=0.0, action=a)


def test_reduce_cylinder_examples():
    once = reduce_cylinder(_line(np.linspace(2.0, 4.0, 50)))
    assert once.wrap_count == 1
    y = once.z.imag
    assert np.all((y > -math.pi) & (y <= math.pi))
    jumps = np.abs(np.diff(y))
    assert np.isclose(jumps.max(), 2 * math.pi - (2.0 / 49), atol=1e-9)
    stay = _line(np.linspace(-1.0, 1.0, 20))
    r = reduce_cylinder(stay)
    assert r.wrap_count == 0 and np.array_equal(r.z, stay.z)
    with pytest.raises(ValueError):
        reduce_cylinder(FlowPath(np.zeros(2), np.zeros(2, complex), 0.0, 0.0,
                                 action=Action("airy")))


def test_branch_launch_and_orientation():
    a = Action("airy")
    for lab in ("p+", "p-"):
        p = critical_point(a, lab)
        T = trace_pair(a, 0.3, p)
        s, u = local_frame(a, 0.3, p)
        for P, d in ((T.A, T.orient), (T.B, -T.orient), (T.C, 1j * T.orient), (T.D, -1j * T.orient)):
            assert P.z[0] == p.position
            step = P.z[1] - p.position
            assert abs(step - 1e-6 * d) < 1e-12
        fp = level_F(a, 0.3, p.position)
        assert level_F(a, 0.3, T.A.z[-1]) - fp >= 30 - 1e-6
        assert level_F(a, 0.3, T.C.z[-1]) - fp <= -30 + 1e-6


@given(st.sampled_from(["airy", "bessel", "gamma"]), st.floats(-2, 2), st.floats(-3, 3),
       st.floats(0, 2 * math.pi))
def test_flow_invariants_property(kind, x, y, theta):
    a = Action(kind)
    z0 = complex(x, y)
    if np.min(np.abs(a.grad(z0))) < 1e-3:
        return
    P = integrate_flow(a, theta, z0, 5.0, f_ref=float(level_F(a, theta, z0)), capture=False)
    inv = flow_invariants(P)
    assert inv["g_drift"] <= 1e-9
    assert inv["rate_rel"] <= 1e-8
    assert inv["monotone"]
    assert abs(P.level_G - level_G(a, theta, z0)) < 1e-15 * (1 + abs(P.level_G))
