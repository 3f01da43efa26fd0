import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thimblekit.borel import (
    ClosedForm,
    BorelGerm,
    binet_germ,
    binet_value,
    borel_ordinary,
    borel_shifted,
    continued_value,
    locate_singularities,
    model_germ,
    nearest_on_ray,
    singularity_record,
    stokes_constant,
    variation,
)
from thimblekit.errors import NotAvailableError, UnsupportedGermError
from thimblekit.series import PowerSeries, gamma_log

F = Fraction
TWO_PI = 2 * math.pi


def _poch(a: Fraction, k: int) -> Fraction:
    return math.prod((a + j for j in range(k)), start=Fraction(1))


def test_geometric_germ():
    # sum m! h^m -> 1/(1 - xi)
    s = PowerSeries([math.factorial(m) for m in range(12)])
    g = borel_ordinary(s)
    assert g.coeffs == [1] * 12
    assert g.inverse() == s


@pytest.mark.parametrize("label,sign", [("p+", 1), ("p-", -1)])
def test_airy_closed_form_taylor(label, sign):
    g = model_germ("airy", label, 20)
    for k in range(20):
        ref = _poch(F(1, 6), k) * _poch(F(5, 6), k) / math.factorial(k) ** 2 * F(3 * sign, 4) ** k
        assert g.coeffs[k] == ref
    for xi in (0.3, -0.5 + 0.2j):
        ref = complex(mpmath.hyp2f1(F(1, 6), F(5, 6), 1, 0.75 * sign * xi))
        assert g(xi) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("label,sign", [("w+", -1), ("w-", 1)])
def test_bessel_closed_form_taylor(label, sign):
    g = model_germ("bessel", label, 20)
    for k in range(20):
        ref = _poch(F(1, 2), k) ** 2 / math.factorial(k) ** 2 * F(sign, 2) ** k
        assert g.coeffs[k] == ref
    assert g(0.7) == pytest.approx(complex(mpmath.hyp2f1(0.5, 0.5, 1, sign * 0.35)), rel=1e-13)


def test_shifted_transform_roundtrip():
    s = PowerSeries([F(1), F(1, 3), F(-2, 7), F(5)], F(2))
    g = borel_shifted(s)
    assert g.exponent == 1
    assert g.coeffs == [1, F(1, 6), F(-1, 21), F(5, 24)]
    assert g.inverse() == s
    # half-integer exponent: xi^(-1/2)/Gamma(1/2) leading term
    h = borel_shifted(PowerSeries([1, 0, 0], F(1, 2)))
    assert h(0.25) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        borel_shifted(PowerSeries([1], F(0)))
    with pytest.raises(ValueError):
        borel_ordinary(PowerSeries([1], F(1, 2)))


@given(st.lists(st.fractions(-3, 3, max_denominator=9), min_size=1, max_size=10))
def test_ordinary_inverse_property(cs):
    s = PowerSeries(cs)
    assert borel_ordinary(s).inverse() == s


def test_binet_germ():
    g = binet_germ(30)
    for xi in (0.5, 1.9, 2.1, 3.0 + 1.0j):
        w = 1j * xi
        closed = (1 / (np.exp(w) - 1) - 1 / w + 0.5) / xi
        assert binet_value(xi) == pytest.approx(closed, rel=1e-10)
    # the germ is the shifted transform of log phi_Gamma
    assert g.inverse() == PowerSeries(gamma_log(30).coeffs[1:], F(1))
    assert g(0.5) == pytest.approx(complex(np.polyval(g.taylor()[::-1], 0.5)), rel=1e-12)


@pytest.mark.parametrize("kind,label,omega", [
    ("airy", "p+", 4 / 3), ("bessel", "w-", 2.0), ("gamma", "p_0", TWO_PI)])
def test_pade_locates_singularity(kind, label, omega):
    errs = []
    for N in (20, 30, 40):
        scan = locate_singularities(model_germ(kind, label, N), N)
        z = nearest_on_ray(scan)
        assert z is not None
        errs.append(abs(z - omega))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_airy_minus_one_sided():
    scan = locate_singularities(model_germ("airy", "p-", 40), 40)
    assert nearest_on_ray(scan) is None
    assert scan.nearest == pytest.approx(-4 / 3, abs=1e-4)


def test_pade_rejects_short_input():
    with pytest.raises(ValueError):
        locate_singularities(model_germ("airy", "p+", 10), 20)


@pytest.mark.parametrize("kind,source,target,omega,c", [
    ("airy", "p+", "p-", 4 / 3, -1j), ("bessel", "w-", "w+", 2.0, -2j)])
def test_variation_is_target_germ(kind, source, target, omega, c):
    var = variation(model_germ(kind, source, 30), omega).taylor()[:8]
    ref = c * model_germ(kind, target, 8).taylor()
    assert np.allclose(var, ref, atol=1e-8)


def test_variation_linear():
    g = model_germ("airy", "p+", 30)
    v1 = variation(g, 4 / 3).taylor()[:6]
    v3 = variation(g.scaled(3 - 2j), 4 / 3).taylor()[:6]
    assert np.allclose(v3, (3 - 2j) * v1, atol=1e-8)


def test_variation_rejects_pole_germ():
    g = BorelGerm([1.0] * 10, closed_form=ClosedForm("pole", (1.0,)))
    with pytest.raises(UnsupportedGermError):
        variation(g, 1.0)
    with pytest.raises(UnsupportedGermError):
        variation(model_germ("gamma", "p_0", 10), TWO_PI)


def test_continuation_sides():
    g = model_germ("airy", "p+", 10)
    above = continued_value(g, [0, 1 + 0.3j, 2.0])
    below = continued_value(g, [0, 1 - 0.3j, 2.0])
    assert above == pytest.approx(g(complex(2.0, 0.0)), rel=1e-10)
    assert below == pytest.approx(g(complex(2.0, -0.0)), rel=1e-10)
    assert abs(above - below) > 0.1


def test_stokes_constants():
    assert stokes_constant("airy", "p+", 4 / 3) == pytest.approx(-1j, abs=1e-8)
    assert stokes_constant("bessel", "w-", 2.0) == pytest.approx(-2j, abs=1e-8)
    for m in (-1, 1, 2, 5):
        assert stokes_constant("gamma", "p_0", TWO_PI * m) == 1
    for bad in (0.0, -2 * TWO_PI, 1.0):
        with pytest.raises(NotAvailableError):
            stokes_constant("gamma", "p_0", bad)
    with pytest.raises(NotAvailableError):
        stokes_constant("airy", "p-", 4 / 3)


def test_singularity_records():
    r = singularity_record("airy", "p+")
    assert (r.target, r.omega) == ("p-", 4 / 3)
    r = singularity_record("bessel", "w-")
    assert (r.target, r.omega) == ("w+", 2.0)
    r = singularity_record("gamma", "p_3")
    assert r.target == "p_3" and r.omega == TWO_PI and r.stokes_constant == 1
