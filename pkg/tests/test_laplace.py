import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn
from scipy.special import j0

from thimblekit.actions import IndexWindow
from thimblekit.borel import BorelGerm, ClosedForm, model_germ, stokes_constant
from thimblekit.errors import CutoffTooSmallError
from thimblekit.laplace import (
    DEFAULT_HBAR,
    LateralRay,
    bessel_loop_integral,
    fit_stokes_matrix_numeric,
    gamma_lateral_closed,
    gamma_line_integral,
    lateral_difference,
    lateral_laplace,
    ray_for,
    reduced_difference,
    reduced_lateral,
    stokes_constant_from_fit,
    thimble_integral,
    verify_thimble_equals_lateral,
)

F = __import__("fractions").Fraction


class _Quadratic:
    def value(self, z):
        return 0.5 * np.asarray(z) ** 2


def test_constant_germ():
    g = BorelGerm([F(1)])
    for h in (0.05, 0.3, 1.0):
        assert lateral_laplace(g, ray_for(g, "<", h), h) == pytest.approx(h, rel=1e-12)


@pytest.mark.parametrize("h", [0.1, 0.2, 0.5])
def test_simple_pole(h):
    g = BorelGerm([1.0] * 30, closed_form=ClosedForm("pole", (1.0,)), known_singularities=[1.0])
    lo = lateral_laplace(g, ray_for(g, "<", h), h)
    hi = lateral_laplace(g, ray_for(g, ">", h), h)
    residue = -2j * math.pi * math.exp(-1 / h)  # counter-clockwise loop around xi = 1
    assert lo - hi == pytest.approx(residue, rel=1e-9)
    assert lateral_difference(g, ray_for(g, "<", h), h) == pytest.approx(residue, rel=1e-9)


def test_ray_validation():
    with pytest.raises(ValueError):
        LateralRay(side="^")
    with pytest.raises(ValueError):
        LateralRay(detours=[(1.0, 0.5), (1.5, 0.5)])
    with pytest.raises(ValueError):
        lateral_laplace(BorelGerm([1], F(1, 2), "shifted"), LateralRay(), 0.1)


@pytest.mark.parametrize("h", [0.08, 0.15, 0.3])
def test_airy_lateral_identity(h):
    # (S< - S>) phi_+ = -i exp(-4/(3h)) S phi_-
    lhs = reduced_difference("airy", "p+", h)
    rhs = -1j * math.exp(-4 / (3 * h)) * reduced_lateral("airy", "p-", ">", h)
    assert lhs == pytest.approx(rhs, rel=1e-9)
    direct = reduced_lateral("airy", "p+", "<", h) - reduced_lateral("airy", "p+", ">", h)
    assert abs(direct - lhs) <= 1e-10 * abs(reduced_lateral("airy", "p+", ">", h))


@pytest.mark.parametrize("h", [0.1, 0.5])
def test_bessel_lateral_identity(h):
    lhs = reduced_difference("bessel", "w-", h)
    rhs = -2j * math.exp(-2 / h) * reduced_lateral("bessel", "w+", ">", h)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_airy_minus_unambiguous():
    for h in (0.1, 0.3):
        lo = reduced_lateral("airy", "p-", "<", h)
        hi = reduced_lateral("airy", "p-", ">", h)
        assert abs(lo - hi) <= 1e-10 * abs(hi)


def test_gaussian_thimble():
    for h in (0.1, 1.0):
        val = thimble_integral(_Quadratic(), np.linspace(-30, 30, 201), h)
        assert val == pytest.approx(math.sqrt(2 * math.pi * h), rel=1e-13)
    with pytest.raises(CutoffTooSmallError):
        thimble_integral(_Quadratic(), np.linspace(-2, 2, 51), 1.0)


@pytest.mark.parametrize("h", [0.25, 0.5, 1.0, 2.0])
def test_gamma_factorial(h):
    ref = h ** (1 / h) * gamma_fn(1 / h)
    # the dropped left tail is about 2 h exp(-50/h)
    val = gamma_line_integral(h, x_min=-50.0, x_max=12.0)
    assert val == pytest.approx(ref, rel=1e-13 + 2 * h * math.exp(-50 / h) / ref)


@pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
def test_bessel_loop(x):
    assert bessel_loop_integral(x) == pytest.approx(2j * math.pi * j0(x), rel=1e-13, abs=1e-14)


@pytest.mark.parametrize("kind,label,side,grid", [
    ("airy", "p+", "<", DEFAULT_HBAR), ("airy", "p-", ">", DEFAULT_HBAR),
    ("bessel", "w-", ">", DEFAULT_HBAR), ("bessel", "w+", "<", DEFAULT_HBAR),
    ("gamma", "p_0", "<", (0.5, 1.0, 2.0))])
def test_thimble_equals_lateral(kind, label, side, grid):
    rep = verify_thimble_equals_lateral(kind, label, side, grid)
    assert rep.max_deviation < 1e-10


@pytest.mark.parametrize("h", [0.1, 0.5, 2.0])
def test_gamma_third_route(h):
    # Stirling remainder from scipy loggamma
    assert reduced_lateral("gamma", "p_0", "<", h) == pytest.approx(gamma_lateral_closed(h), rel=1e-12)


@pytest.mark.parametrize("kind,window,expected", [
    ("airy", None, [[1, -1], [0, 1]]),
    ("bessel", None, [[1, 2], [0, 1]]),
    ("gamma", IndexWindow(-1, 1), [[1, 1, 1], [0, 1, 1], [0, 0, 1]])])
def test_fit_resurgent_matrix(kind, window, expected):
    m = fit_stokes_matrix_numeric(kind, window=window)
    assert m.rounded and m.residual < 1e-3
    assert m.entries == expected


def test_fit_from_thimbles():
    m = fit_stokes_matrix_numeric("airy", source="thimble")
    assert m.rounded and m.entries == [[1, -1], [0, 1]]


@pytest.mark.parametrize("kind,src,tgt,omega", [("airy", "p+", "p-", 4 / 3),
                                                ("bessel", "w-", "w+", 2.0)])
def test_stokes_constant_cross_route(kind, src, tgt, omega):
    fit = stokes_constant_from_fit(kind, src, tgt)
    var = stokes_constant(kind, src, omega)
    assert fit == pytest.approx(var, abs=1e-8)


def test_germ_laplace_matches_series():
    # small hbar: the lateral sum approaches the truncated series
    g = model_germ("airy", "p-", 24)
    h = 0.02
    val = lateral_laplace(g, ray_for(g, ">", h), h) / h
    partial = sum(float(g.inverse()[m]) * h**m for m in range(8))
    assert val == pytest.approx(partial, rel=1e-9)
