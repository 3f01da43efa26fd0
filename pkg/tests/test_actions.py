import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thimblekit.actions import (
    Action,
    Domain,
    IndexWindow,
    critical_point,
    critical_points,
    eval_action,
    eval_grad,
    is_regular_phase,
    stokes_phases,
    thimble_orientation,
)
from thimblekit.errors import ActionRangeError

BOXES = {"airy": (-3, 3, -3, 3), "bessel": (-3, 3, -6, 6), "gamma": (-5, 5, -20, 20)}


def test_action_examples():
    assert eval_action(Action("airy"), 1.0) == pytest.approx(-2 / 3, abs=1e-15)
    assert eval_action(Action("bessel"), 0.5j * math.pi) == pytest.approx(1j, abs=1e-15)
    assert eval_action(Action("gamma"), 0.0) == pytest.approx(1.0, abs=1e-15)


def test_domains():
    assert Action("bessel").domain is Domain.CYLINDER
    assert Action("airy").domain is Domain.PLANE
    assert Action("gamma").domain is Domain.PLANE


@pytest.mark.parametrize("kind", ["airy", "bessel", "gamma"])
def test_gradient_matches_finite_difference(kind, rng):
    a = Action(kind)
    x0, x1, y0, y1 = BOXES[kind]
    z = rng.uniform(x0, x1, 100) + 1j * rng.uniform(y0, y1, 100)
    for h in (1e-5, 1e-5j):
        fd = (a.value(z + h) - a.value(z - h)) / (2 * h)
        scale = np.maximum(1.0, np.abs(a.grad(z)))
        assert np.max(np.abs(fd - a.grad(z)) / scale) <= 1e-6
    fd2 = (a.grad(z + 1e-5) - a.grad(z - 1e-5)) / 2e-5
    assert np.max(np.abs(fd2 - a.hess(z)) / np.maximum(1.0, np.abs(a.hess(z)))) <= 1e-6


@given(st.floats(-3, 3), st.floats(-10, 10))
def test_bessel_periodic(x, y):
    a = Action("bessel")
    z = complex(x, y)
    v = eval_action(a, z)
    assert abs(eval_action(a, z + 2j * math.pi) - v) <= 1e-14 * (1 + abs(v))


def test_range_guard():
    with pytest.raises(ActionRangeError):
        eval_action(Action("gamma"), 60.0)
    with pytest.raises(ActionRangeError):
        eval_grad(Action("bessel"), -51.0 + 1j)
    assert np.isfinite(eval_action(Action("airy"), 100.0))


def test_critical_points_examples():
    pos = sorted(round(p.position.real) for p in critical_points(Action("airy")))
    assert pos == [-1, 1]
    bes = sorted(p.position.imag for p in critical_points(Action("bessel")))
    assert bes == pytest.approx([-math.pi / 2, math.pi / 2])
    gam = critical_points(Action("gamma"), IndexWindow(-2, 2))
    assert len(gam) == 5
    assert sorted(p.index for p in gam) == [-2, -1, 0, 1, 2]
    for p in gam:
        assert p.position == pytest.approx(2j * math.pi * p.index)


@pytest.mark.parametrize("kind", ["airy", "bessel", "gamma"])
def test_critical_data_consistent(kind):
    a = Action(kind)
    pts = critical_points(a, IndexWindow(-4, 4))
    assert len({p.label for p in pts}) == len(pts)
    for p in pts:
        assert abs(a.grad(p.position)) <= 1e-12
        assert p.hessian != 0
        assert abs(a.value(p.position) - p.value) <= 1e-12 * (1 + abs(p.value))
        assert abs(a.hess(p.position) - p.hessian) <= 1e-12
        assert critical_point(a, p.label).position == p.position


def test_gamma_values_progression():
    for p in critical_points(Action("gamma"), IndexWindow(-10, 10)):
        assert abs(p.value - (1 - 2j * math.pi * p.index)) <= 1e-12


def test_critical_points_sorted_by_rotated_G():
    a = Action("gamma").rotated(math.pi / 2)
    pts = critical_points(a, IndexWindow(-3, 3))
    keys = [((a.rotation * p.value).imag, (a.rotation * p.value).real) for p in pts]
    assert keys == sorted(keys)


def test_stokes_phases_examples():
    assert stokes_phases(Action("airy")) == pytest.approx([0.0, math.pi])
    assert stokes_phases(Action("bessel")) == pytest.approx([math.pi / 2, 3 * math.pi / 2])
    assert stokes_phases(Action("gamma"), IndexWindow(-3, 3)) == pytest.approx(
        [math.pi / 2, 3 * math.pi / 2])


@pytest.mark.parametrize("kind", ["airy", "bessel", "gamma"])
def test_stokes_phases_swap_invariant(kind):
    # each phase theta comes with theta + pi (differences and their negatives)
    ph = stokes_phases(Action(kind))
    for t in ph:
        assert any(abs(((t + math.pi) % (2 * math.pi)) - q) < 1e-12 for q in ph)
        assert all(0 <= q < 2 * math.pi for q in ph)


def test_regular_phase_examples():
    assert not is_regular_phase(Action("airy"), 0.0)
    assert is_regular_phase(Action("airy"), 0.3)
    assert not is_regular_phase(Action("gamma"), math.pi / 2)
    assert is_regular_phase(Action("gamma"), math.pi / 2 + 0.1)


def test_rotation():
    a = Action("bessel").rotated(math.pi / 2)
    z = 0.3 + 0.2j
    assert a.value(z) == pytest.approx(cmath.exp(-0.5j * math.pi) * Action("bessel").value(z))
    with pytest.raises(ValueError):
        Action("airy", 2.0)


def test_index_window():
    with pytest.raises(ValueError):
        IndexWindow(2, 1)
    with pytest.raises(ValueError):
        IndexWindow(0, 64)
    w = IndexWindow(-1, 1)
    assert list(w) == [-1, 0, 1] and len(w) == 3 and 0 in w and 2 not in w


def test_orientation_constants():
    # Gaussian constants C = u sqrt(2 pi / |A''|) of the saddle expansions
    assert thimble_orientation("airy", "p+") == pytest.approx(-1)
    assert thimble_orientation("airy", "p-") == pytest.approx(-1j)
    assert thimble_orientation("bessel", "w+") == pytest.approx(1)
    assert thimble_orientation("bessel", "w-") == pytest.approx(1j)
    assert thimble_orientation("gamma", "p_3") == pytest.approx(cmath.exp(0.25j * math.pi))
