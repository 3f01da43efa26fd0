import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thimblekit.errors import UnsupportedGermError
from thimblekit.hypergeometric import continue_along, hyp2f1, hyp2f1_with_derivative

PARAMS = [(1 / 6, 5 / 6, 1.0), (0.5, 0.5, 1.0), (1.0, 1.0, 2.0), (0.3, 1.7, 2.5)]


def _mp(a, b, c, x):
    return complex(mpmath.hyp2f1(a, b, c, x))


@pytest.mark.parametrize("a,b,c", PARAMS)
@pytest.mark.parametrize("x", [0.3, -0.9, 0.5 + 0.7j, -3.0 + 0.1j, 0.95 - 0.2j, 2.0 + 1.5j,
                               -20.0, 1.05 + 0.05j, 0.98])
def test_against_mpmath(a, b, c, x):
    assert hyp2f1(a, b, c, x) == pytest.approx(_mp(a, b, c, x), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("a,b,c", PARAMS)
def test_both_sides_of_cut(a, b, c):
    for x in (1.5, 3.0, 8.0):
        up = hyp2f1(a, b, c, complex(x, 0.0))
        down = hyp2f1(a, b, c, complex(x, -0.0))
        assert up == pytest.approx(_mp(a, b, c, complex(x, 1e-30)), rel=1e-9)
        assert down == pytest.approx(_mp(a, b, c, complex(x, -1e-30)), rel=1e-9)
        assert abs(up - down) > 1e-3


def test_log_identity():
    # 2F1(1,1;2;x) = -log(1-x)/x
    assert hyp2f1(1, 1, 2, 0.5) == pytest.approx(2 * math.log(2), rel=1e-14)
    assert hyp2f1(1, 1, 2, -4.0) == pytest.approx(math.log(5) / 4, rel=1e-12)


def test_series_oracle():
    a, b, c, x = 1 / 6, 5 / 6, 1.0, 0.5
    term, total = 1.0, 0.0
    for n in range(60):
        total += term
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x
    assert hyp2f1(a, b, c, x) == pytest.approx(total, rel=1e-14)


def test_derivative():
    a, b, c = 0.5, 0.5, 1.0
    for x in (0.2 + 0.1j, 3.0 + 2.0j, -5.0 + 0j):
        _, d = hyp2f1_with_derivative(a, b, c, x)
        ref = a * b / c * _mp(a + 1, b + 1, c + 1, x)
        assert d == pytest.approx(ref, rel=1e-9)


def test_continuation_around_branch_point():
    a, b, c = 0.5, 0.5, 1.0
    f0, d0 = hyp2f1_with_derivative(a, b, c, 0.5)
    # once around x = 1 counterclockwise comes back on another sheet
    path = [0.5, 1 - 0.5j, 1.5, 1 + 0.5j, 0.5]
    f1, _ = continue_along(a, b, c, path, f0, d0)
    assert abs(f1 - f0) > 0.1
    # a loop not enclosing 1 returns to the start
    f2, _ = continue_along(a, b, c, [0.5, 0.5 + 0.3j, 0.3, 0.5], f0, d0)
    assert f2 == pytest.approx(f0, rel=1e-11)


def test_vectorized_and_errors():
    xs = np.array([0.1, -0.5, 2.0 + 1j])
    assert np.allclose(hyp2f1(0.5, 0.5, 1.0, xs), [_mp(0.5, 0.5, 1.0, x) for x in xs], rtol=1e-10)
    with pytest.raises(UnsupportedGermError):
        hyp2f1(0.5, 0.5, -1.0, 0.1)
    with pytest.raises(UnsupportedGermError):
        hyp2f1(0.5, 0.5, 1.0, 1.0)


@given(st.complex_numbers(max_magnitude=6.0, allow_nan=False, allow_infinity=False))
def test_property_against_mpmath(x):
    if abs(x - 1) < 0.05 or abs(x.imag) < 1e-6 and x.real > 1:
        return
    assert hyp2f1(1 / 6, 5 / 6, 1.0, x) == pytest.approx(_mp(1 / 6, 5 / 6, 1.0, x), rel=1e-9, abs=1e-12)
