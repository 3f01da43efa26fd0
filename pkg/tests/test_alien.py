from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from thimblekit.actions import IndexWindow
from thimblekit.alien import (
    HopfElement,
    TensorElement,
    all_words,
    antipode,
    antipode_generator_closed,
    apply_gamma,
    check_antipode,
    check_coassociativity,
    check_counit,
    compositions,
    coproduct,
    counit,
    exp_series,
    hopf_suite,
    is_group_like,
    is_primitive,
    log_series,
    log_stokes,
    represent_gamma,
    stokes_plus,
    tensor,
)

F = Fraction
W = 5
H = HopfElement


def g(k, w_max=W):
    return H.generator(k, w_max)


def one(w_max=W):
    return H.unit(w_max)


def test_unit_and_product():
    x = g(1) + g(2).scale(F(3, 2))
    assert one() * x == x * one() == x
    assert g(1) * g(2) == H.word((2, 1), W)
    assert g(2) * g(1) == H.word((1, 2), W)
    assert (g(3) * g(3)).is_zero()  # weight 6 truncated
    assert x + 0 == x and 2 * x == x + x


def test_rejects_floats_and_bad_words():
    with pytest.raises(TypeError):
        H({(1,): 0.5}, W)
    with pytest.raises(ValueError):
        H.word((0,), W)
    with pytest.raises(ValueError):
        g(1, 3) + g(1, 4)


def test_compositions():
    assert sorted(compositions(3)) == [(1, 1, 1), (1, 2), (2, 1), (3,)]
    assert [len(compositions(n)) for n in range(1, 7)] == [1, 2, 4, 8, 16, 32]


def test_coproduct_examples():
    assert coproduct(g(1)) == tensor(g(1), one()) + tensor(one(), g(1))
    assert coproduct(g(2)) == tensor(g(2), one()) + tensor(one(), g(2)) + tensor(g(1), g(1))
    assert counit(g(1)) == 0 and counit(one()) == 1
    assert coproduct(one()) == TensorElement.unit(W)


def test_antipode_examples():
    assert antipode(g(1)) == -g(1)
    assert antipode(g(2)) == -g(2) + H.word((1, 1), W)
    s3 = -g(3) + H.word((1, 2), W) + H.word((2, 1), W) - H.word((1, 1, 1), W)
    assert antipode(g(3)) == s3
    for k in range(1, W + 1):
        assert antipode(g(k)) == antipode_generator_closed(k, W)


def test_antipode_anti_multiplicative():
    x, y = g(1) + g(2), g(1) - g(3)
    assert antipode(x * y) == antipode(y) * antipode(x)


def test_log_components():
    d = log_stokes(W)
    assert d[0] == g(1)
    assert d[1] == g(2) - H.word((1, 1), W).scale(F(1, 2))
    assert d[2] == g(3) - (H.word((1, 2), W) + H.word((2, 1), W)).scale(F(1, 2)) \
        + H.word((1, 1, 1), W).scale(F(1, 3))
    for comp in d:
        assert is_primitive(comp)
    assert exp_series(sum(d[1:], d[0])) == stokes_plus(W)


def test_stokes_group_like():
    s = stokes_plus(W)
    assert is_group_like(s)
    assert s * antipode(s) == one()
    assert not is_group_like(g(1))
    assert not is_primitive(stokes_plus(W))
    with pytest.raises(ValueError):
        stokes_plus(0)
    with pytest.raises(ValueError):
        log_series(g(1))
    with pytest.raises(ValueError):
        exp_series(one())


def test_gamma_representation():
    win = IndexWindow(-3, 3)
    img = represent_gamma(g(1), 0, win)
    assert img.terms == {-1: 1} and not img.truncated
    img = represent_gamma(g(1) * g(1), 0, win)
    assert img.terms == {-2: 1}
    img = represent_gamma(stokes_plus(W), 0, win)
    assert img.terms == {0: 1, -1: 1, -2: 1, -3: 1} and img.truncated
    # the alien derivation at 2 pi lowers by one with coefficient 1
    d2 = log_stokes(W)[1]
    assert represent_gamma(d2, 2, win).terms == {0: F(1, 2)}
    with pytest.raises(ValueError):
        represent_gamma(g(1), 4, win)


def test_suite_passes():
    res = hopf_suite(4)
    assert res.passed, res.checks
    assert set(res.checks) >= {"coassociativity", "counit", "antipode", "stokes_group_like",
                               "log_primitive", "gamma_homomorphism"}


# properties ------------------------------------------------------------------

_WMAX = 4
_words = st.sampled_from(all_words(_WMAX))
_coef = st.fractions(-3, 3, max_denominator=5)
_elem = st.dictionaries(_words, _coef, max_size=5).map(lambda d: H(d, _WMAX))


@given(_elem, _elem, _elem)
def test_associativity(x, y, z):
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z


@given(_elem, _elem)
def test_coproduct_homomorphism(x, y):
    assert coproduct(x * y) == coproduct(x) * coproduct(y)
    assert counit(x * y) == counit(x) * counit(y)


@given(_elem)
def test_axioms_property(x):
    assert check_coassociativity(x)
    assert check_counit(x)
    assert check_antipode(x)


@given(_elem, _elem, _coef)
def test_representation_linear(x, y, c):
    win = IndexWindow(-6, 6)
    for n in (-1, 0, 3):
        lhs = represent_gamma(x + y.scale(c), n, win).terms
        a, b = represent_gamma(x, n, win), represent_gamma(y, n, win)
        keys = set(a.terms) | set(b.terms) | set(lhs)
        assert all(lhs.get(m, 0) == a[m] + c * b[m] for m in keys)


_low = st.dictionaries(st.sampled_from([w for w in all_words(_WMAX) if sum(w) <= 2]),
                       _coef, max_size=4).map(lambda d: H(d, _WMAX))


@given(_low, _low)
def test_representation_homomorphism(x, y):
    # total weight stays within the truncation
    win = IndexWindow(-12, 12)  # wide enough that nothing is truncated
    v = {2: F(1), -1: F(1, 3)}
    lhs = apply_gamma(x * y, v, win).terms
    rhs = apply_gamma(y, apply_gamma(x, v, win).terms, win).terms
    assert lhs == rhs
