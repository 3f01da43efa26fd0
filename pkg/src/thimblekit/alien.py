"""Truncated Hopf algebra of pointed alien operators on one Stokes ray.

Generators ``g_w`` are labelled by positive integer weights (multiples of a
base weight ``w0``). A word ``(w_1, ..., w_r)`` stands for the operator
composition ``g_{w_r} ... g_{w_1}``, so ``w_1`` acts first and

    word(w) * word(v) = word(v + w)        (tuple concatenation).

The coproduct is ``Delta(g_w) = g_w x 1 + 1 x g_w + sum_{a+b=w} g_a x g_b``,
extended multiplicatively; the counit kills every non-empty word; the
antipode is anti-multiplicative. All coefficients are exact (``Fraction`` or
``GaussianRational``); terms above the truncation weight ``w_max`` are
dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

from .actions import IndexWindow
from .exact import GaussianRational, exact

Word = tuple[int, ...]
DEFAULT_WMAX = 6
GAMMA_BASE_WEIGHT = 2.0 * math.pi  # only used for labels in the Gamma representation


def _coeff(c):
    if isinstance(c, float):
        raise TypeError("floating-point coefficients are not allowed")
    return exact(c)


def weight(w: Word) -> int:
    return sum(w)


def _check_word(w: Iterable[int]) -> Word:
    w = tuple(int(k) for k in w)
    if any(k < 1 for k in w):
        raise ValueError(f"word weights must be positive integers, got {w}")
    return w


def compositions(n: int) -> list[Word]:
    """All ordered tuples of positive integers summing to ``n``."""
    return list(_compositions(n))


@lru_cache(maxsize=None)
def _compositions(n: int) -> tuple[Word, ...]:
    if n == 0:
        return ((),)
    out = []
    for first in range(1, n + 1):
        out.extend((first,) + rest for rest in _compositions(n - first))
    return tuple(out)


def _accumulate(terms: dict, key, c) -> None:
    s = terms.get(key, 0) + c
    if s:
        terms[key] = exact(s)
    else:
        terms.pop(key, None)


@dataclass(frozen=True)
class HopfElement:
    """Finite linear combination of words, truncated at total weight ``w_max``."""

    terms: Mapping[Word, Fraction | GaussianRational] = field(default_factory=dict)
    w_max: int = DEFAULT_WMAX

    def __post_init__(self) -> None:
        if self.w_max < 0:
            raise ValueError("w_max must be non-negative")
        clean: dict[Word, object] = {}
        for w, c in self.terms.items():
            w = _check_word(w)
            if weight(w) <= self.w_max:
                _accumulate(clean, w, _coeff(c))
        object.__setattr__(self, "terms", clean)

    # constructors
    @classmethod
    def unit(cls, w_max: int = DEFAULT_WMAX) -> "HopfElement":
        return cls({(): 1}, w_max)

    @classmethod
    def zero(cls, w_max: int = DEFAULT_WMAX) -> "HopfElement":
        return cls({}, w_max)

    @classmethod
    def word(cls, w: Iterable[int], w_max: int = DEFAULT_WMAX, coeff=1) -> "HopfElement":
        return cls({tuple(w): coeff}, w_max)

    @classmethod
    def generator(cls, k: int, w_max: int = DEFAULT_WMAX) -> "HopfElement":
        return cls.word((k,), w_max)

    # linear structure
    def _same(self, other: "HopfElement") -> None:
        if self.w_max != other.w_max:
            raise ValueError(f"truncations differ: {self.w_max} vs {other.w_max}")

    def __add__(self, other):
        if not isinstance(other, HopfElement):
            other = HopfElement({(): other}, self.w_max)
        self._same(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            _accumulate(out, w, c)
        return HopfElement(out, self.w_max)

    __radd__ = __add__

    def __neg__(self):
        return HopfElement({w: -c for w, c in self.terms.items()}, self.w_max)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "HopfElement":
        c = _coeff(c)
        return HopfElement({w: c * v for w, v in self.terms.items()}, self.w_max)

    def __mul__(self, other):
        if isinstance(other, HopfElement):
            return product(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        out = HopfElement.unit(self.w_max)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, HopfElement):
            return self.w_max == other.w_max and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.w_max, frozenset(self.terms.items())))

    def __getitem__(self, w: Iterable[int]):
        return self.terms.get(tuple(w), Fraction(0))

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def homogeneous(self, k: int) -> "HopfElement":
        """Weight-``k`` component."""
        return HopfElement({w: c for w, c in self.terms.items() if weight(w) == k}, self.w_max)

    def constant(self):
        return self.terms.get((), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = [f"({c})*{list(w) if w else '1'}" for w, c in sorted(self.terms.items())]
        return " + ".join(parts)


def product(x: HopfElement, y: HopfElement) -> HopfElement:
    """Composition ``x y`` (``y`` acts first): word ``w`` times ``v`` is ``v + w``."""
    x._same(y)
    out: dict[Word, object] = {}
    for w, a in x.terms.items():
        for v, b in y.terms.items():
            if weight(w) + weight(v) <= x.w_max:
                _accumulate(out, v + w, a * b)
    return HopfElement(out, x.w_max)


@dataclass(frozen=True)
class TensorElement:
    """Element of the ``k``-fold tensor power, keys are tuples of words.

    Truncation applies to the combined weight of all factors.
    """

    terms: Mapping[tuple[Word, ...], Fraction | GaussianRational] = field(default_factory=dict)
    w_max: int = DEFAULT_WMAX
    arity: int = 2

    def __post_init__(self) -> None:
        clean: dict = {}
        for key, c in self.terms.items():
            if len(key) != self.arity:
                raise ValueError(f"key {key} has arity {len(key)}, expected {self.arity}")
            key = tuple(_check_word(w) for w in key)
            if sum(weight(w) for w in key) <= self.w_max:
                _accumulate(clean, key, _coeff(c))
        object.__setattr__(self, "terms", clean)

    def _same(self, other: "TensorElement") -> None:
        if (self.w_max, self.arity) != (other.w_max, other.arity):
            raise ValueError("tensor elements live in different spaces")

    def __add__(self, other: "TensorElement") -> "TensorElement":
        self._same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            _accumulate(out, k, c)
        return TensorElement(out, self.w_max, self.arity)

    def __neg__(self):
        return TensorElement({k: -c for k, c in self.terms.items()}, self.w_max, self.arity)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "TensorElement") -> "TensorElement":
        """Factorwise product."""
        self._same(other)
        out: dict = {}
        for k1, a in self.terms.items():
            w1 = sum(weight(w) for w in k1)
            for k2, b in other.terms.items():
                if w1 + sum(weight(w) for w in k2) <= self.w_max:
                    _accumulate(out, tuple(v + w for w, v in zip(k1, k2)), a * b)
        return TensorElement(out, self.w_max, self.arity)

    def __eq__(self, other):
        if isinstance(other, TensorElement):
            return (self.w_max, self.arity, self.terms) == (other.w_max, other.arity, other.terms)
        return NotImplemented

    def __hash__(self):
        return hash((self.w_max, self.arity, frozenset(self.terms.items())))

    def __getitem__(self, key):
        return self.terms.get(tuple(tuple(w) for w in key), Fraction(0))

    @classmethod
    def unit(cls, w_max: int = DEFAULT_WMAX, arity: int = 2) -> "TensorElement":
        return cls({((),) * arity: 1}, w_max, arity)


def tensor(x: HopfElement, y: HopfElement) -> TensorElement:
    """``x (x) y`` truncated on the combined weight."""
    x._same(y)
    out: dict = {}
    for w, a in x.terms.items():
        for v, b in y.terms.items():
            _accumulate(out, (w, v), a * b)
    return TensorElement(out, x.w_max, 2)


# ---------------------------------------------------------------- coproduct

def _generator_coproduct(k: int, w_max: int) -> TensorElement:
    terms: dict = {((k,), ()): 1, ((), (k,)): 1}
    for a in range(1, k):
        terms[((a,), (k - a,))] = 1
    return TensorElement(terms, w_max, 2)


@lru_cache(maxsize=None)
def _word_coproduct(w: Word, w_max: int) -> TensorElement:
    # word (w_1..w_r) = g_{w_r} ... g_{w_1}; tensor product uses the same rule
    out = TensorElement.unit(w_max, 2)
    for k in w:
        out = _generator_coproduct(k, w_max) * out
    return out


def coproduct(x: HopfElement) -> TensorElement:
    out: dict = {}
    for w, c in x.terms.items():
        for key, d in _word_coproduct(w, x.w_max).terms.items():
            _accumulate(out, key, c * d)
    return TensorElement(out, x.w_max, 2)


def counit(x: HopfElement):
    """Coefficient of the empty word."""
    return x.constant()


def apply_slot(t: TensorElement, slot: int,
               f: Callable[[HopfElement], HopfElement | TensorElement]) -> TensorElement:
    """Apply a linear map to one tensor factor.

    ``f`` may return a ``HopfElement`` (arity unchanged) or a ``TensorElement``
    of arity 2 (arity grows by one, e.g. a coproduct).
    """
    out: dict = {}
    arity = None
    for key, c in t.terms.items():
        img = f(HopfElement.word(key[slot], t.w_max))
        if isinstance(img, HopfElement):
            pieces = {(w,): d for w, d in img.terms.items()}
            new_arity = t.arity
        else:
            pieces = img.terms
            new_arity = t.arity + img.arity - 1
        arity = new_arity
        for sub, d in pieces.items():
            _accumulate(out, key[:slot] + tuple(sub) + key[slot + 1:], c * d)
    if arity is None:  # zero input: probe the arity with the unit
        probe = f(HopfElement.unit(t.w_max))
        arity = t.arity if isinstance(probe, HopfElement) else t.arity + probe.arity - 1
    return TensorElement(out, t.w_max, arity)


def multiply(t: TensorElement) -> HopfElement:
    """Multiplication map on a 2-tensor: ``a (x) b -> a b``."""
    if t.arity != 2:
        raise ValueError("multiply expects a 2-tensor")
    out = HopfElement.zero(t.w_max)
    for (w, v), c in t.terms.items():
        out = out + product(HopfElement.word(w, t.w_max), HopfElement.word(v, t.w_max)).scale(c)
    return out


def counit_left(t: TensorElement) -> HopfElement:
    """``(eps (x) Id)`` on a 2-tensor."""
    return HopfElement({v: c for (w, v), c in t.terms.items() if not w}, t.w_max)


def counit_right(t: TensorElement) -> HopfElement:
    """``(Id (x) eps)`` on a 2-tensor."""
    return HopfElement({w: c for (w, v), c in t.terms.items() if not v}, t.w_max)


# ---------------------------------------------------------------- antipode

@lru_cache(maxsize=None)
def _generator_antipode(k: int, w_max: int) -> HopfElement:
    """Recursive solution of ``m (S (x) Id) Delta (g_k) = 0``."""
    g = HopfElement.generator(k, w_max)
    out = -g
    for a in range(1, k):
        out = out - product(_generator_antipode(a, w_max), HopfElement.generator(k - a, w_max))
    return out


def antipode_generator_closed(k: int, w_max: int = DEFAULT_WMAX) -> HopfElement:
    """Closed form ``S(g_k) = sum over compositions c of k of (-1)^len(c) word(c)``."""
    return HopfElement({c: (-1) ** len(c) for c in compositions(k)}, w_max)


@lru_cache(maxsize=None)
def _word_antipode(w: Word, w_max: int) -> HopfElement:
    # S(g_{w_r} ... g_{w_1}) = S(g_{w_1}) ... S(g_{w_r})
    out = HopfElement.unit(w_max)
    for k in w:
        out = out * _generator_antipode(k, w_max)
    return out


def antipode(x: HopfElement) -> HopfElement:
    out = HopfElement.zero(x.w_max)
    for w, c in x.terms.items():
        out = out + _word_antipode(w, x.w_max).scale(c)
    return out


# ---------------------------------------------------------------- Stokes series

def stokes_plus(w_max: int = DEFAULT_WMAX) -> HopfElement:
    """``1 + sum_{k <= w_max} g_k``."""
    if w_max < 1:
        raise ValueError("w_max must be at least 1")
    terms = {(): 1}
    terms.update({(k,): 1 for k in range(1, w_max + 1)})
    return HopfElement(terms, w_max)


def log_series(x: HopfElement) -> HopfElement:
    """``log x`` for ``x`` with constant term 1 (alternating series, exact in truncation)."""
    if x.constant() != 1:
        raise ValueError("log needs constant term 1")
    y = x - 1
    out = HopfElement.zero(x.w_max)
    power = HopfElement.unit(x.w_max)
    for r in range(1, x.w_max + 1):
        power = power * y
        if power.is_zero():
            break
        out = out + power.scale(Fraction((-1) ** (r - 1), r))
    return out


def exp_series(x: HopfElement) -> HopfElement:
    """``exp x`` for ``x`` without constant term."""
    if x.constant() != 0:
        raise ValueError("exp needs a vanishing constant term")
    out = HopfElement.unit(x.w_max)
    power = HopfElement.unit(x.w_max)
    for r in range(1, x.w_max + 1):
        power = power * x
        if power.is_zero():
            break
        out = out + power.scale(Fraction(1, math.factorial(r)))
    return out


def log_stokes(w_max: int = DEFAULT_WMAX) -> list[HopfElement]:
    """Weight components ``[D_1, ..., D_{w_max}]`` of ``log S+`` (pointed alien derivations)."""
    lg = log_series(stokes_plus(w_max))
    return [lg.homogeneous(k) for k in range(1, w_max + 1)]


# ---------------------------------------------------------------- Gamma representation

@dataclass(frozen=True)
class ShiftImage:
    """Image vector ``{index: coefficient}`` and whether terms left the window."""

    terms: dict[int, Fraction | GaussianRational]
    truncated: bool

    def __getitem__(self, n: int):
        return self.terms.get(n, Fraction(0))


def apply_gamma(x: HopfElement, vector: Mapping[int, object],
                window: IndexWindow) -> ShiftImage:
    """Act with ``x`` on ``sum_n v_n I_n``; a word of weight ``k`` maps ``I_n -> I_{n-k}``."""
    out: dict[int, object] = {}
    truncated = False
    for n, v in vector.items():
        for w, c in x.terms.items():
            m = n - weight(w)
            if m in window:
                _accumulate(out, m, c * _coeff(v))
            else:
                truncated = True
    return ShiftImage(dict(sorted(out.items())), truncated)


def represent_gamma(x: HopfElement, n: int, window: IndexWindow) -> ShiftImage:
    """Image of the basis vector ``I_n`` under ``x`` in the Gamma shift representation.

    The generator ``g_k`` stands for the pointed alien operator at
    ``omega = 2 pi k`` and lowers the index by ``k``.
    """
    if n not in window:
        raise ValueError(f"index {n} outside window [{window.n_min}, {window.n_max}]")
    return apply_gamma(x, {n: 1}, window)


# ---------------------------------------------------------------- axiom checks

def generators(w_max: int) -> list[HopfElement]:
    return [HopfElement.generator(k, w_max) for k in range(1, w_max + 1)]


def all_words(w_max: int) -> list[Word]:
    return [c for k in range(w_max + 1) for c in compositions(k)]


def check_coassociativity(x: HopfElement) -> bool:
    d = coproduct(x)
    return apply_slot(d, 0, coproduct) == apply_slot(d, 1, coproduct)


def check_counit(x: HopfElement) -> bool:
    d = coproduct(x)
    return counit_left(d) == x and counit_right(d) == x


def check_antipode(x: HopfElement) -> bool:
    d = coproduct(x)
    eps = HopfElement.unit(x.w_max).scale(counit(x))
    return multiply(apply_slot(d, 0, antipode)) == eps and multiply(apply_slot(d, 1, antipode)) == eps


def is_group_like(x: HopfElement) -> bool:
    return coproduct(x) == tensor(x, x)


def is_primitive(x: HopfElement) -> bool:
    one = HopfElement.unit(x.w_max)
    return coproduct(x) == tensor(x, one) + tensor(one, x)


@dataclass
class HopfSuiteResult:
    w_max: int
    checks: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def hopf_suite(w_max: int = DEFAULT_WMAX, window: IndexWindow | None = None) -> HopfSuiteResult:
    """Run every exact identity of the truncated algebra and the Gamma representation."""
    window = window or IndexWindow(-w_max, w_max)
    gens = generators(w_max)
    words = [HopfElement.word(w, w_max) for w in all_words(w_max)]
    Sp = stokes_plus(w_max)
    one = HopfElement.unit(w_max)
    dots = log_stokes(w_max)
    checks = {
        "coassociativity": all(check_coassociativity(g) for g in gens)
        and all(check_coassociativity(w) for w in words),
        "counit": all(check_counit(w) for w in words),
        "antipode": all(check_antipode(w) for w in words),
        "antipode_closed_form": all(_generator_antipode(k, w_max) == antipode_generator_closed(k, w_max)
                                    for k in range(1, w_max + 1)),
        "stokes_group_like": is_group_like(Sp),
        "stokes_inverse": antipode(Sp) * Sp == one and Sp * antipode(Sp) == one,
        "exp_log": exp_series(log_series(Sp)) == Sp,
        "log_primitive": all(is_primitive(d) for d in dots),
    }
    n_top = window.n_max
    rep_ok = True
    for k, d in enumerate(dots, start=1):
        for n in window:
            img = represent_gamma(d, n, window)
            want = {n - k: Fraction(1, k)} if (n - k) in window else {}
            rep_ok &= img.terms == want
    checks["gamma_alien_derivation"] = rep_ok
    minus = antipode(Sp)
    checks["gamma_stokes_minus"] = all(
        represent_gamma(minus, n, window).terms
        == ({n: 1, n - 1: -1} if n - 1 in window else {n: 1})
        for n in window)
    checks["gamma_stokes_plus"] = all(
        represent_gamma(Sp, n, window).terms
        == {m: 1 for m in range(max(window.n_min, n - w_max), n + 1)}
        for n in window)
    # keep deg x + deg y <= w_max so truncation of the product drops nothing
    x = gens[0] + gens[min(1, w_max - 1)].scale(2)
    y = HopfElement({w: c for w, c in antipode(Sp).terms.items() if weight(w) <= w_max - 2}, w_max)
    lhs = represent_gamma(x * y, n_top, window)
    mid = represent_gamma(y, n_top, window)
    rhs = apply_gamma(x, mid.terms, window)
    checks["gamma_homomorphism"] = lhs.terms == rhs.terms
    return HopfSuiteResult(w_max, checks)


__all__ = [
    "Word", "HopfElement", "TensorElement", "ShiftImage", "HopfSuiteResult",
    "DEFAULT_WMAX", "GAMMA_BASE_WEIGHT",
    "weight", "compositions", "product", "tensor", "coproduct", "counit", "antipode",
    "antipode_generator_closed", "apply_slot", "multiply", "counit_left", "counit_right",
    "stokes_plus", "log_series", "exp_series", "log_stokes",
    "apply_gamma", "represent_gamma",
    "check_coassociativity", "check_counit", "check_antipode", "is_group_like",
    "is_primitive", "generators", "all_words", "hopf_suite",
]
