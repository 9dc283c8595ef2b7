"""Elements of Gamma_0(N), cusps, j-factors and slash actions."""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Callable, NamedTuple, Sequence

from flint import acb

from .hp_kernel import cpow, hp


class SingularError(ZeroDivisionError):
    pass


class MissingMultiplier(KeyError):
    pass


@dataclass(frozen=True)
class GroupElement:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self} is not 1")

    @classmethod
    def parse(cls, text: str) -> "GroupElement":
        parts = [int(p) for p in text.replace(" ", "").split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected a,b,c,d, got {text!r}")
        return cls(*parts)

    def __str__(self):
        return f"{self.a},{self.b},{self.c},{self.d}"

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inverse(self) -> "GroupElement":
        return inv(self)

    def in_gamma0(self, N: int) -> bool:
        return self.c % N == 0

    @property
    def is_translation(self) -> bool:
        return self.c == 0

    def act(self, tau):
        """Moebius action on a complex ball."""
        den = self.c * tau + self.d
        if den == 0:
            raise SingularError("tau is the pole of this element")
        return (self.a * tau + self.b) / den

    def act_exact(self, z: Fraction) -> Fraction:
        return (self.a * z + self.b) / (self.c * z + self.d)

    def power(self, k: int) -> "GroupElement":
        out = IDENTITY
        base = self if k >= 0 else inv(self)
        for _ in range(abs(k)):
            out = out @ base
        return out


IDENTITY = GroupElement(1, 0, 0, 1)
T = GroupElement(1, 1, 0, 1)
S = GroupElement(0, -1, 1, 0)


def V(N: int) -> GroupElement:
    return GroupElement(1, 0, N, 1)


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    return GroupElement(g.a * h.a + g.b * h.c, g.a * h.b + g.b * h.d,
                        g.c * h.a + g.d * h.c, g.c * h.b + g.d * h.d)


def inv(g: GroupElement) -> GroupElement:
    return GroupElement(g.d, -g.b, -g.c, g.a)


@dataclass(frozen=True)
class Cusp:
    """p/q in lowest terms with q > 0, or infinity encoded as 1/0."""

    p: int
    q: int

    def __post_init__(self):
        if self.q < 0 or (self.q == 0 and self.p != 1) or gcd(self.p, self.q) != 1:
            raise ValueError(f"non-normalised cusp {self.p}/{self.q}")

    @classmethod
    def make(cls, p: int, q: int) -> "Cusp":
        if q == 0:
            if p == 0:
                raise ValueError("0/0 is not a cusp")
            return INFINITY
        g = gcd(p, q)
        p, q = p // g, q // g
        if q < 0:
            p, q = -p, -q
        return cls(p, q)

    @classmethod
    def from_fraction(cls, x: Fraction) -> "Cusp":
        return cls.make(x.numerator, x.denominator)

    @classmethod
    def parse(cls, text: str) -> "Cusp":
        text = text.strip()
        if text in ("inf", "oo", "infinity"):
            return INFINITY
        return cls.from_fraction(Fraction(text))

    @property
    def is_infinity(self) -> bool:
        return self.q == 0

    @property
    def value(self) -> Fraction:
        if self.is_infinity:
            raise ValueError("the cusp at infinity has no finite value")
        return Fraction(self.p, self.q)

    def __str__(self):
        if self.is_infinity:
            return "inf"
        return f"{self.p}/{self.q}" if self.q != 1 else f"{self.p}"

    def moebius(self, g: GroupElement) -> "Cusp":
        """g applied to this cusp."""
        if self.is_infinity:
            return Cusp.make(g.a, g.c)
        return Cusp.make(g.a * self.p + g.b * self.q, g.c * self.p + g.d * self.q)


INFINITY = Cusp(1, 0)


def cusp_image(g: GroupElement) -> Cusp:
    """g^{-1} applied to i*infinity, i.e. -d/c."""
    if g.c == 0:
        return INFINITY
    return Cusp.make(-g.d, g.c)


def jfactor(g: GroupElement, tau):
    val = g.c * tau + g.d
    if val == 0:
        raise SingularError("j-factor vanishes at tau = -d/c")
    return val


def slash(F: Callable, weights: Sequence, multipliers: Sequence, g: GroupElement) -> Callable:
    """Diagonal weight (2-k_1, ..., 2-k_n) slash action.

    ``multipliers`` holds, per form, either a number chi_j(g) or a mapping /
    callable from group elements to chi_j.  Returns a new callable in tau.
    """
    chi = acb(1)
    for m in multipliers:
        chi *= _lookup(m, g)
    expo = sum(Fraction(k) - 2 for k in weights)

    def G(tau):
        return cpow(jfactor(g, tau), expo) * F(g.act(tau)) / chi

    return G


def _lookup(m, g):
    if callable(m):
        return acb(m(g))
    if isinstance(m, dict):
        if g not in m:
            raise MissingMultiplier(f"no multiplier for {g}; run infer_multiplier first")
        return acb(m[g])
    return acb(m)


_GENS = ("T", "t", "V", "v")


def _gen(name: str, N: int) -> GroupElement:
    return {"T": T, "t": inv(T), "V": V(N), "v": inv(V(N))}[name]


def random_word_letters(N: int, max_len: int, seed: int) -> str:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    rng = random.Random(seed)
    n = rng.randint(1, max_len)
    word = ""
    while len(word) < n:
        ch = rng.choice(_GENS)
        if word and word[-1] == ch.swapcase():
            continue
        word += ch
    return word


def word_element(word: str, N: int) -> GroupElement:
    out = IDENTITY
    for ch in word:
        out = out @ _gen(ch, N)
    return out


def random_word(N: int, max_len: int, seed: int) -> GroupElement:
    """Reduced word in T^{+-1}, V^{+-1} with V = [[1,0],[N,1]]; deterministic in seed."""
    return word_element(random_word_letters(N, max_len, seed), N)


def random_pairs(N: int, count: int, max_len: int, seed: int, nontrivial: bool = True):
    """Deterministic list of (g1, g2) pairs; by default avoids c = 0 elements."""
    out = []
    k = 0
    while len(out) < count:
        g1 = random_word(N, max_len, seed * 100003 + 2 * k)
        g2 = random_word(N, max_len, seed * 100003 + 2 * k + 1)
        k += 1
        if nontrivial and (g1.c == 0 or g2.c == 0 or (g1 @ g2).c == 0):
            continue
        out.append((g1, g2))
    return out


class TauPoint(NamedTuple):
    """Exact complex point; converted to a ball at whatever precision is active."""

    re: Fraction
    im: Fraction

    def __str__(self):
        def f(x):
            return str(x.numerator) if x.denominator == 1 else format(float(x), ".15g")
        sign = "-" if self.im < 0 else "+"
        return f"{f(self.re)}{sign}{f(abs(self.im))}i"


_TAU_RE = re.compile(r"^([+-]?[0-9.]+(?:/[0-9]+)?)?(?:([+-])([0-9.]+(?:/[0-9]+)?)?i)?$")


def tau_point(text: str) -> TauPoint:
    """Parse '-0.2-1.1i' style literals exactly."""
    t = text.replace(" ", "").replace("j", "i")
    m = _TAU_RE.match(t)
    if not t or m is None:
        raise ValueError(f"cannot parse complex literal {text!r}")
    re_s, sign, im_s = m.groups()
    re_v = Fraction(re_s) if re_s else Fraction(0)
    if sign is None:
        im_v = Fraction(0)
    else:
        im_v = Fraction(im_s) if im_s else Fraction(1)
        if sign == "-":
            im_v = -im_v
    return TauPoint(re_v, im_v)
