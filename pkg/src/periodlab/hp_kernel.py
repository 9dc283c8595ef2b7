"""Arbitrary-precision scalar kernel.

Scalars are Arb complex balls (``flint.acb``).  Precision in python-flint is a
process-wide setting, so every public entry point that cares about accuracy
runs inside :func:`workdps`, which restores the previous value on exit.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from flint import acb, arb, ctx

HPComplex = acb

GUARD_DIGITS = 10


class DomainError(ValueError):
    pass


@contextlib.contextmanager
def workdps(digits: int):
    """Temporarily set the working precision (decimal digits)."""
    old = ctx.prec
    ctx.dps = max(int(digits), 15)
    try:
        yield
    finally:
        ctx.prec = old


@dataclass(frozen=True)
class PrecisionBudget:
    """Accuracy knobs shared by every numerical routine.

    ``digits`` is what the caller asks for; internal work runs at
    ``digits + guard``.  ``quad_level`` selects the number of nodes per
    ray quadrature (grid step 2**-level).
    """

    digits: int = 30
    quad_level: int | None = None
    series_tail_target: float | None = None
    guard: int = GUARD_DIGITS

    def __post_init__(self):
        if self.digits < 15:
            raise ValueError("digits must be at least 15")
        if self.quad_level is not None and self.quad_level < 1:
            raise ValueError("quad_level must be positive")
        tgt = self.tail
        if not (0 < tgt <= 10.0 ** (-self.digits + 5)):
            raise ValueError("series_tail_target must lie in (0, 10^(5-digits)]")

    @property
    def tail(self) -> float:
        if self.series_tail_target is None:
            return 10.0 ** (-self.digits - self.guard)
        return self.series_tail_target

    @property
    def working_dps(self) -> int:
        return self.digits + self.guard

    @property
    def level(self) -> int:
        if self.quad_level is not None:
            return self.quad_level
        return default_level(self.working_dps)

    def with_digits(self, digits: int) -> "PrecisionBudget":
        return PrecisionBudget(digits, self.quad_level, None, self.guard)

    def refined(self) -> "PrecisionBudget":
        return PrecisionBudget(self.digits, self.level + 1, self.series_tail_target, self.guard)


def default_level(dps: int) -> int:
    # quadrature level for the standalone double-exponential rule
    if dps <= 30:
        return 2
    if dps <= 60:
        return 3
    return 4


def hp(x, y=0) -> acb:
    """Build a ball from ints, Fractions, floats or strings."""
    return acb(_real(x), _real(y))


def as_hp(z) -> acb:
    """Ball for z at the current precision.

    Exact inputs (pairs of Fractions or ints, decimal strings) are rounded
    only now, so a point parsed early keeps full accuracy later.
    """
    if isinstance(z, acb):
        return z
    if isinstance(z, tuple) and len(z) == 2:
        return hp(z[0], z[1])
    if isinstance(z, complex):
        return acb(z.real, z.imag)
    return hp(z)


def _real(x):
    if isinstance(x, Fraction):
        return arb(x.numerator) / x.denominator
    if isinstance(x, str):
        return arb(x)
    if isinstance(x, arb):
        return x
    return arb(x)


def cpow(z, s) -> acb:
    """Principal-branch power exp(s Log z), -pi < Arg z <= pi."""
    z = acb(z)
    if isinstance(s, Fraction):
        if s.denominator == 1:
            s = int(s)
        else:
            s = hp(s)
    if isinstance(s, int):
        if z == 0:
            if s <= 0:
                raise DomainError("0 raised to a nonpositive power")
            return acb(0)
        return z ** s
    s = acb(s)
    if z == 0:
        if s.real <= 0:
            raise DomainError("0 raised to a power with nonpositive real part")
        return acb(0)
    # arb's pow uses the principal log; on the negative real axis Arg = pi
    if z.imag == 0 and z.real < 0:
        return (s * (acb(-z.real).log() + acb(0, 1) * arb.pi())).exp()
    return (s * z.log()).exp()


def gamma_int(n: int) -> acb:
    if n <= 0:
        raise DomainError("gamma_int only handles positive integers")
    return acb(math.factorial(n - 1))


def a_coefficient(ns, ms) -> int:
    """Product of binomials moving (w_j - tau) kernels to (w_j - w_{j-1}).

    With r = len(ns) the j-th factor (counting down from r) is
    C(m_r + ... + m_j - n_r - ... - n_{j+1}, n_j).
    """
    ns, ms = list(ns), list(ms)
    if len(ns) != len(ms):
        raise ValueError("length mismatch between n and m vectors")
    if any(n < 0 for n in ns):
        raise ValueError("negative index")
    out = 1
    top = 0
    for j in range(len(ns) - 1, -1, -1):
        top += ms[j]
        if top < 0:
            raise ValueError("negative upper index")
        if ns[j] > top:
            return 0
        out *= math.comb(top, ns[j])
        top -= ns[j]
    return out


@lru_cache(maxsize=16)
def _de_nodes(level: int, dps: int):
    # t = exp(x - exp(-x)), dt = t (1 + exp(-x)) dx, x on a uniform grid
    with workdps(dps):
        h = arb(2) ** (-level)
        eps = arb(10) ** (-dps)
        out = []
        k = 0
        while True:
            done = 0
            for x in ((k * h,) if k == 0 else (k * h, -k * h)):
                ex = (-x).exp()
                t = (x - ex).exp()
                w = h * t * (1 + ex)
                if x > 0 and (w * (-t).exp() < eps and t > 4 * dps):
                    done += 1
                    continue
                if x < 0 and w < eps:
                    done += 1
                    continue
                out.append((t, w))
            if k > 0 and done == 2:
                break
            k += 1
        out.sort(key=lambda p: float(p[0].mid()))
        return tuple(out)


def quad_nodes(level: int, dps: int | None = None):
    """Double-exponential nodes for integrals over (0, inf).

    The weights assume the integrand decays at least like exp(-t).  Node
    count roughly doubles with each level.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    if dps is None:
        dps = ctx.dps
    return list(_de_nodes(level, dps))


def de_integrate(g, level: int, dps: int | None = None) -> acb:
    s = acb(0)
    for t, w in quad_nodes(level, dps):
        s += w * g(t)
    return s


def to_float_str(x: arb, digits: int) -> str:
    """Deterministic decimal rendering of the midpoint."""
    return x.mid().str(digits, radius=False)
