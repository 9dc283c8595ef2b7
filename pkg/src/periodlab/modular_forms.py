"""Cusp forms as truncated q-expansions, and their evaluation on H.

A :class:`QExpansion` is exact data: rational exponents and rational (or
decimal) coefficients.  A :class:`Form` adds an evaluation strategy.  Forms
that transform under all of SL2(Z) with some multiplier (Delta, eta^3) are
evaluated anywhere in H by reducing to the standard fundamental domain, which
keeps the number of q-terms bounded near cusps.  Other forms fall back to the
plain q-series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Callable, Sequence

from flint import acb, acb_poly, arb, ctx, fmpz_poly

from .congruence_group import IDENTITY, S, T, GroupElement, jfactor
from .hp_kernel import DomainError, PrecisionBudget, as_hp, cpow, hp, workdps


class InsufficientCoefficients(RuntimeError):
    def __init__(self, required: Fraction, msg: str = ""):
        self.required = required
        super().__init__(msg or f"need coefficients up to exponent {float(required):.4g}")


class NotModular(RuntimeError):
    pass


class QExpParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


Coeff = tuple  # (Fraction re, Fraction im)


@dataclass(frozen=True)
class QExpansion:
    """Finite q-expansion sum c(nu) q^nu with exact exponents.

    ``complete_to`` is the exponent up to which every nonzero term is stored;
    beyond it only ``coefficient_bound`` (C, alpha) with |c(nu)| <= C nu^alpha
    is known.
    """

    weight: Fraction
    level: int
    terms: tuple
    multiplier_mode: str = "trivial"
    coefficient_bound: tuple = (1.0, 0.0)
    complete_to: Fraction | None = None
    name: str = "f"

    def __post_init__(self):
        prev = None
        for nu, _ in self.terms:
            if nu <= 0:
                raise ValueError(f"nonpositive exponent {nu} in a cusp form")
            if prev is not None and nu <= prev:
                raise ValueError("exponents must be strictly increasing")
            prev = nu
        if self.multiplier_mode not in ("trivial", "inferred"):
            raise ValueError("multiplier_mode is 'trivial' or 'inferred'")
        if self.complete_to is None:
            object.__setattr__(self, "complete_to", self.terms[-1][0] if self.terms else Fraction(10**9))
        C, al = self.coefficient_bound
        for nu, c in self.terms:
            if _cabs(c) > C * float(nu) ** al * (1 + 1e-12):
                raise ValueError(f"coefficient at {nu} violates the declared bound")

    @property
    def is_zero(self) -> bool:
        return len(self.terms) == 0

    @property
    def denominator(self) -> int:
        d = self.__dict__.get("_den")
        if d is None:
            d = reduce(lambda a, b: a * b // math.gcd(a, b), (nu.denominator for nu, _ in self.terms), 1)
            object.__setattr__(self, "_den", d)
        return d

    @property
    def min_exponent(self) -> Fraction:
        return self.terms[0][0] if self.terms else Fraction(1)

    def coefficient(self, nu) -> acb:
        nu = Fraction(nu)
        for e, c in self.terms:
            if e == nu:
                return _to_acb(c)
        return acb(0)

    def scaled(self, lam) -> "QExpansion":
        lam = _as_coeff(lam)
        terms = tuple((nu, _cmul(c, lam)) for nu, c in self.terms)
        C, al = self.coefficient_bound
        return QExpansion(self.weight, self.level, terms, self.multiplier_mode,
                          (C * max(_cabs(lam), 1e-300), al), self.complete_to, self.name)

    def truncated(self, n_max) -> "QExpansion":
        n_max = Fraction(n_max)
        terms = tuple(t for t in self.terms if t[0] <= n_max)
        return QExpansion(self.weight, self.level, terms, self.multiplier_mode,
                          self.coefficient_bound, min(n_max, self.complete_to), self.name)


def _as_coeff(x) -> Coeff:
    if isinstance(x, tuple):
        return (Fraction(x[0]), Fraction(x[1]))
    if isinstance(x, complex):
        return (Fraction(x.real), Fraction(x.imag))
    return (Fraction(x), Fraction(0))


def _cmul(a: Coeff, b: Coeff) -> Coeff:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cabs(c: Coeff) -> float:
    return math.hypot(float(c[0]), float(c[1]))


def _to_acb(c: Coeff) -> acb:
    return hp(c[0], c[1])


# ---------------------------------------------------------------- builders

def _pentagonal(n_max: int) -> fmpz_poly:
    coeffs = [0] * (n_max + 1)
    k = 0
    while True:
        done = True
        for kk in ((k,) if k == 0 else (k, -k)):
            e = kk * (3 * kk - 1) // 2
            if e <= n_max:
                coeffs[e] += -1 if kk % 2 else 1
                done = False
        if done and k > 0:
            break
        k += 1
    return fmpz_poly(coeffs)


def delta_coefficients(n_max: int) -> list[int]:
    """tau(1..n_max) from the 24th power of Euler's pentagonal series."""
    p = _pentagonal(n_max).pow_trunc(24, n_max)
    c = [int(x) for x in p.coeffs()] + [0] * n_max
    return c[:n_max]


def delta_qexp(n_max: int, prec=None) -> QExpansion:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    cs = delta_coefficients(n_max)
    terms = tuple((Fraction(n + 1), (Fraction(c), Fraction(0))) for n, c in enumerate(cs) if c)
    # |tau(n)| <= d(n) n^{11/2} <= 2 n^6; calibrate against the stored range too
    C = max(2.0, 2 * max(abs(c) / (n + 1) ** 6 for n, c in enumerate(cs)))
    return QExpansion(Fraction(12), 1, terms, "trivial", (C, 6.0), Fraction(n_max), "delta")


def theta_unary(j: int, N: int, n_max, prec=None) -> QExpansion:
    """(1/2N) sum_{n = j mod 2N} n q^{n^2/4N}, all terms with n^2/4N <= n_max."""
    if not (1 <= j <= N - 1):
        raise ValueError(f"need 1 <= j <= N-1, got j={j}, N={N}")
    n_max = Fraction(n_max)
    bound = math.isqrt(int(4 * N * n_max)) + 2
    acc: dict[Fraction, Fraction] = {}
    for n in range(-bound, bound + 1):
        if (n - j) % (2 * N) == 0 and n != 0:
            nu = Fraction(n * n, 4 * N)
            if nu <= n_max:
                acc[nu] = acc.get(nu, Fraction(0)) + Fraction(n, 2 * N)
    terms = tuple((nu, (c, Fraction(0))) for nu, c in sorted(acc.items()) if c)
    # |n|/2N = sqrt(nu/N), so C = 1/sqrt(N), alpha = 1/2
    return QExpansion(Fraction(3, 2), 4 * N, terms, "inferred", (1.0 / math.sqrt(N) + 1e-12, 0.5),
                      n_max, f"theta:{j}:{N}")


def zero_form(weight=12, level=1) -> QExpansion:
    return QExpansion(Fraction(weight), level, (), "trivial", (0.0, 0.0), Fraction(10**9), "zero")


# ---------------------------------------------------------------- file I/O

def load_qexp(path) -> QExpansion:
    text = Path(path).read_text(encoding="utf-8")
    return parse_qexp(text, name=f"file:{path}")


def parse_qexp(text: str, name: str = "file") -> QExpansion:
    header = None
    terms: list = []
    seen = set()
    mode = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if header is None:
            if len(toks) < 4 or toks[0] != "weight" or toks[2] != "level":
                raise QExpParseError(lineno, "expected header 'weight <k> level <N>'")
            try:
                header = (Fraction(toks[1]), int(toks[3]))
            except (ValueError, ZeroDivisionError) as exc:
                raise QExpParseError(lineno, f"bad header value: {exc}") from None
            if len(toks) >= 6 and toks[4] == "multiplier":
                mode = toks[5]
            continue
        if len(toks) not in (2, 3):
            raise QExpParseError(lineno, "expected '<exponent> <re> [<im>]'")
        try:
            nu = Fraction(toks[0])
            re = Fraction(toks[1])
            im = Fraction(toks[2]) if len(toks) == 3 else Fraction(0)
        except (ValueError, ZeroDivisionError) as exc:
            raise QExpParseError(lineno, str(exc)) from None
        if nu <= 0:
            raise QExpParseError(lineno, f"nonpositive exponent {toks[0]}")
        if nu in seen:
            raise QExpParseError(lineno, f"duplicate exponent {toks[0]}")
        seen.add(nu)
        terms.append((nu, (re, im)))
    if header is None:
        raise QExpParseError(1, "missing header")
    if not terms:
        raise QExpParseError(lineno if text else 1, "no terms")
    terms.sort(key=lambda t: t[0])
    k, N = header
    if mode is None:
        mode = "trivial" if k.denominator == 1 else "inferred"
    # calibrated bound with alpha = k/2 (Hecke-type growth), factor 2 margin
    al = float(k) / 2
    C = 2 * max(_cabs(c) / float(nu) ** al for nu, c in terms)
    return QExpansion(k, N, tuple(terms), mode, (C, al), terms[-1][0], name)


def save_qexp(f: QExpansion, path) -> None:
    lines = [f"weight {f.weight} level {f.level} multiplier {f.multiplier_mode}"]
    for nu, (re, im) in f.terms:
        lines.append(f"{nu} {re}" + (f" {im}" if im else ""))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- evaluation

def log_tail_bound(f: QExpansion, y, start: Fraction) -> float:
    """log of a bound for sum_{nu >= start} C nu^alpha e^{-2 pi nu y} over nu in (1/D)Z."""
    C, al = f.coefficient_bound
    if C == 0:
        return -math.inf
    D = f.denominator
    n0 = max(int(math.ceil(start * D)), 1)
    y = float(y)
    rho = math.exp(-2 * math.pi * y / D)
    q = (1 + 1 / n0) ** al * rho
    if q >= 1:
        return math.inf
    return math.log(C) + al * math.log(n0 / D) - 2 * math.pi * y * n0 / D - math.log1p(-q)


def tail_bound(f: QExpansion, y, start: Fraction) -> float:
    lt = log_tail_bound(f, y, start)
    return math.exp(lt) if lt > -745 else 0.0


def _needed_exponent(f: QExpansion, y: float, log_target: float) -> Fraction:
    """Smallest lattice exponent beyond which the tail falls below exp(log_target)."""
    D = f.denominator
    C, al = f.coefficient_bound
    if C == 0:
        return Fraction(0)
    guess = max(1, int(D * ((math.log(C) - log_target) / (2 * math.pi * y))) - 2 * D)
    n = guess
    while log_tail_bound(f, y, Fraction(n, D)) > log_target:
        n = int(n * 1.05) + 1
    while n > 1 and log_tail_bound(f, y, Fraction(n - 1, D)) <= log_target:
        n -= 1
    return Fraction(n, D)


def eval_qexp(f: QExpansion, tau, budget: PrecisionBudget | None = None):
    """Sum of all stored terms at tau; returns (value, tail bound).

    The tail covers the unknown terms beyond ``complete_to``.
    """
    budget = budget or PrecisionBudget(ctx.dps if ctx.dps >= 15 else 15)
    tau = as_hp(tau)
    if not tau.imag > 0:
        raise DomainError("eval needs Im tau > 0")
    if f.is_zero:
        return acb(0), 0.0
    y = float(tau.imag.mid())
    D = f.denominator
    tail = tail_bound(f, y, f.complete_to + Fraction(1, D))
    if tail > budget.tail:
        need = _needed_exponent(f, y, math.log(budget.tail))
        raise InsufficientCoefficients(need, f"{f.name}: tail {tail:.3g} exceeds target at Im tau={y:.4g}; "
                                             f"need terms up to exponent {float(need):.6g}")
    return _horner(f, tau, len(f.terms)), tail


_POLY_CACHE: dict = {}
_BLOCK = 32


def _poly(f: QExpansion, nterms: int):
    """Coefficient blocks of length _BLOCK, lowest block first.

    A single long acb_poly loses most of its accuracy when |q| is close to
    1, while short blocks combined by Horner in q^_BLOCK stay stable.
    """
    key = (id(f), nterms, ctx.prec)
    hit = _POLY_CACHE.get(key)
    if hit is not None:
        return hit[0]
    D = f.denominator
    coeffs = [acb(0)] * (int(f.terms[nterms - 1][0] * D) + 1)
    for nu, c in f.terms[:nterms]:
        coeffs[int(nu * D)] = _to_acb(c)
    blocks = [acb_poly(coeffs[i:i + _BLOCK]) for i in range(0, len(coeffs), _BLOCK)]
    if len(_POLY_CACHE) > 256:
        _POLY_CACHE.clear()
    _POLY_CACHE[key] = (blocks, f)
    return blocks


def _horner(f: QExpansion, tau, nterms: int) -> acb:
    if nterms == 0:
        return acb(0)
    D = f.denominator
    Q = (2 * acb.pi() * acb(0, 1) * tau / D).exp()
    top = int(f.terms[nterms - 1][0] * D)
    if top + 1 > 4 * nterms:
        # sparse (theta-type) series: sum the terms directly
        out, power, at = acb(0), acb(1), 0
        for nu, c in f.terms[:nterms]:
            m = int(nu * D)
            power = power * Q ** (m - at)
            at = m
            out += _to_acb(c) * power
        return out
    blocks = _poly(f, nterms)
    QB = Q ** _BLOCK
    out = acb(0)
    for b in reversed(blocks):
        out = out * QB + b(Q)
    return out


def _nterms_for(f: QExpansion, y: float, log_target: float) -> int:
    need = _needed_exponent(f, y, log_target)
    if need > f.complete_to + Fraction(1, f.denominator):
        raise InsufficientCoefficients(need, f"{f.name}: need terms up to exponent {float(need):.6g} "
                                             f"(stored to {float(f.complete_to):.6g})")
    lo, hi = 0, len(f.terms)
    while lo < hi:
        mid = (lo + hi) // 2
        if f.terms[mid][0] < need:
            lo = mid + 1
        else:
            hi = mid
    return lo


@dataclass
class MultiplierTable:
    """Cache of chi(gamma) values with a consistency tolerance."""

    tol: float
    entries: dict = field(default_factory=dict)

    def get(self, g: GroupElement):
        return self.entries.get(g)

    def put(self, g: GroupElement, chi: acb):
        if abs(float(abs(chi).mid()) - 1) > self.tol:
            raise NotModular(f"|chi({g})| = {float(abs(chi).mid())} is not 1")
        self.entries.setdefault(g, chi)
        return self.entries[g]

    def snapshot(self) -> dict:
        return dict(self.entries)


def _sample_taus(g: GroupElement):
    if g.c == 0:
        return [hp("0.1", "1.1"), hp("-0.23", "0.95"), hp("0.37", "1.3")]
    base = Fraction(-g.d, g.c)
    s = Fraction(1, abs(g.c))
    pts = [(Fraction(1, 10), Fraction(1)), (Fraction(-1, 5), Fraction(9, 10)), (Fraction(1, 3), Fraction(6, 5))]
    return [hp(base + s * dx, s * dy) for dx, dy in pts]


class Form:
    """A q-expansion plus the machinery to evaluate it anywhere in H."""

    def __init__(self, qexp: QExpansion, extend: Callable[[Fraction], QExpansion] | None = None,
                 label: str | None = None):
        self.qexp = qexp
        self._extend = extend
        self.label = label or qexp.name
        self.weight = qexp.weight
        self.level = qexp.level
        self._chi_T = None
        self._chi_S = None
        self._reduce: bool | None = None
        self.multipliers = MultiplierTable(tol=1e-6)
        self._cache: dict = {}

    def __repr__(self):
        return f"Form({self.label})"

    @property
    def is_zero(self) -> bool:
        return self.qexp.is_zero

    @property
    def trivial(self) -> bool:
        return self.qexp.multiplier_mode == "trivial"

    # -- raw q-series --------------------------------------------------
    def series(self, tau, target: float | None = None) -> acb:
        if self.is_zero:
            return acb(0)
        tau = as_hp(tau)
        y = float(tau.imag.mid())
        if y <= 0:
            raise DomainError("q-series needs Im tau > 0")
        if target is None:
            # relative to the size of the leading term
            nu0 = float(self.qexp.min_exponent)
            log_target = -(ctx.dps + 5) * math.log(10) - 2 * math.pi * nu0 * y
        else:
            log_target = math.log(target)
        while True:
            try:
                n = _nterms_for(self.qexp, y, log_target)
                break
            except InsufficientCoefficients as exc:
                if self._extend is None:
                    raise
                self.qexp = self._extend(max(exc.required * Fraction(3, 2), self.qexp.complete_to * 2))
        return _horner(self.qexp, tau, n)

    # -- multiplier handling ------------------------------------------
    def _setup(self):
        if self._reduce is not None:
            return
        with workdps(max(ctx.dps, 30)):
            tol = 10.0 ** (-ctx.dps / 2)
            if self.is_zero:
                self._chi_T = self._chi_S = acb(1)
                self._reduce = True
            elif self.trivial and self.level == 1:
                self._chi_T = self._chi_S = acb(1)
                self._reduce = True
            else:
                try:
                    self._chi_T = self._infer_direct(T, tol)
                    self._chi_S = self._infer_direct(S, tol)
                    self._reduce = True
                except NotModular:
                    self._reduce = False

    def _infer_direct(self, g: GroupElement, tol: float) -> acb:
        taus = [hp("0.05", "1.02"), hp("-0.21", "0.99"), hp("0.17", "1.11")]
        vals = [self.series(g.act(t)) / (cpow(jfactor(g, t), self.weight) * self.series(t)) for t in taus]
        return _agree(vals, tol, g)

    @property
    def reducible(self) -> bool:
        self._setup()
        return bool(self._reduce)

    def chi(self, g: GroupElement) -> acb:
        """chi(g) with f(g tau) = chi(g) j(g,tau)^k f(tau)."""
        if self.trivial or self.is_zero:
            return acb(1)
        hit = self.multipliers.get(g)
        if hit is not None and hit.rel_accuracy_bits() >= ctx.prec - 40:
            return hit
        val = infer_multiplier(self, g)
        self.multipliers.entries[g] = val
        return val

    # -- evaluation ----------------------------------------------------
    def __call__(self, tau) -> acb:
        if self.is_zero:
            return acb(0)
        self._setup()
        if not self._reduce:
            return self.series(tau)
        return self._reduced(as_hp(tau))

    def _reduced(self, z: acb) -> acb:
        factor = acb(1)
        k = self.weight
        for _ in range(10000):
            n = math.floor(float(z.real.mid()) + 0.5)
            if n:
                z = z - n
                if not self.trivial:
                    factor *= self._chi_T ** n
            if float(abs(z).mid()) < 0.9999:
                factor /= cpow(z, k) * (self._chi_S if not self.trivial else 1)
                z = -1 / z
            else:
                break
        return factor * self.series(z)


def _agree(vals, tol, g):
    mean = sum(vals, acb(0)) / len(vals)
    for v in vals:
        if float(abs(v - mean).mid()) > tol:
            raise NotModular(f"multiplier samples for {g} disagree")
    if abs(float(abs(mean).mid()) - 1) > tol:
        raise NotModular(f"|chi({g})| differs from 1")
    return mean


def infer_multiplier(f: Form, g: GroupElement, taus: Sequence | None = None,
                     budget: PrecisionBudget | None = None) -> acb:
    """chi(g) = f(g tau) j(g, tau)^{-k} / f(tau), averaged over sample points."""
    if g == IDENTITY:
        return acb(1)
    taus = list(taus) if taus is not None else _sample_taus(g)
    tol = 10.0 ** (-(budget.digits if budget else ctx.dps) / 2)
    vals = [f(g.act(t)) / (cpow(jfactor(g, t), f.weight) * f(t)) for t in taus]
    chi = _agree(vals, tol, g)
    f.multipliers.put(g, chi)
    return chi


def make_delta(n_max: int = 400) -> Form:
    return Form(delta_qexp(n_max), extend=lambda n: delta_qexp(int(n) + 1), label="delta")


def make_theta(j: int, N: int, n_max=200) -> Form:
    return Form(theta_unary(j, N, n_max), extend=lambda n: theta_unary(j, N, n), label=f"theta:{j}:{N}")


def make_zero(weight=12) -> Form:
    return Form(zero_form(weight), label="zero")


def parse_form(spec: str, n_max: int | None = None) -> Form:
    """Mini-grammar: delta | zero | theta:<j>:<N> | file:<path>."""
    spec = spec.strip()
    if spec == "delta":
        return make_delta(n_max or 400)
    if spec == "zero":
        return make_zero()
    if spec.startswith("theta:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad theta spec {spec!r}")
        return make_theta(int(parts[1]), int(parts[2]), n_max or 200)
    if spec.startswith("file:"):
        q = load_qexp(spec[5:])
        return Form(q, label=spec)
    raise ValueError(f"unknown form spec {spec!r}")
