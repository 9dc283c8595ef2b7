"""Group cochains with values in polynomials or in functions on H^-.

The group acts on the right: x | g.  For a module of weight exponent e
(e = sum of k_j - 2 over the forms involved) the action is

    (x | g)(tau) = chi(g)^{-1} j(g, tau)^e x(g tau).

Cochains are plain callables on tuples of group elements with memoisation.
Products of module elements are pointwise, which is how tensor products of
period functions are identified with functions.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from flint import acb, acb_poly, ctx, fmpq_poly

from .congruence_group import IDENTITY, GroupElement, cusp_image, jfactor
from .hp_kernel import PrecisionBudget, as_hp, cpow, hp, workdps
from .iterated_integrals import lambda_many, period_polynomial, rstar_many
from .report import IdentityReport, sup

__all__ = ["Weight", "PolynomialModule", "FunctionModule", "FnElem", "Cochain", "PeriodFamily",
           "bar_differential", "cup", "compositions", "sigma_partition", "depth_cocycle_residual",
           "lincomb_report", "z1_depth_checker", "coboundary", "default_taus", "IdentityReport"]


# ------------------------------------------------------------------ weights and modules

@dataclass(frozen=True)
class Weight:
    """Exponent sum(k_j - 2) together with the forms whose multipliers enter."""

    exponent: Fraction
    forms: tuple = ()

    @classmethod
    def of(cls, forms) -> "Weight":
        return cls(sum((Fraction(f.weight) - 2 for f in forms), Fraction(0)), tuple(forms))

    def __mul__(self, other: "Weight") -> "Weight":
        return Weight(self.exponent + other.exponent, self.forms + other.forms)

    def chi(self, g: GroupElement):
        out = None
        for f in self.forms:
            if getattr(f, "trivial", False) or f.is_zero:
                continue
            c = f.chi(g)
            out = c if out is None else out * c
        return out


def _poly_slash(p, g: GroupElement, e: int, kind):
    """sum_n p_n (a x + b)^n (c x + d)^(e - n)."""
    cs = p.coeffs()
    if len(cs) - 1 > e:
        raise ValueError(f"degree {len(cs) - 1} exceeds the weight exponent {e}")
    num = kind([g.b, g.a])
    den = kind([g.d, g.c])
    out = kind([])
    nump = kind([1])
    dpows = [kind([1])]
    for _ in range(e):
        dpows.append(dpows[-1] * den)
    for n, c in enumerate(cs):
        if c != 0:
            out += c * nump * dpows[e - n]
        nump = nump * num
    return out


class PolynomialModule:
    """Polynomials in tau; ``exact`` switches acb_poly for fmpq_poly.

    ``dps`` is a floor for the precision used by the action, so elements
    built inside a high-precision block keep their accuracy when combined
    later.
    """

    kind = "polynomial"

    def __init__(self, exact: bool = False, dps: int = 0):
        self.exact = exact
        self.dps = dps
        self.poly = fmpq_poly if exact else acb_poly

    def zero(self):
        return self.poly([])

    def one(self):
        return self.poly([1])

    def _prec(self):
        return workdps(max(ctx.dps, self.dps))

    def add(self, x, y):
        with self._prec():
            return x + y

    def sub(self, x, y):
        with self._prec():
            return x - y

    def neg(self, x):
        return -x

    def mul(self, x, y):
        with self._prec():
            return x * y

    def scale(self, c, x):
        with self._prec():
            return x * c

    def act(self, x, g: GroupElement, w: Weight):
        if g == IDENTITY:
            return x
        e = w.exponent
        if e.denominator != 1:
            raise ValueError("polynomial modules need integral weight exponents")
        with self._prec():
            out = _poly_slash(x, g, int(e), self.poly)
            chi = w.chi(g)
            if chi is not None:
                if self.exact:
                    raise ValueError("exact polynomial modules cannot carry multipliers")
                out = out * (1 / chi)
        return out

    def flatten(self, x) -> list:
        return list(x.coeffs())


class FnElem:
    """Function on H^- evaluated lazily on lists of points, with memoisation."""

    __slots__ = ("_fn", "_memo")

    def __init__(self, fn: Callable[[list], list]):
        self._fn = fn
        self._memo: dict = {}

    def eval(self, taus: Sequence) -> list:
        key = tuple((t.real.mid().str(40), t.imag.mid().str(40)) for t in taus)
        hit = self._memo.get(key)
        if hit is None:
            hit = list(self._fn(list(taus)))
            self._memo[key] = hit
        return hit

    @classmethod
    def const(cls, c) -> "FnElem":
        return cls(lambda ts: [acb(c)] * len(ts))


def default_taus(count: int = 7, radius: Fraction = Fraction(13, 10)):
    """``count`` points on |tau| = radius with Im tau between -1.2 and -0.4."""
    r = float(radius)
    lo, hi = math.asin(0.4 / r), math.asin(1.2 / r)
    out = []
    for i in range(count):
        th = lo + (hi - lo) * i / max(count - 1, 1)
        # alternate sides of the imaginary axis for a spread of real parts
        x = r * math.cos(th) * (1 if i % 2 else -1)
        y = -r * math.sin(th)
        out.append((Fraction(x).limit_denominator(10 ** 12), Fraction(y).limit_denominator(10 ** 12)))
    return out


class FunctionModule:
    """Functions on H^- compared through their values at fixed sample points."""

    kind = "samples"

    def __init__(self, taus=None, dps: int = 0):
        self.taus = list(taus) if taus is not None else default_taus()
        self.dps = dps

    def zero(self):
        return FnElem.const(0)

    def one(self):
        return FnElem.const(1)

    def add(self, x, y):
        return FnElem(lambda ts: [a + b for a, b in zip(x.eval(ts), y.eval(ts))])

    def sub(self, x, y):
        return FnElem(lambda ts: [a - b for a, b in zip(x.eval(ts), y.eval(ts))])

    def neg(self, x):
        return FnElem(lambda ts: [-a for a in x.eval(ts)])

    def mul(self, x, y):
        return FnElem(lambda ts: [a * b for a, b in zip(x.eval(ts), y.eval(ts))])

    def scale(self, c, x):
        return FnElem(lambda ts: [a * c for a in x.eval(ts)])

    def act(self, x, g: GroupElement, w: Weight):
        if g == IDENTITY:
            return x

        def fn(ts):
            moved = x.eval([g.act(t) for t in ts])
            chi = w.chi(g)
            out = []
            for t, v in zip(ts, moved):
                val = cpow(jfactor(g, t), w.exponent) * v
                out.append(val / chi if chi is not None else val)
            return out

        return FnElem(fn)

    def points(self) -> list:
        return [as_hp(t) for t in self.taus]

    def flatten(self, x) -> list:
        # evaluation is lazy, so precision is fixed here rather than when
        # the element was built
        with workdps(max(ctx.dps, self.dps)):
            return x.eval(self.points())


# ------------------------------------------------------------------ cochains

@dataclass
class Cochain:
    arity: int
    fn: Callable[..., Any]
    weight: Weight
    module: Any
    label: str = ""
    _memo: dict = field(default_factory=dict, repr=False)

    def __call__(self, *gs: GroupElement):
        if len(gs) != self.arity:
            raise ValueError(f"{self.label or 'cochain'} takes {self.arity} arguments, got {len(gs)}")
        hit = self._memo.get(gs)
        if hit is None:
            hit = self.fn(*gs)
            self._memo[gs] = hit
        return hit


def _prod(gs: Sequence[GroupElement]) -> GroupElement:
    out = IDENTITY
    for g in gs:
        out = out @ g
    return out


def bar_differential(sigma: Cochain, gs: Sequence[GroupElement]):
    """(d sigma)(g_1, ..., g_{n+1}) with the right action on the first term."""
    n = sigma.arity
    gs = tuple(gs)
    if len(gs) != n + 1:
        raise ValueError(f"need {n + 1} group elements, got {len(gs)}")
    M = sigma.module
    out = M.act(sigma(*gs[1:]), gs[0], sigma.weight)
    for j in range(1, n + 1):
        merged = gs[:j - 1] + (gs[j] @ gs[j - 1],) + gs[j + 1:]
        term = sigma(*merged)
        out = M.sub(out, term) if j % 2 else M.add(out, term)
    last = sigma(*gs[:n])
    return M.sub(out, last) if (n + 1) % 2 else M.add(out, last)


def differential(sigma: Cochain) -> Cochain:
    return Cochain(sigma.arity + 1, lambda *gs: bar_differential(sigma, gs), sigma.weight, sigma.module,
                   f"d({sigma.label})")


def cup(phi1: Cochain, phi2: Cochain) -> Cochain:
    """(phi1 u phi2)(g_1..g_{m+n}) = (-1)^{mn} phi1(g_{n+1}..) | (g_n...g_1) * phi2(g_1..g_n)."""
    m, n = phi1.arity, phi2.arity
    M = phi1.module
    sign = -1 if (m * n) % 2 else 1

    def fn(*gs):
        head = gs[n:]
        tail = gs[:n]
        g = _prod(reversed(tail))
        val = M.mul(M.act(phi1(*head), g, phi1.weight), phi2(*tail))
        return M.neg(val) if sign < 0 else val

    return Cochain(m + n, fn, phi1.weight * phi2.weight, M, f"{phi1.label}u{phi2.label}")


def coboundary(a, weight: Weight, module) -> Cochain:
    """d^0 of the constant 0-cochain a: g -> a | g - a."""
    zero_cochain = Cochain(0, lambda: a, weight, module, "const")
    return differential(zero_cochain)


# ------------------------------------------------------------------ period cochains

class PeriodFamily:
    """The cochains r_I for sub-tuples I of a fixed list of forms."""

    def __init__(self, forms, module, budget: PrecisionBudget):
        self.forms = list(forms)
        self.module = module
        self.budget = budget
        if hasattr(module, "dps"):
            module.dps = max(module.dps, budget.working_dps)
        self._cochains: dict = {}

    @property
    def n(self) -> int:
        return len(self.forms)

    def weight(self, idx) -> Weight:
        return Weight.of([self.forms[i] for i in idx])

    def r(self, idx) -> Cochain:
        idx = tuple(idx)
        hit = self._cochains.get(idx)
        if hit is not None:
            return hit
        fs = [self.forms[i] for i in idx]
        if self.module.kind == "polynomial":
            def fn(g, fs=fs):
                return period_polynomial(fs, g, self.budget).as_poly()
        else:
            svec = [Fraction(f.weight) - 2 for f in fs]

            def fn(g, fs=fs, svec=svec):
                def ev(ts):
                    vals, _ = rstar_many(fs, svec, g, ts, self.budget)
                    return vals
                return FnElem(ev)
        c = Cochain(1, fn, Weight.of(fs), self.module, "r" + ",".join(f.label for f in fs))
        self._cochains[idx] = c
        return c

    def sigma(self, j: int, g: GroupElement):
        return sigma_partition(self, j, g)

    def sigma_chen(self, j: int, g: GroupElement):
        """Oracle route: splitting the path at g^{-1} i inf gives r_{f_{j+1}..f_n}(g)."""
        return self.r(range(j, self.n))(g)


def compositions(items: Sequence) -> list:
    """Ordered splittings of ``items`` into non-empty contiguous blocks."""
    items = tuple(items)
    L = len(items)
    if L == 0:
        return [()]
    out = []
    for mask in range(2 ** (L - 1)):
        blocks, cur = [], [items[0]]
        for i in range(1, L):
            if mask >> (i - 1) & 1:
                blocks.append(tuple(cur))
                cur = []
            cur.append(items[i])
        blocks.append(tuple(cur))
        out.append(tuple(blocks))
    return out


def sigma_partition(family: PeriodFamily, j: int, g: GroupElement):
    """sum over compositions (I_1..I_l) of (j+1..n) of (-1)^l prod_m r_{I_m}(g^-1) | g.

    ``j`` is 1-based as in the cocycle relation, so the blocks cover the
    0-based indices j..n-1.
    """
    n = family.n
    if not 1 <= j <= n - 1:
        raise ValueError(f"sigma_j needs 1 <= j <= n-1, got j={j}, n={n}")
    M = family.module
    ginv = g.inverse()
    total = M.zero()
    with workdps(family.budget.working_dps):
        for blocks in compositions(range(j, n)):
            term = M.one()
            for I in blocks:
                term = M.mul(term, M.act(family.r(I)(ginv), g, family.weight(I)))
            total = M.add(total, term) if len(blocks) % 2 == 0 else M.sub(total, term)
    return total


# ------------------------------------------------------------------ residual checks

def _module_for(forms, mode: str, taus=None):
    integral = all(Fraction(f.weight).denominator == 1 and Fraction(f.weight) % 2 == 0 for f in forms)
    if mode == "auto":
        mode = "polynomial" if integral and len(forms) <= 2 else "samples"
    if mode == "polynomial":
        if not integral:
            raise ValueError("polynomial mode needs even integral weights")
        return PolynomialModule()
    if mode == "samples":
        return FunctionModule(taus)
    raise ValueError(f"unknown mode {mode!r}")


def _default_cocycle_tol(depth: int, digits: int) -> float:
    return {1: 10.0 ** (-digits + 10), 2: 10.0 ** (-digits / 2)}.get(depth, 10.0 ** (-digits / 3))


def _flat_scale(M, elems) -> float:
    return max((sup(M.flatten(e)) for e in elems), default=0.0)


def _pad(xs, n):
    return list(xs) + [acb(0)] * (n - len(xs))


def _report(identity, inputs, M, lhs, rhs, terms, tol, perturb, budget, extra=None):
    L = M.flatten(lhs)
    R = M.flatten(rhs)
    n = max(len(L), len(R))
    L, R = _pad(L, n), _pad(R, n)
    if n == 0:
        L, R = [acb(0)], [acb(0)]
    cfg = {"digits": budget.digits, "mode": M.kind}
    if budget.quad_level:
        cfg["quad_level"] = budget.quad_level
    cfg.update(extra or {})
    return IdentityReport.build(identity, inputs, L, R, tol, scale=_flat_scale(M, terms), perturb=perturb,
                                config=cfg)


def depth_cocycle_residual(forms, g1: GroupElement, g2: GroupElement, budget: PrecisionBudget, *,
                           mode: str = "auto", taus=None, tolerance: float | None = None,
                           perturb: float = 0.0, family: PeriodFamily | None = None) -> IdentityReport:
    """r(g1 g2) - r(g1)|g2 - r(g2) against sum_j r_{f_1..f_j}(g1)|g2 * sigma_j(g2)."""
    t0 = time.perf_counter()
    n = len(forms)
    if n < 1:
        raise ValueError("need at least one form")
    tol = tolerance if tolerance is not None else _default_cocycle_tol(n, budget.digits)
    with workdps(budget.working_dps):
        fam = family or PeriodFamily(forms, _module_for(forms, mode, taus), budget)
        M = fam.module
        full = tuple(range(n))
        r = fam.r(full)
        a, b, c = r(g1 @ g2), M.act(r(g1), g2, fam.weight(full)), r(g2)
        lhs = M.sub(M.sub(a, b), c)
        rhs = M.zero()
        terms = [a, b, c]
        for j in range(1, n):
            head = M.act(fam.r(range(j))(g1), g2, fam.weight(range(j)))
            t = M.mul(head, fam.sigma(j, g2))
            terms.append(t)
            rhs = M.add(rhs, t)
        rep = _report(f"cocycle{n}", {"forms": [f.label for f in forms], "gamma1": str(g1), "gamma2": str(g2)},
                      M, lhs, rhs, terms, tol, perturb, budget)
    rep.seconds = time.perf_counter() - t0
    return rep


def z1_depth_checker(candidate: Cochain, lower: Sequence, pairs: Sequence, *, tolerance: float = 1e-15,
                     perturb: float = 0.0, budget: PrecisionBudget | None = None) -> IdentityReport:
    """sigma(g2 g1) - sigma(g2)|g1 - sigma(g1) against sum rho(g2)|g1 * phi(g1) over ``lower``."""
    t0 = time.perf_counter()
    M = candidate.module
    budget = budget or PrecisionBudget(30)
    L, R, per_pair = [], [], []
    scale = 0.0
    with workdps(budget.working_dps):
        for g1, g2 in pairs:
            a, b, c = candidate(g2 @ g1), M.act(candidate(g2), g1, candidate.weight), candidate(g1)
            lhs = M.sub(M.sub(a, b), c)
            rhs = M.zero()
            terms = [a, b, c]
            for rho, phi in lower:
                t = M.mul(M.act(rho(g2), g1, rho.weight), phi(g1))
                terms.append(t)
                rhs = M.add(rhs, t)
            Lf, Rf = M.flatten(lhs), M.flatten(rhs)
            n = max(len(Lf), len(Rf), 1)
            Lf, Rf = _pad(Lf, n), _pad(Rf, n)
            sc = _flat_scale(M, terms)
            part = IdentityReport.build("z1", {}, Lf, Rf, tolerance, scale=sc)
            per_pair.append(part.residual)
            scale = max(scale, sc)
            L += Lf
            R += Rf
        rep = IdentityReport.build("z1", {"candidate": candidate.label, "pairs": [[str(a), str(b)] for a, b in pairs],
                                          "per_pair": [f"{x:.3e}" for x in per_pair]},
                                   L, R, tolerance, scale=scale, perturb=perturb,
                                   config={"digits": budget.digits, "mode": M.kind})
    rep.seconds = time.perf_counter() - t0
    return rep


# ------------------------------------------------------------------ coefficient identities

def _binom_expand(x: Fraction, n: int, poly):
    """(x - tau)^n as a polynomial."""
    return poly([x, -1]) ** n if n else poly([1])


def _calL(forms, cusp, budget):
    """[calL(cusp; n)] for n = 0..D, i.e. the centred period coefficients."""
    return period_polynomial(forms, _elem_for(cusp), budget).centered


def _elem_for(cusp):
    """An SL2(Z) element g with g^{-1} i inf = cusp (only its bottom row matters)."""
    p, q = cusp.p, cusp.q
    # need c = q', d = -p' with -d/c = p/q and ad - bc = 1
    c, d = q, -p
    gq, x, y = _egcd(d, c)
    # a d - b c = 1 with gcd(c, d) = 1
    a, b = x, -y
    if gq == -1:
        a, b = -a, -b
    return GroupElement(a, b, c, d)


def _egcd(a, b):
    if b == 0:
        return (a, 1, 0)
    g, x, y = _egcd(b, a % b)
    return (g, y, x - (a // b) * y)


def lincomb_report(f1, f2, g1: GroupElement, g2: GroupElement, budget: PrecisionBudget, *,
                   ks: Sequence[int] = (1, 2), N: int | None = None, tolerance: float | None = None,
                   perturb: float = 0.0) -> list:
    """Coefficientwise depth-2 relation written through calL and Lambda values.

    Returns one report per power of tau (the calL combination against the
    Lambda-product combination), followed by the constant-term and
    leading-term specialisations for g1 = [[1,0],[N,1]], g2 = g1^k.
    """
    t0 = time.perf_counter()
    forms = [f1, f2]
    for f in forms:
        k = Fraction(f.weight)
        if k.denominator != 1 or k % 2:
            raise ValueError("lincomb needs even integral weights")
    m1, m2 = int(f1.weight) - 2, int(f2.weight) - 2
    D = m1 + m2
    N = N if N is not None else max(f1.level, f2.level)
    tol = tolerance if tolerance is not None else 10.0 ** (-budget.digits / 2)
    reports = []
    with workdps(budget.working_dps):
        lhs_terms, rhs_poly = _lincomb_sides(f1, f2, g1, g2, budget)
        lhs_poly = lhs_terms[0] - lhs_terms[1] - lhs_terms[2]
        L = _pad(lhs_poly.coeffs(), D + 1)
        R = _pad(rhs_poly.coeffs(), D + 1)
        parts = [_pad(t.coeffs(), D + 1) for t in lhs_terms] + [R]
        # coefficients are compared against the size of the whole polynomials:
        # individual coefficients may vanish identically for special elements
        scale = max(sup(x) for x in parts)
        for p in range(D + 1):
            rep = IdentityReport.build("lincomb", {"forms": [f1.label, f2.label], "gamma1": str(g1),
                                                   "gamma2": str(g2), "power": p},
                                       [L[p]], [R[p]], tol, scale=scale, perturb=perturb,
                                       config={"digits": budget.digits})
            reports.append(rep)
        for k in ks:
            reports += _specialisations(f1, f2, N, k, budget, tol, perturb)
    dt = time.perf_counter() - t0
    for rep in reports:
        rep.seconds = dt / len(reports)
    return reports


def _lincomb_sides(f1, f2, g1, g2, budget):
    """The three calL sums as polynomials in tau, and the Lambda-product side."""
    m1, m2 = int(f1.weight) - 2, int(f2.weight) - 2
    D = m1 + m2
    P = acb_poly

    def calL_poly(g, moved_by=None):
        cusp = cusp_image(g)
        if cusp.is_infinity:
            return P([])
        cL = _calL([f1, f2], cusp, budget)
        x = hp(cusp.value)
        out = P([])
        for n, c in enumerate(cL):
            if moved_by is None:
                out += c * P([x, -1]) ** n
            else:
                a, b, cc, d = moved_by.a, moved_by.b, moved_by.c, moved_by.d
                # (x - g tau)^n j(g, tau)^D = (x (c tau + d) - (a tau + b))^n (c tau + d)^(D - n)
                out += c * P([x * d - b, x * cc - a]) ** n * P([d, cc]) ** (D - n)
        return out

    t12 = calL_poly(g1 @ g2)
    t1 = calL_poly(g1, moved_by=g2)
    t2 = calL_poly(g2)
    r1 = _depth1_poly(f1, g1, budget)
    r2 = _depth1_poly(f2, g2, budget)
    rhs = _poly_slash(r1, g2, m1, P) * r2
    return (t12, t1, t2), rhs


def _depth1_poly(f, g, budget):
    """r_f(g) assembled from Lambda_f(x, n1 + 1) with binomial weights."""
    m = int(f.weight) - 2
    cusp = cusp_image(g)
    if cusp.is_infinity:
        return acb_poly([])
    lam = lambda_many([f], cusp, [(s,) for s in range(1, m + 2)], budget)
    x = hp(cusp.value)
    out = acb_poly([])
    for n in range(m + 1):
        n1 = m - n
        out += math.comb(m, n1) * lam[(n1 + 1,)][0] * acb_poly([x, -1]) ** n
    return out


def _specialisations(f1, f2, N, k, budget, tol, perturb):
    """Constant-term and leading-term identities for g1 = V(N), g2 = V(N)^k."""
    from .congruence_group import Cusp

    D = int(f1.weight) + int(f2.weight) - 4
    m1, m2 = int(f1.weight) - 2, int(f2.weight) - 2
    A = Cusp.make(-1, N * (k + 1))
    B1 = Cusp.make(-1, N)
    B2 = Cusp.make(-1, N * k)
    LA, LB1, LB2 = (_calL([f1, f2], c, budget) for c in (A, B1, B2))
    lam1 = {c: lambda_many([f1], c, [(s,) for s in range(1, m1 + 2)], budget) for c in (A, B1, B2)}
    lam2 = lambda_many([f2], B2, [(s,) for s in range(1, m2 + 2)], budget)
    inputs = {"forms": [f1.label, f2.label], "N": N, "k": k}

    # constant term: sum_n (-1/N)^n ((1+k)^-n L(A;n) - L(B1;n) - k^-n L(B2;n))
    const_terms = []
    for n in range(D + 1):
        w = Fraction(-1, N) ** n
        const_terms += [hp(w / (1 + k) ** n) * LA[n], -hp(w) * LB1[n], -hp(w / Fraction(k) ** n) * LB2[n]]
    lhs_c = sum(const_terms, acb(0))
    # right side: r_f1(V)(0) r_f2(V^k)(0) as rational combinations of Lambda products
    rhs_c = acb(0)
    rhs_parts = []
    for a in range(m1 + 1):
        ca = Fraction(math.comb(m1, m1 - a)) * B1.value ** a
        for b in range(m2 + 1):
            cb = Fraction(math.comb(m2, m2 - b)) * B2.value ** b
            t = hp(ca * cb) * lam1[B1][(m1 - a + 1,)][0] * lam2[(m2 - b + 1,)][0]
            rhs_parts.append(t)
            rhs_c += t
    scale = max(sup(const_terms), sup(rhs_parts))
    rep_c = IdentityReport.build("lincomb-const", inputs, [lhs_c], [rhs_c], tol, scale=scale,
                                 perturb=perturb, config={"digits": budget.digits})

    # leading term
    lead_terms = [LA[D]]
    for n in range(D + 1):
        lead_terms.append(-hp(Fraction(-k - 1) ** n * Fraction(k * N) ** (D - n)) * LB1[n])
    lead_terms.append(-LB2[D])
    lhs_l = sum(lead_terms, acb(0))
    rhs_l = (lam1[A][(1,)][0] - lam1[B2][(1,)][0]) * lam2[(1,)][0]
    scale = max(sup(lead_terms), float(abs(rhs_l).mid()))
    rep_l = IdentityReport.build("lincomb-lead", inputs, [lhs_l], [rhs_l], tol, scale=scale,
                                 perturb=perturb, config={"digits": budget.digits})
    return [rep_c, rep_l]
