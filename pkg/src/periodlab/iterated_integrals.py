"""Iterated integrals along vertical rays.

Every integral in this package runs along a vertical ray w = x + i y.  The
height is parametrised by a uniform grid in an auxiliary variable u:

* rays starting at a cusp use y = exp(u); a cusp form decays like
  exp(-c/y) at the cusp and like exp(-c' y) at infinity, so the integrand is
  double-exponentially small at both ends of the u-line;
* rays starting at a finite height y0 use y = y0 + exp(u - exp(-u)).

On such a grid the trapezoid sum converges geometrically in 1/h, and so does
Sinc indefinite integration, which gives every tail integral
int_{y_i}^{inf} at once through a Toeplitz matrix.  Nested integrals are then
repeated matrix products, with each form evaluated once per node.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from flint import acb, acb_mat, acb_poly, arb, ctx

from .congruence_group import INFINITY, Cusp, GroupElement, cusp_image
from .hp_kernel import PrecisionBudget, a_coefficient, as_hp, cpow, gamma_int, hp, workdps
from .modular_forms import Form
from .report import IdentityReport, fmt

DEPTH_CAP = 3
PATH_DELTA = 1e-3


class RefinementError(RuntimeError):
    def __init__(self, msg, err=None):
        super().__init__(msg)
        self.err = err


class DivergentParameters(ValueError):
    pass


class PathConflict(ValueError):
    pass


# ------------------------------------------------------------------ grids

@lru_cache(maxsize=6)
def _toeplitz(M: int, prec: int) -> acb_mat:
    """T[i, j] = 1/2 + Si(pi (j - i)) / pi."""
    old = ctx.prec
    ctx.prec = prec
    try:
        pi = arb.pi()
        d = [arb(0.5) + (pi * k).si() / pi for k in range(-(M - 1), M)]
        flat = [d[j - i + M - 1] for i in range(M) for j in range(M)]
        return acb_mat(M, M, flat)
    finally:
        ctx.prec = old


def _decay(form: Form):
    """(log C, nu at infinity, nu at cusps, weight, reducible) for range estimates."""
    q = form.qexp
    nu = float(q.min_exponent)
    C, al = q.coefficient_bound
    logc = math.log(max(C, 1e-300)) + al * math.log(max(nu, 1e-9)) + math.log(4)
    red = form.reducible
    nuc = nu if red else nu / max(form.level, 1)
    return logc, nu, nuc, float(form.weight), red


def _bisect(fn, lo, hi, iters=80):
    """Root of a function with fn(lo) > 0 >= fn(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def _last_crossing(fn, start):
    """Point beyond which a unimodal-then-decreasing fn stays <= 0."""
    if fn(start) <= 0:
        return start
    hi = start * 2
    while fn(hi) > 0:
        hi *= 2
    return _bisect(fn, start, hi)


def _ray_range(forms, x: float, y0: float, den: int, P: int, A: float, dps: int):
    """u-interval outside of which every integrand is below 10^-(dps+5)."""
    logeps = -(dps + 5) * math.log(10)
    prof = [_decay(f) for f in forms if not f.is_zero]
    if not prof:
        return (-1.0, 1.0)
    logc = max(p[0] for p in prof)
    nu = min(p[1] for p in prof)
    # upper end: C e^{-2 pi nu y} (A + y)^P y < eps
    top = lambda y: logc - 2 * math.pi * nu * y + P * math.log(A + y) + math.log(y + 1) - logeps
    y_hi = _last_crossing(top, max(1.0 + y0, (P + 1) / (2 * math.pi * nu)))
    if y0 > 0:
        # y = y0 + phi(u), phi(u) = exp(u - e^{-u}), J = phi (1 + e^{-u})
        target = math.log(max(y_hi - y0, 1e-3))
        u_hi = _bisect(lambda u: target - (u - math.exp(-u)), -3.0, 50.0)
        g0 = max(logc - 2 * math.pi * nu * y0 + P * math.log(A + y0), 0.0)
        lj = lambda u: u - math.exp(-u) + math.log1p(math.exp(-u)) + g0 - logeps
        u_lo = -1.0
        while lj(u_lo) > 0:
            u_lo -= 0.25
        return (u_lo, u_hi + 0.25)
    # lower end near the cusp x = a/den, in v = 1/y
    logb = math.log(den)
    worst = 1.0
    for lc, _, nuc, k, _ in prof:
        lowf = lambda v: (lc - k * logb + k * math.log(v) - 2 * math.pi * nuc * v / den ** 2
                          + P * math.log(A + 1 / v) - math.log(v) - logeps)
        v = _last_crossing(lowf, max(float(den ** 2), (abs(k) + P + 1) * den ** 2 / (2 * math.pi * nuc)))
        worst = max(worst, v)
    return (-math.log(worst) - 0.25, math.log(y_hi) + 0.25)


def _to_arb(v) -> arb:
    if isinstance(v, arb):
        return v
    if isinstance(v, acb):
        return v.real
    if isinstance(v, Fraction):
        return arb(v.numerator) / v.denominator
    return arb(v)


class RayGrid:
    """Nodes, weights and tail operator for one vertical ray."""

    def __init__(self, x, y0, j0: int, j1: int, level: int, step: int = 1):
        self.x = x
        self.y0 = y0
        self.level = level
        self.finite = not (y0 == 0)
        self.step = step
        self.h = arb(2) ** (-level) * step
        self.js = list(range(j0, j1 + 1, step))
        hh = arb(2) ** (-level)
        self.us = [hh * j for j in self.js]
        if self.finite:
            ys, jac = [], []
            for u in self.us:
                e = (-u).exp()
                phi = (u - e).exp()
                ys.append(y0 + phi)
                jac.append(phi * (1 + e))
        else:
            ys = [u.exp() for u in self.us]
            jac = list(ys)
        self.ys = ys
        self.jac = jac
        self.ws = [acb(x, y) for y in ys]
        self._vals: dict = {}

    @property
    def M(self) -> int:
        return len(self.js)

    def values(self, form: Form) -> list:
        key = id(form)
        hit = self._vals.get(key)
        if hit is None:
            hit = [form(w) for w in self.ws]
            self._vals[key] = (hit, form)
            return hit
        return hit[0]

    def coarse(self) -> "RayGrid":
        """Every other node, step 2h; shares form values."""
        g = object.__new__(RayGrid)
        off = 0 if self.js[0] % (2 * self.step) == 0 else 1
        sl = slice(off, None, 2)
        g.x, g.y0, g.level, g.finite = self.x, self.y0, self.level, self.finite
        g.step = self.step * 2
        g.h = self.h * 2
        g.js = self.js[sl]
        g.us = self.us[sl]
        g.ys = self.ys[sl]
        g.jac = self.jac[sl]
        g.ws = self.ws[sl]
        g._vals = {k: (v[0][sl], v[1]) for k, v in self._vals.items()}
        g._parent = self
        return g

    def integrate(self, col) -> acb:
        s = acb(0)
        for v in col:
            s += v
        return s * self.h

    def tails(self, cols: Sequence[Sequence]) -> list:
        """int_{y_i}^{inf} for each column; columns already include the Jacobian."""
        M = self.M
        nc = len(cols)
        if nc == 0:
            return []
        G = acb_mat(M, nc, [cols[c][i] for i in range(M) for c in range(nc)])
        R = _toeplitz(M, ctx.prec) * G
        h = acb(self.h)
        return [[R[i, c] * h for i in range(M)] for c in range(nc)]


_GRIDS: dict = {}


def _grid_key(x, y0, level, j0, j1):
    return (x.mid().str(30) if isinstance(x, arb) else str(x),
            y0.mid().str(30) if isinstance(y0, arb) else str(y0), level, j0, j1, ctx.prec)


def ray_grid(forms, x, y0=0, *, den: int = 1, level: int, P: int = 40, A: float = 3.0) -> RayGrid:
    """Grid for the ray x + i y, y > y0, adequate for all ``forms``."""
    xf = float(_to_arb(x).mid())
    y0f = float(_to_arb(y0).mid())
    u_lo, u_hi = _ray_range(forms, xf, y0f, den, P, A + abs(xf), ctx.dps)
    scale = 2 ** level
    j0 = math.floor(u_lo * scale / 2) * 2
    j1 = math.ceil(u_hi * scale / 2) * 2
    # round the node count up so that Toeplitz matrices get reused
    M = j1 - j0 + 1
    M2 = ((M + 31) // 32) * 32 + 1
    j1 += M2 - M
    key = _grid_key(x, y0, level, j0, j1)
    g = _GRIDS.get(key)
    if g is None:
        g = RayGrid(_to_arb(x), _to_arb(y0), j0, j1, level)
        if len(_GRIDS) > 64:
            _GRIDS.clear()
        _GRIDS[key] = g
    return g


def clear_caches():
    _GRIDS.clear()
    _toeplitz.cache_clear()


# ------------------------------------------------------------------ nested sums

def nested_columns(grid: RayGrid, factors: Sequence[Sequence[Sequence]]) -> list:
    """Iterated integral over y_1 < ... < y_r along the grid, columnwise.

    ``factors[j][c]`` is the list of node values of the j-th integrand in
    column c (Jacobian included).  Returns one scalar per column.
    """
    r = len(factors)
    nc = len(factors[0])
    M = grid.M
    H = None
    for j in range(r - 1, 0, -1):
        cols = factors[j] if H is None else [[factors[j][c][i] * H[c][i] for i in range(M)] for c in range(nc)]
        H = grid.tails(cols)
    out = []
    for c in range(nc):
        col = factors[0][c] if H is None else [factors[0][c][i] * H[c][i] for i in range(M)]
        out.append(grid.integrate(col))
    return out


def _err_combine(fine: Sequence, coarse: Sequence) -> float:
    """Error proxy for the fine values given a coarse (step 2h) companion.

    Geometric convergence means the coarse error squared, relative to the
    value, estimates the fine error.
    """
    err = 0.0
    for a, b in zip(fine, coarse):
        d = float(abs(a - b).mid())
        m = max(float(abs(a).mid()), 1e-300)
        e = min(d, 10 * d * d / m) + float(abs(a).rad())
        err = max(err, e)
    return err


# ------------------------------------------------------------------ data types

@dataclass
class LambdaValue:
    forms: list
    basepoint: Cusp
    s: list
    value: acb
    err: float
    digits: int
    level: int = 0

    @property
    def depth(self) -> int:
        return len(self.s)

    def to_dict(self) -> dict:
        return {"depth": self.depth, "forms": list(self.forms), "basepoint": str(self.basepoint),
                "s": list(self.s), "value": fmt(self.value, self.digits), "err": f"{self.err:.3e}",
                "digits": self.digits}


@dataclass
class PeriodPolynomial:
    """sum_n centered[n] (x - tau)^n, with x the cusp g^{-1} i infinity."""

    centered: list
    center: Cusp
    degree_bound: int
    err: float = 0.0
    dps: int = 15
    coeffs: list = field(init=False)

    def __post_init__(self):
        if len(self.centered) > self.degree_bound + 1:
            raise ValueError("too many coefficients for the degree bound")
        self.coeffs = _recentre(self.centered, self.center)

    @classmethod
    def zero(cls, D: int) -> "PeriodPolynomial":
        return cls([acb(0)] * (D + 1), INFINITY, D)

    def __call__(self, tau):
        with workdps(max(ctx.dps, self.dps)):
            return self.as_poly()(as_hp(tau))

    def as_poly(self) -> acb_poly:
        return acb_poly(list(self.coeffs))


def _recentre(centered, center: Cusp) -> list:
    """Coefficients in powers of tau of sum_n L_n (x - tau)^n."""
    D = len(centered) - 1
    if center.is_infinity:
        if any(c != 0 for c in centered):
            raise ValueError("nonzero expansion around infinity")
        return [acb(0)] * (D + 1)
    x = hp(center.value)
    out = [acb(0)] * (D + 1)
    xp = [acb(1)]
    for _ in range(D):
        xp.append(xp[-1] * x)
    for n, L in enumerate(centered):
        for m in range(n + 1):
            term = L * math.comb(n, m) * xp[n - m]
            out[m] += -term if m % 2 else term
    return out


# ------------------------------------------------------------------ helpers

def _check_forms(forms):
    if len(forms) == 0:
        raise ValueError("need at least one form")
    if len(forms) > DEPTH_CAP:
        raise ValueError(f"depth {len(forms)} exceeds the cap {DEPTH_CAP}")


def _cusp_ray(forms, cusp: Cusp, level: int, P: int, A: float = 3.0) -> RayGrid:
    return ray_grid(forms, cusp.value, 0, den=cusp.q, level=level, P=P, A=A)


def _ipow(n: int) -> acb:
    return [acb(1), acb(0, 1), acb(-1), acb(0, -1)][n % 4]


def _lambda_core(forms, grid: RayGrid, svecs) -> dict:
    """Lambda(x; s) for every s in svecs on one grid (no i-power, no checks)."""
    r = len(forms)
    M = grid.M
    ys = grid.ys
    F = [grid.values(f) for f in forms]
    ypow_cache: dict = {}

    def ypow(p):
        if p not in ypow_cache:
            ypow_cache[p] = [y ** p for y in ys]
        return ypow_cache[p]

    negy = [-y for y in ys]
    H: dict = {(): None}
    for j in range(r - 1, 0, -1):
        suffixes = sorted({tuple(s[j:]) for s in svecs})
        by_tail: dict = {}
        for suf in suffixes:
            by_tail.setdefault(suf[1:], []).append(suf)
        cols, index = [], {}
        for tail, sufs in sorted(by_tail.items()):
            pmax = max(s[0] for s in sufs)
            Ht = H[tail]
            for p in range(pmax):
                yp = ypow(p)
                if Ht is None:
                    col = [F[j][i] * yp[i] * grid.jac[i] for i in range(M)]
                else:
                    col = [F[j][i] * yp[i] * grid.jac[i] * Ht[i] for i in range(M)]
                index[(tail, p)] = len(cols)
                cols.append(col)
        T = grid.tails(cols)
        newH: dict = {}
        for suf in suffixes:
            sj, tail = suf[0], suf[1:]
            acc = [acb(0)] * M
            for p in range(sj):
                cf = math.comb(sj - 1, p)
                e = sj - 1 - p
                Tp = T[index[(tail, p)]]
                if e == 0:
                    for i in range(M):
                        acc[i] += cf * Tp[i]
                else:
                    for i in range(M):
                        acc[i] += cf * negy[i] ** e * Tp[i]
            newH[suf] = acc
        H = newH
    out = {}
    for s in svecs:
        tail = tuple(s[1:])
        Ht = H[tail] if r > 1 else None
        yp = ypow(s[0] - 1)
        if Ht is None:
            col = [F[0][i] * yp[i] * grid.jac[i] for i in range(M)]
        else:
            col = [F[0][i] * yp[i] * grid.jac[i] * Ht[i] for i in range(M)]
        out[tuple(s)] = grid.integrate(col) * _ipow(sum(s))
    return out


def lambda_many(forms, basepoint: Cusp, svecs, budget: PrecisionBudget) -> dict:
    """Lambda(basepoint; s) for a batch of s-vectors; returns {s: (value, err)}."""
    _check_forms(forms)
    svecs = [tuple(int(v) for v in s) for s in svecs]
    for s in svecs:
        if len(s) != len(forms) or min(s) < 1:
            raise ValueError("s must be positive integers, one per form")
    if basepoint.is_infinity:
        raise ValueError("basepoint must be a rational cusp")
    if any(f.is_zero for f in forms):
        return {s: (acb(0), 0.0) for s in svecs}
    extra = 0 if len(forms) == 1 else 12 + 2 * max(max(s) for s in svecs) // 5
    level = budget.level if budget.quad_level else lambda_level(budget.digits)
    dps = budget.working_dps + extra
    for attempt in range(3):
        with workdps(dps):
            P = max(sum(s) for s in svecs) + 2
            grid = _cusp_ray(forms, basepoint, level, P)
            fine = _lambda_core(forms, grid, svecs)
            coarse = _lambda_core(forms, grid.coarse(), svecs)
            res = {}
            worst = 0.0
            for s in svecs:
                e = _err_combine([fine[s]], [coarse[s]])
                res[s] = (fine[s], e)
                scale = max(float(abs(fine[s]).mid()), 1e-300)
                worst = max(worst, float(fine[s].rad()) / scale)
            if worst < 10.0 ** (-budget.digits - 3):
                return res
            dps += int(math.log10(worst * 10.0 ** (budget.digits + 3))) + 10
    return res


def lambda_level(digits: int) -> int:
    return max(3, math.ceil(math.log2(math.log(10) * (digits + 5) / 4)))


def lambda_completed(forms, basepoint: Cusp, s, budget: PrecisionBudget) -> LambdaValue:
    s = tuple(int(v) for v in s)
    val, err = lambda_many(forms, basepoint, [s], budget)[s]
    tol = 10.0 ** (-budget.digits) * max(float(abs(val).mid()), 10.0 ** (-budget.digits))
    if err > tol * 10 ** budget.guard:
        raise RefinementError(f"Lambda error estimate {err:.3g} above tolerance", err)
    return LambdaValue([f.label for f in forms], basepoint, list(s), val, err, budget.digits,
                       budget.level if budget.quad_level else lambda_level(budget.digits))


# ------------------------------------------------------------------ r*

def _kernel_col(grid: RayGrid, form: Form, s, tau, path_check: bool):
    vals = grid.values(form)
    out = []
    integral = isinstance(s, int) or (isinstance(s, Fraction) and s.denominator == 1)
    si = int(s) if integral else None
    if path_check and not integral:
        x = grid.x
        if float(abs(acb(x, grid.y0) - tau).mid()) < PATH_DELTA:
            raise PathConflict("tau is within the conflict radius of the integration path")
    ii = acb(0, 1)
    for i in range(grid.M):
        d = grid.ws[i] - tau
        k = d ** si if integral else cpow(d, s)
        out.append(vals[i] * k * grid.jac[i] * ii)
    return out


def rstar_many(forms, svec, g: GroupElement, taus, budget: PrecisionBudget, *, start: Cusp | None = None):
    """r*_{f_1..f_r}(s)(g)(tau) for each tau in taus; returns (values, err)."""
    _check_forms(forms)
    cusp = start if start is not None else cusp_image(g)
    if cusp.is_infinity or any(f.is_zero for f in forms):
        return [acb(0) for _ in taus], 0.0
    svec = [Fraction(s) for s in svec]
    level = budget.level if budget.quad_level else lambda_level(budget.digits)
    with workdps(budget.working_dps):
        taus = [as_hp(t) for t in taus]
        P = int(sum(abs(s) for s in svec)) + 4
        A = 2.0 + max(float(abs(t).mid()) for t in taus)
        grid = _cusp_ray(forms, cusp, level, P, A)
        fine = _rstar_core(forms, svec, grid, taus)
        coarse = _rstar_core(forms, svec, grid.coarse(), taus)
        return fine, _err_combine(fine, coarse)


def _rstar_core(forms, svec, grid, taus):
    factors = []
    for f, s in zip(forms, svec):
        factors.append([_kernel_col(grid, f, s, t, True) for t in taus])
    return nested_columns(grid, factors)


def rstar(forms, s, g: GroupElement, tau, budget: PrecisionBudget) -> acb:
    vals, _ = rstar_many(forms, s, g, [tau], budget)
    return vals[0]


# ------------------------------------------------------------------ period polynomials

def _a_terms(ms):
    """[(n_vector, n, A)] with nonzero A, where n is the power of (x - tau)."""
    r = len(ms)
    out = []

    def rec(j, top, acc):
        # j is the 0-based index being chosen; top its binomial upper index
        if j == 0:
            for n1 in range(top + 1):
                nv = (n1,) + acc
                out.append((nv, top - n1, a_coefficient(nv, ms)))
            return
        for nj in range(top + 1):
            rec(j - 1, top - nj + ms[j - 1], (nj,) + acc)

    rec(r - 1, ms[r - 1], ())
    return [t for t in out if t[2] != 0]


def period_polynomial(forms, g: GroupElement, budget: PrecisionBudget) -> PeriodPolynomial:
    _check_forms(forms)
    ms = []
    for f in forms:
        k = Fraction(f.weight)
        if k.denominator != 1 or k % 2 != 0:
            raise ValueError("period polynomials need even integral weights")
        ms.append(int(k) - 2)
    D = sum(ms)
    cusp = cusp_image(g)
    if cusp.is_infinity or any(f.is_zero for f in forms):
        return PeriodPolynomial.zero(D)
    terms = _a_terms(ms)
    svecs = sorted({tuple(n + 1 for n in nv) for nv, _, _ in terms})
    lam = lambda_many(forms, cusp, svecs, budget)
    with workdps(budget.working_dps):
        cent = [acb(0)] * (D + 1)
        err = 0.0
        for nv, n, A in terms:
            v, e = lam[tuple(m + 1 for m in nv)]
            cent[n] += A * v
            err = max(err, A * e)
        return PeriodPolynomial(cent, cusp, D, err, budget.working_dps)


# ------------------------------------------------------------------ multiple L-series

def _lattice(form: Form):
    return form.qexp.denominator


def _lsum_bound(C, a, D, start):
    """Bound for sum_{nu >= start, nu in (1/D)Z} C nu^a, with a < -1."""
    return C * (start ** a + D * start ** (a + 1) / (-a - 1))


def l_tail_bound(forms, s, n_terms) -> float:
    full, tail = [], []
    for f, sj in zip(forms, s):
        C, al = f.qexp.coefficient_bound
        a = al - sj
        if a >= -1:
            raise DivergentParameters(f"s={sj} too small for coefficient growth nu^{al}")
        D = _lattice(f)
        nu0 = float(f.qexp.min_exponent)
        full.append(_lsum_bound(C, a, D, nu0))
        tail.append(_lsum_bound(C, a, D, float(n_terms) + 1.0 / D))
    tot = 0.0
    for j in range(len(forms)):
        t = tail[j]
        for i in range(len(forms)):
            if i != j:
                t *= full[i]
        tot += t
    return tot


def multiple_l_partial(forms, basepoint: Cusp, s, n_terms) -> tuple:
    """Box-truncated L(a/b; s) over exponents <= n_terms, plus a tail bound."""
    _check_forms(forms)
    s = [int(v) for v in s]
    if any(f.is_zero for f in forms):
        return acb(0), 0.0
    tail = l_tail_bound(forms, s, n_terms)
    x = hp(basepoint.value)
    Dl = 1
    for f in forms:
        Dl = Dl * _lattice(f) // math.gcd(Dl, _lattice(f))
    Nl = int(Fraction(n_terms) * Dl)
    twopii = 2 * acb.pi() * acb(0, 1)
    polys = []
    for f in forms:
        if f.qexp.complete_to < Fraction(n_terms) and f._extend is not None:
            f.qexp = f._extend(Fraction(n_terms))
        if f.qexp.complete_to < Fraction(n_terms):
            raise ValueError(f"{f.label}: coefficients stored only to {f.qexp.complete_to}")
        coeffs = [acb(0)] * (Nl + 1)
        for nu, c in f.qexp.terms:
            m = nu * Dl
            if m > Nl:
                break
            coeffs[int(m)] = hp(c[0], c[1]) * (twopii * hp(nu) * x).exp() if not basepoint.value == 0 \
                else hp(c[0], c[1])
        polys.append(acb_poly(coeffs))
    G = None
    for j in range(len(forms) - 1, -1, -1):
        P = polys[j] if G is None else polys[j] * G
        cs = P.coeffs()
        sj = s[j]
        cs = [acb(0)] + [c * hp(Fraction(m, Dl)) ** (-sj) if c != 0 else acb(0)
                         for m, c in enumerate(cs) if m > 0]
        G = acb_poly(cs)
    total = sum(G.coeffs(), acb(0))
    return total, tail


def choose_n_terms(forms, s, target: float) -> int:
    n = 8
    while l_tail_bound(forms, s, n) > target:
        n = int(n * 1.3) + 1
        if n > 10 ** 6:
            raise DivergentParameters("tail target unreachable with n_terms <= 1e6")
    return n


def gamma_factor(s) -> acb:
    num = acb(1)
    for v in s:
        num *= gamma_int(v)
    return num / (-2 * acb.pi() * acb(0, 1)) ** sum(s)


def mellin_identity_residual(forms, basepoint: Cusp, s, budget: PrecisionBudget,
                             tolerance: float | None = None, perturb: float = 0.0) -> IdentityReport:
    t0 = time.perf_counter()
    s = [int(v) for v in s]
    if tolerance is None:
        tolerance = 10.0 ** (-budget.digits + 5) if len(s) == 1 else 10.0 ** (-budget.digits / 2)
    lam = lambda_completed(forms, basepoint, s, budget)
    with workdps(budget.working_dps):
        gf = gamma_factor(s)
        target = tolerance * 1e-2 * max(float(abs(lam.value).mid()), 1e-300) / max(float(abs(gf).mid()), 1e-300)
        if any(f.is_zero for f in forms):
            Lval, tail, N = acb(0), 0.0, 0
        else:
            N = choose_n_terms(forms, s, target)
            Lval, tail = multiple_l_partial(forms, basepoint, s, N)
        rhs = gf * Lval
    rep = IdentityReport.build("mellin", {"forms": [f.label for f in forms], "basepoint": str(basepoint),
                                          "s": s, "n_terms": N},
                               [lam.value], [rhs], tolerance, perturb=perturb,
                               config={"digits": budget.digits, "quad_level": lam.level,
                                       "l_tail_bound": f"{float(abs(gf).mid()) * tail:.3e}",
                                       "quad_err": f"{lam.err:.3e}"})
    rep.seconds = time.perf_counter() - t0
    return rep


def route_equivalence_report(forms, g: GroupElement, taus, budget: PrecisionBudget,
                             tolerance: float | None = None, perturb: float = 0.0) -> IdentityReport:
    """period_polynomial(...)(tau) against direct rstar(..., tau) at each tau."""
    t0 = time.perf_counter()
    tol = tolerance if tolerance is not None else 10.0 ** (-budget.digits / 2)
    poly = period_polynomial(forms, g, budget)
    svec = [Fraction(f.weight) - 2 for f in forms]
    direct, err = rstar_many(forms, svec, g, taus, budget)
    with workdps(budget.working_dps):
        via_poly = [poly(t) for t in taus]
    rep = IdentityReport.build("route", {"forms": [f.label for f in forms], "gamma": str(g),
                                         "taus": [str(t) for t in taus]},
                               via_poly, direct, tol, perturb=perturb,
                               config={"digits": budget.digits, "quad_err": f"{max(err, poly.err):.3e}"})
    rep.seconds = time.perf_counter() - t0
    return rep
