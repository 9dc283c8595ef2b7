"""Eichler integrals on the lower half-plane.

For tau with Im tau < 0 the integrals run up the vertical line through
conj(tau).  On that line w - tau = i (y - Im tau) with a positive real
factor, so (w - tau)^(k-2) is exp(i pi (k-2)/2) times a real power and no
branch choice is ever made numerically.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

from flint import acb, arb

from .congruence_group import IDENTITY, GroupElement, jfactor
from .hp_kernel import DomainError, PrecisionBudget, as_hp, cpow, workdps
from .iterated_integrals import (_err_combine, lambda_level, nested_columns, ray_grid,
                                 rstar_many)
from .modular_forms import Form
from .report import IdentityReport, fmt


@dataclass
class EichlerValue:
    forms: list
    tau: acb
    value: acb
    err: float
    digits: int

    def __post_init__(self):
        if not self.tau.imag < 0:
            raise DomainError("Eichler values live on the lower half-plane")

    def to_dict(self) -> dict:
        return {"forms": list(self.forms), "tau": fmt(self.tau, 20),
                "value": fmt(self.value, self.digits), "err": f"{self.err:.3e}"}


def _phase(k) -> acb:
    e = Fraction(k) - 2
    return (acb.pi() * acb(0, 1) * (arb(e.numerator) / e.denominator) / 2).exp()


def _column(grid, form: Form, tau: acb) -> list:
    """f(w) (w - tau)^(k-2) dw/du at the grid nodes."""
    vals = grid.values(form)
    k = Fraction(form.weight)
    e = k - 2
    pre = _phase(k) * acb(0, 1)
    b = tau.imag
    out = []
    for i in range(grid.M):
        base = grid.ys[i] - b
        p = base ** int(e) if e.denominator == 1 else base ** (arb(e.numerator) / e.denominator)
        out.append(vals[i] * p * grid.jac[i] * pre)
    return out


def _vertical(forms, taus, budget: PrecisionBudget):
    """Nested integrals of forms along the line through conj(tau), per tau."""
    level = budget.level if budget.quad_level else lambda_level(budget.digits)
    out, err = [], 0.0
    for tau in taus:
        if not tau.imag < 0:
            raise DomainError("Eichler integrals need Im tau < 0")
        P = int(sum(abs(Fraction(f.weight) - 2) for f in forms)) + 2
        A = float(abs(tau.imag).mid())
        # lines starting close to the real axis need finer steps; refine until
        # the fine/coarse comparison meets the target
        target = 10.0 ** (-budget.digits)
        for lev in range(level, level + 4):
            grid = ray_grid(forms, tau.real, -tau.imag, level=lev, P=P, A=A)
            coarse = grid.coarse()
            fine_v = nested_columns(grid, [[_column(grid, f, tau)] for f in forms])
            coarse_v = nested_columns(coarse, [[_column(coarse, f, tau)] for f in forms])
            e = _err_combine(fine_v, coarse_v)
            if e <= target:
                break
        out.append(fine_v[0])
        err = max(err, e)
    return out, err


def eichler_many(forms, taus, budget: PrecisionBudget):
    if any(f.is_zero for f in forms):
        with workdps(budget.working_dps):
            for t in taus:
                if not as_hp(t).imag < 0:
                    raise DomainError("Eichler integrals need Im tau < 0")
        return [acb(0) for _ in taus], 0.0
    with workdps(budget.working_dps):
        return _vertical(forms, [as_hp(t) for t in taus], budget)


def eichler_I(f: Form, tau, budget: PrecisionBudget) -> EichlerValue:
    """int_{conj tau}^{i inf} f(w) (w - tau)^(k-2) dw."""
    vals, err = eichler_many([f], [tau], budget)
    with workdps(budget.working_dps):
        return EichlerValue([f.label], as_hp(tau), vals[0], err, budget.digits)


def eichler_I2(f1: Form, f2: Form, tau, budget: PrecisionBudget) -> EichlerValue:
    """Double integral, w1 from conj tau, w2 from w1, both up to i inf."""
    vals, err = eichler_many([f1, f2], [tau], budget)
    with workdps(budget.working_dps):
        return EichlerValue([f1.label, f2.label], as_hp(tau), vals[0], err, budget.digits)


def slash_factor(forms, g: GroupElement, tau) -> acb:
    """chi^{-1}(g) j(g, tau)^{sum (k_j - 2)} for the diagonal action."""
    chi = acb(1)
    for f in forms:
        chi *= f.chi(g)
    e = sum(Fraction(f.weight) - 2 for f in forms)
    return cpow(jfactor(g, tau), e) / chi


def _default_tol(forms, digits: int, depth: int) -> float:
    integral = all(Fraction(f.weight).denominator == 1 for f in forms)
    if depth == 1:
        return 10.0 ** (-digits + 8) if integral else 10.0 ** (-digits / 2)
    return 10.0 ** (-digits / 2) if integral else 10.0 ** (-digits / 3)


def _g_tau(g, tau):
    gt = g.act(tau)
    if not gt.imag < 0:
        raise DomainError("g tau left the lower half-plane")
    return gt


def bkm_residual(f: Form, g: GroupElement, tau, budget: PrecisionBudget, tolerance: float | None = None,
                 perturb: float = 0.0) -> IdentityReport:
    """I_f(tau) - chi^{-1} j^{k-2} I_f(g tau) against r_f(g)(tau)."""
    t0 = time.perf_counter()
    tol = tolerance if tolerance is not None else _default_tol([f], budget.digits, 1)
    with workdps(budget.working_dps):
        tau = as_hp(tau)
        if g == IDENTITY or f.is_zero:
            lhs, rhs, scale, err = acb(0), acb(0), 0.0, 0.0
        else:
            gt = _g_tau(g, tau)
            (I0, I1), err = eichler_many([f], [tau, gt], budget)
            moved = slash_factor([f], g, tau) * I1
            lhs = I0 - moved
            (rhs,), err2 = rstar_many([f], [Fraction(f.weight) - 2], g, [tau], budget)
            err = max(err, err2)
            scale = max(float(abs(I0).mid()), float(abs(moved).mid()))
    rep = IdentityReport.build("bkm", {"form": f.label, "gamma": str(g), "tau": _tau_str(tau)},
                               [lhs], [rhs], tol, scale=scale, perturb=perturb,
                               config=_config(budget, err))
    rep.seconds = time.perf_counter() - t0
    return rep


def fin0_residual(f1: Form, f2: Form, g: GroupElement, tau, budget: PrecisionBudget,
                  tolerance: float | None = None, perturb: float = 0.0) -> IdentityReport:
    """I_{f1,f2}|(g - 1) against -r_{f1,f2}(g) + r_{f1}(g) r_{f2}(g) - r_{f2}(g) I_{f1}."""
    t0 = time.perf_counter()
    tol = tolerance if tolerance is not None else _default_tol([f1, f2], budget.digits, 2)
    with workdps(budget.working_dps):
        tau = as_hp(tau)
        if g == IDENTITY or f1.is_zero or f2.is_zero:
            lhs, rhs, scale, err = acb(0), acb(0), 0.0, 0.0
        else:
            gt = _g_tau(g, tau)
            (J0, J1), e1 = eichler_many([f1, f2], [tau, gt], budget)
            (I1,), e2 = eichler_many([f1], [tau], budget)
            moved = slash_factor([f1, f2], g, tau) * J1
            lhs = moved - J0
            (r12,), e3 = rstar_many([f1, f2], [Fraction(f1.weight) - 2, Fraction(f2.weight) - 2], g, [tau], budget)
            (r1,), e4 = rstar_many([f1], [Fraction(f1.weight) - 2], g, [tau], budget)
            (r2,), e5 = rstar_many([f2], [Fraction(f2.weight) - 2], g, [tau], budget)
            terms = [-r12, r1 * r2, -r2 * I1]
            rhs = terms[0] + terms[1] + terms[2]
            err = max(e1, e2, e3, e4, e5)
            scale = max([float(abs(J0).mid()), float(abs(moved).mid())] + [float(abs(t).mid()) for t in terms])
    rep = IdentityReport.build("fin0", {"forms": [f1.label, f2.label], "gamma": str(g), "tau": _tau_str(tau)},
                               [lhs], [rhs], tol, scale=scale, perturb=perturb,
                               config=_config(budget, err))
    rep.seconds = time.perf_counter() - t0
    return rep


def _tau_str(tau: acb) -> str:
    re = tau.real.mid().str(12, radius=False)
    im = tau.imag.mid().str(12, radius=False)
    return f"{re}{'' if im.startswith('-') else '+'}{im}i"


def _config(budget: PrecisionBudget, err: float) -> dict:
    return {"digits": budget.digits,
            "quad_level": budget.level if budget.quad_level else lambda_level(budget.digits),
            "quad_err": f"{err:.3e}"}
