import math
from fractions import Fraction

import mpmath
import pytest
from flint import acb, arb, ctx

from periodlab.congruence_group import IDENTITY, GroupElement, random_word, tau_point
from periodlab.eichler import EichlerValue, bkm_residual, eichler_I, eichler_I2, fin0_residual
from periodlab.hp_kernel import DomainError, PrecisionBudget, as_hp, workdps
from periodlab.modular_forms import Form, QExpansion


def upper_gamma_cf(a, x):
    """Gamma(a, x) by the modified Lentz continued fraction (x > a + 1)."""
    a, x = arb(a), arb(x)
    eps = 10.0 ** (-ctx.dps + 2)
    tiny = arb(10) ** (-300)
    b = x + 1 - a
    c = 1 / tiny
    d = 1 / b
    h = d
    i = 1
    while True:
        an = -i * (i - a)
        b += 2
        d = an * d + b
        c = b + an / c
        d = 1 / d
        step = d * c
        h *= step
        if float(abs(step - 1).mid()) < eps:
            break
        i += 1
        if i > 5000:
            raise RuntimeError("continued fraction did not converge")
    return (-x).exp() * x ** a * h


def termwise_oracle(qexp, tau, terms=None):
    """i^(k-1) sum c(nu) (2 pi nu)^(1-k) Gamma(k-1, 4 pi nu |Im tau|) e(nu tau)."""
    k = Fraction(qexp.weight)
    km1 = arb(k.numerator - k.denominator) / k.denominator
    y = -tau.imag
    phase = (acb.pi() * acb(0, 1) * km1 / 2).exp()
    total = acb(0)
    for nu, (re, im) in (terms or qexp.terms):
        nu_a = arb(nu.numerator) / nu.denominator
        c = acb(arb(re.numerator) / re.denominator, arb(im.numerator) / im.denominator)
        g = upper_gamma_cf(km1, 4 * arb.pi() * nu_a * y)
        total += c * (2 * arb.pi() * nu_a) ** (-km1) * g * (2 * acb.pi() * acb(0, 1) * nu_a * tau).exp()
    return phase * total


def rel(a, b):
    return float(abs(acb(a) - acb(b)).mid()) / max(float(abs(acb(b)).mid()), 1e-300)


def test_continued_fraction_routine():
    with workdps(60):
        for n in (2, 5, 11):
            for x in (3, 12.5, 40):
                closed = math.factorial(n - 1) * (-arb(x)).exp() * sum(arb(x) ** j / math.factorial(j) for j in range(n))
                assert float(abs(upper_gamma_cf(n, x) - closed).mid()) <= 1e-50 * float(abs(closed).mid())
        mpmath.mp.dps = 60
        ref = mpmath.gammainc(mpmath.mpf(1) / 2, mpmath.mpf(7))
        assert float(abs(upper_gamma_cf(arb(1) / 2, 7) - arb(str(ref))).mid()) < 1e-50


@pytest.mark.parametrize("t", ["-i", "-0.25-i", "0.4-0.7i"])
def test_eichler_delta_termwise(delta, t):
    digits = 30
    tau = tau_point(t)
    val = eichler_I(delta, tau, PrecisionBudget(digits))
    with workdps(digits + 20):
        want = termwise_oracle(delta.qexp, as_hp(tau))
        assert rel(val.value, want) <= 10.0 ** (-digits + 4)


def test_eichler_theta_termwise(theta):
    digits = 30
    tau = tau_point("-0.1-0.9i")
    val = eichler_I(theta, tau, PrecisionBudget(digits))
    with workdps(digits + 20):
        want = termwise_oracle(theta.qexp, as_hp(tau))
        assert rel(val.value, want) <= 10.0 ** (-digits + 4)


def test_eichler_zero_and_domain(zero, delta, b30):
    assert eichler_I(zero, tau_point("-i"), b30).value == 0
    assert eichler_I2(delta, zero, tau_point("-i"), b30).value == 0
    with pytest.raises(DomainError):
        eichler_I(delta, tau_point("0.1+i"), b30)
    with pytest.raises(DomainError):
        eichler_I(zero, tau_point("2"), b30)
    with workdps(30):
        with pytest.raises(DomainError):
            EichlerValue(["delta"], acb(0, 1), acb(0), 0.0, 30)


def test_eichler_translation_substitution(delta, b30):
    a = eichler_I(delta, tau_point("0.3-0.8i"), b30)
    b = eichler_I(delta, tau_point("-0.7-0.8i"), b30)
    with workdps(40):
        assert rel(a.value, b.value) < 1e-27


def test_eichler_mirror_symmetry(delta, b30):
    # real coefficients, even weight: I(-conj tau) = -conj(I(tau))
    a = eichler_I(delta, tau_point("0.3-0.8i"), b30)
    b = eichler_I(delta, tau_point("-0.3-0.8i"), b30)
    with workdps(40):
        assert rel(b.value, -a.value.conjugate()) < 1e-27


def test_eichler_continuity(delta, b30):
    base = tau_point("0.2-0.9i")
    h = Fraction(1, 10 ** 6)
    v0 = eichler_I(delta, base, b30).value
    v1 = eichler_I(delta, (base.re + h, base.im), b30).value
    v2 = eichler_I(delta, (base.re + 2 * h, base.im), b30).value
    with workdps(40):
        d1 = float(abs(v1 - v0).mid())
        d2 = float(abs(v2 - v0).mid())
    K = d1 / float(h)
    assert d2 <= 2.01 * K * float(h)
    assert d1 > 0


def test_eichler_I2_refinement(delta):
    tau = tau_point("-0.2-1.1i")
    a = eichler_I2(delta, delta, tau, PrecisionBudget(30, quad_level=5))
    b = eichler_I2(delta, delta, tau, PrecisionBudget(30, quad_level=6))
    with workdps(40):
        assert float(abs(a.value - b.value).mid()) <= max(a.err, 1e-36 * float(abs(a.value).mid()))


def test_eichler_I2_bound(delta):
    # f2 = q alone: |I2| <= (int |f1| (t + 2|y|)^10 dt) (int e^{-2 pi (|y|+t)} (t + 2|y|)^10 dt)
    single = Form(QExpansion(Fraction(12), 1, ((Fraction(1), (Fraction(1), Fraction(0))),), "inferred",
                             (1.0, 0.0), Fraction(10 ** 6), "q"))
    tau = tau_point("-i")
    val = eichler_I2(delta, single, tau, PrecisionBudget(30))
    with workdps(40):
        y = arb(1)

        def piece(n, c):
            n = arb(int(n))
            return arb(abs(int(c))) * (2 * arb.pi() * n * y).exp() * (2 * arb.pi() * n) ** (-11) * upper_gamma_cf(11, 4 * arb.pi() * n * y)

        outer = sum((piece(nu, re) for nu, (re, _) in delta.qexp.terms[:60]), arb(0))
        inner = piece(1, 1) * (-2 * arb.pi() * y).exp() * (2 * arb.pi() * y).exp()
        bound = outer * inner
        assert float(abs(val.value).mid()) <= float(bound.mid())
        assert float(abs(val.value).mid()) > 0


def test_bkm_identity_is_exactly_zero(delta, theta, b30):
    for f in (delta, theta):
        rep = bkm_residual(f, IDENTITY, tau_point("-0.3-0.8i"), b30)
        assert rep.residual == 0 and rep.passed


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_bkm_delta(delta, seed):
    digits = 30
    g = random_word(1, 6, seed)
    if g.c == 0:
        g = g @ GroupElement(1, 0, 1, 1)
    rep = bkm_residual(delta, g, tau_point("-0.3-0.8i"), PrecisionBudget(digits))
    assert rep.residual <= 10.0 ** (-digits + 8)
    assert not bkm_residual(delta, g, tau_point("-0.3-0.8i"), PrecisionBudget(digits), perturb=1e-6).passed


@pytest.mark.parametrize("seed", [1, 5])
def test_bkm_theta(theta, seed):
    digits = 30
    g = random_word(8, 6, seed)
    if g.c == 0:
        g = g @ GroupElement(1, 0, 8, 1)
    rep = bkm_residual(theta, g, tau_point("-0.2-1.1i"), PrecisionBudget(digits))
    assert rep.residual <= 10.0 ** (-digits / 2)
    assert rep.inputs["gamma"] == str(g)


def test_fin0_delta(delta):
    digits = 30
    g = GroupElement(2, 1, 1, 1)
    rep = fin0_residual(delta, delta, g, tau_point("-1.5i"), PrecisionBudget(digits))
    assert rep.residual <= 10.0 ** (-digits / 2)
    assert fin0_residual(delta, delta, IDENTITY, tau_point("-1.5i"), PrecisionBudget(digits)).residual == 0
    bad = fin0_residual(delta, delta, g, tau_point("-1.5i"), PrecisionBudget(digits), perturb=1e-6)
    assert not bad.passed


def test_fin0_theta(theta):
    digits = 30
    g = random_word(8, 4, 2)
    if g.c == 0:
        g = g @ GroupElement(1, 0, 8, 1)
    rep = fin0_residual(theta, theta, g, tau_point("-0.1-0.9i"), PrecisionBudget(digits))
    assert rep.residual <= 10.0 ** (-digits / 3)
