from fractions import Fraction

import pytest
from flint import acb, arb
from hypothesis import given, settings
from hypothesis import strategies as st

from periodlab.congruence_group import IDENTITY, T, GroupElement, jfactor, random_word
from periodlab.hp_kernel import DomainError, PrecisionBudget, cpow, hp, workdps
from periodlab.modular_forms import (Form, InsufficientCoefficients, NotModular, QExpansion, QExpParseError,
                                     delta_coefficients, delta_qexp, eval_qexp, infer_multiplier, load_qexp,
                                     make_delta, make_theta, parse_form, parse_qexp, save_qexp, tail_bound,
                                     theta_unary)


def close(z, w, tol):
    return float(abs(acb(z) - acb(w)).mid()) <= tol


def euler_product_delta(n_max):
    """q prod (1 - q^n)^24 by multiplying in each factor (1 - q^n) 24 times."""
    poly = [1] + [0] * n_max
    for n in range(1, n_max + 1):
        for _ in range(24):
            for i in range(n_max, n - 1, -1):
                poly[i] -= poly[i - n]
    return poly[:n_max]


def test_delta_two_routes():
    n = 60
    assert delta_coefficients(n) == euler_product_delta(n)
    q = delta_qexp(n)
    assert q.coefficient(1) == 1
    assert q.coefficient(2) == -24
    assert q.coefficient(3) == 252
    assert all(nu > 0 for nu, _ in q.terms)
    assert q.coefficient(0) == 0


def test_delta_coefficient_bound_holds():
    q = delta_qexp(400)
    C, al = q.coefficient_bound
    for nu, (re, im) in q.terms:
        assert abs(re) <= C * float(nu) ** al


def test_theta_examples():
    q = theta_unary(1, 2, 10)
    assert q.terms[0][0] == Fraction(1, 8)
    terms = dict(q.terms)
    assert terms[Fraction(1, 8)] == (Fraction(1, 4), 0)
    assert terms[Fraction(9, 8)] == (Fraction(-3, 4), 0)
    assert Fraction(4, 8) not in terms
    assert q.coefficient(Fraction(4, 8)) == 0
    assert q.weight == Fraction(3, 2)
    assert q.multiplier_mode == "inferred"
    with pytest.raises(ValueError):
        theta_unary(2, 2, 10)


@pytest.mark.parametrize("j,N", [(1, 2), (1, 3), (2, 3), (3, 5)])
def test_theta_enumeration_oracle(j, N):
    n_max = 12
    q = theta_unary(j, N, n_max)
    want = {}
    for n in range(-50, 51):
        if n % (2 * N) == j % (2 * N) and Fraction(n * n, 4 * N) <= n_max:
            nu = Fraction(n * n, 4 * N)
            want[nu] = want.get(nu, 0) + Fraction(n, 2 * N)
    got = {nu: c[0] for nu, c in q.terms}
    assert got == {nu: c for nu, c in want.items() if c}
    C, al = q.coefficient_bound
    for nu, (re, _) in q.terms:
        assert abs(re) <= C * float(nu) ** al


def test_qexp_file_round_trip(tmp_path):
    q = delta_qexp(30)
    path = tmp_path / "delta.txt"
    save_qexp(q, path)
    back = load_qexp(path)
    assert back.weight == 12 and back.level == 1
    assert [t for t in back.terms] == [t for t in q.terms]
    small = parse_qexp("weight 12 level 1\n1 1\n2 -24\n")
    assert small.coefficient(2) == -24


@pytest.mark.parametrize("text,line", [
    ("weight 12 level 1\n", 1),
    ("weight 12 level 1\n1 1\n1 2\n", 3),
    ("1 1\n", 1),
    ("weight 12 level 1\n0 1\n", 2),
    ("weight 12 level 1\n1 x\n", 2),
    ("# comment\nweight 12 level 1\n1 1 2 3\n", 3),
])
def test_qexp_parse_errors(text, line):
    with pytest.raises(QExpParseError) as info:
        parse_qexp(text)
    assert info.value.lineno == line


def test_qexp_invariants():
    with pytest.raises(ValueError):
        QExpansion(Fraction(12), 1, ((Fraction(2), (1, 0)), (Fraction(1), (1, 0))), coefficient_bound=(10, 0))
    with pytest.raises(ValueError):
        QExpansion(Fraction(12), 1, ((Fraction(1), (5, 0)),), coefficient_bound=(1, 0))


def test_eval_zero_and_domain():
    z = parse_form("zero").qexp
    assert eval_qexp(z, hp(0, 1))[0] == 0
    with pytest.raises(DomainError):
        eval_qexp(delta_qexp(50), hp(0, -1))


def test_eval_refinement_consistency():
    digits = 30
    budget = PrecisionBudget(digits)
    with workdps(budget.working_dps):
        a, _ = eval_qexp(delta_qexp(60), hp(0, 1), budget)
        b, _ = eval_qexp(delta_qexp(120), hp(0, 1), budget)
        assert close(a, b, 10.0 ** (-digits + 3) * float(abs(b).mid()))


def test_eval_period_one():
    budget = PrecisionBudget(30)
    with workdps(40):
        q = delta_qexp(400)
        a, _ = eval_qexp(q, hp(0, "0.1"), budget)
        b, _ = eval_qexp(q, hp(1, "0.1"), budget)
        # the value (about 5e-16) comes out of heavy cancellation, so the
        # yardstick is absolute
        assert close(a, b, 1e-34)


def test_eval_insufficient_coefficients():
    q = delta_qexp(10)
    with workdps(40):
        with pytest.raises(InsufficientCoefficients) as info:
            eval_qexp(q, hp(0, "0.05"), PrecisionBudget(30))
    assert info.value.required > 10


def test_tail_bound_monotone_in_height():
    q = delta_qexp(100)
    start = Fraction(101)
    vals = [tail_bound(q, y, start) for y in (0.01, 0.02, 0.05, 0.1, 0.3)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[0] > vals[-1]


def test_delta_trivial_multiplier(delta):
    with workdps(40):
        for seed in range(3):
            g = random_word(1, 4, seed)
            if g.c == 0:
                continue
            assert close(infer_multiplier(delta, g), 1, 1e-15)
        assert infer_multiplier(delta, IDENTITY) == 1


def test_theta_translation_multiplier(theta):
    with workdps(40):
        chi = infer_multiplier(theta, T)
        want = (acb.pi() * acb(0, 1) / 4).exp()
        assert close(chi, want, 1e-20)
        # cross-check against the raw series at a point
        t = hp("0.1", "0.9")
        assert close(theta.series(t + 1), want * theta.series(t), 1e-25)


def test_non_modular_series_detected():
    # Delta with one coefficient altered is not modular for anything
    q = delta_qexp(300)
    terms = list(q.terms)
    terms[1] = (terms[1][0], (Fraction(-23), Fraction(0)))
    bad = Form(QExpansion(q.weight, 1, tuple(terms), "inferred", (2 * q.coefficient_bound[0], 6.0),
                          q.complete_to, "bad"))
    with workdps(40):
        with pytest.raises(NotModular):
            infer_multiplier(bad, GroupElement(1, 0, 1, 1))


def test_theta_is_modular_on_full_group(theta):
    # f_{1,2} = eta^3 / 2 carries a multiplier on all of SL2(Z)
    with workdps(40):
        chi = infer_multiplier(theta, GroupElement(1, 0, 1, 1))
        assert abs(float(abs(chi).mid()) - 1) < 1e-15


def _cocycle_sign(g1, g2, k, tau):
    """j(g1, g2 tau)^k j(g2, tau)^k / j(g1 g2, tau)^k with principal branches."""
    return (cpow(jfactor(g1, g2.act(tau)), k) * cpow(jfactor(g2, tau), k)
            / cpow(jfactor(g1 @ g2, tau), k))


@settings(max_examples=8)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_theta_multiplier_consistency(theta, s1, s2):
    g1 = random_word(8, 3, s1)
    g2 = random_word(8, 3, s2)
    with workdps(40):
        c1, c2, c12 = (infer_multiplier(theta, g) for g in (g1, g2, g1 @ g2))
        for c in (c1, c2, c12):
            assert abs(float(abs(c).mid()) - 1) < 1e-15
        w = _cocycle_sign(g1, g2, theta.weight, hp("0.1", "1.3"))
        assert close(c12, c1 * c2 * w, 1e-15)


def test_form_evaluation_reduction_matches_series(theta, delta):
    with workdps(50):
        for f, t in ((theta, hp("0.31", "0.12")), (delta, hp("0.31", "0.04"))):
            assert close(f(t), f.series(t), 1e-30 * max(1.0, float(abs(f.series(t)).mid())))


def test_parse_form_grammar(tmp_path):
    assert parse_form("delta").weight == 12
    assert parse_form("theta:1:2").level == 8
    assert parse_form("zero").is_zero
    path = tmp_path / "f.txt"
    path.write_text("weight 12 level 1\n1 1\n2 -24\n", encoding="utf-8")
    assert parse_form(f"file:{path}").qexp.coefficient(2) == -24
    with pytest.raises(ValueError):
        parse_form("eta")
