import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interpnorm import verify as V
from interpnorm.errors import CaseGateFailed, HypothesisViolated, SpecParseError
from interpnorm.kcalc import k_functional, parse_function
from interpnorm.norms import RISpaceSpec as R
from interpnorm.svfun import const, ell_power, make_broken_log as bl

G = V.log_grid(1e-6, 1e6, 25)
L1, L2, LINF = R(1), R(2), R(math.inf)
CHI = V.parse_positive("chi:1,e")


def small_corpus():
    return V.Corpus([k_functional(parse_function(s)) for s in ("const:1", "chi:0.3,0.7", "piecewise:3")],
                    0, ["min1t", "chi", "pw3"])


def test_parse_positive():
    assert V.parse_positive("chi:1,e")(2.0) == 1.0
    assert V.parse_positive("chi:1,e")(3.0) == 0.0
    assert V.parse_positive("powchi:-1,0,1")(0.5) == pytest.approx(2.0)
    assert V.parse_positive("zero")(1.0) == 0.0
    with pytest.raises(SpecParseError):
        V.parse_positive("chi:1")


def test_log_grid():
    g = V.log_grid(1e-2, 1e2, 5)
    assert np.allclose(g, [1e-2, 1e-1, 1, 10, 100])
    assert len(V.doubled_grid(g)) == 9


@pytest.mark.parametrize("variant", ["i", "ii"])
def test_sv_scaling_constant_linf(variant):
    r = V.verify_sv_scaling(const(), 1.0, LINF, G, variant, stability=False)
    assert r.passed and r.width < 1.01 + (variant == "ii")


def test_limiting_estimate_l1():
    r = V.verify_limiting_estimate(bl(-2, 1), L1, "zero", G)
    assert r.passed and 0.1 <= r.ratio_min and r.ratio_max <= 10


def test_limiting_estimate_linf():
    r = V.verify_limiting_estimate(bl(-1, 1), LINF, "zero", G)
    assert r.passed and r.ratio_min == pytest.approx(1.0, rel=1e-8)


def test_limiting_estimate_gate():
    with pytest.raises(HypothesisViolated):
        V.verify_limiting_estimate(const(), L1, "zero", G)


def test_embedding():
    r = V.verify_sv_embedding(bl(-2, -2), bl(0.5, -0.5), L2, "zero", G, stability=False)
    assert r.passed and r.one_sided and r.ratio_max < 1


def test_embedding_gate():
    with pytest.raises(HypothesisViolated):
        V.verify_sv_embedding(const(), bl(0.5, -0.5), L2, "zero", G)


def test_hardy_pass_and_gate():
    T = V.log_grid(10, 1e6, 13)
    r = V.verify_limit_hardy(bl(2, -2), CHI, L2, "cumulative", T, stability=False)
    assert r.passed and r.one_sided
    with pytest.raises(HypothesisViolated):
        V.verify_limit_hardy(ell_power(1), CHI, L2, "cumulative", T)


def test_hardy_zero_function_skips():
    T = V.log_grid(10, 1e6, 9)
    r = V.verify_limit_hardy(bl(2, -2), V.parse_positive("zero"), L2, "cumulative", T, stability=False)
    assert all(math.isnan(x) for x in r.ratios)


def test_hardy_forced_negative_control_grows():
    r = V.verify_limit_hardy(bl(1, 1), CHI, L1, "cumulative", V.log_grid(10, 1e12, 25), force=True,
                             stability=False)
    assert not r.passed and r.ratio_max / r.ratios[0] > 10
    assert any("hypothesis bypassed" in n for n in r.notes)


def test_key_equivalence_gate():
    with pytest.raises(HypothesisViolated):
        V.verify_key_equivalence(bl(-2, 1), bl(-1, 2), L2, L2, L2, CHI, "i", G)
    with pytest.raises(HypothesisViolated):
        V.verify_key_equivalence(const(), bl(1, -2), L2, L2, L2, CHI, "i", G)


def test_key_equivalence_zero_function():
    r = V.verify_key_equivalence(bl(-2, 1), bl(1, -2), L2, L2, L2, V.parse_positive("zero"), "i",
                                 V.log_grid(1e-2, 1e2, 8), stability=False)
    assert all(a == 0 and b == 0 for a, b in zip(r.lhs, r.rhs))


def test_holmstedt_zero_function():
    r = V.verify_holmstedt(parse_function("const:0"), 0.5, ell_power(-0.5), ell_power(-0.5), const(),
                           LINF, L1, L2, V.log_grid(1e-6, 0.5, 8))
    assert all(v == 0 for v in r.lhs)


def test_holmstedt_unit_inequalities():
    r = V.verify_holmstedt(parse_function("chi:0.3,0.7"), 0.5, ell_power(-0.5), ell_power(-0.5), const(),
                           LINF, L1, L2, V.log_grid(1e-6, 0.5, 9))
    assert r.passed and r.extra["unit_inequality_max"] <= 1 + V.THREE_LEVEL_TOL
    assert r.ratio_max <= 2 * (1 + V.THREE_LEVEL_TOL)


def test_change_of_variables_linf_exact():
    r = V.verify_change_of_variables(small_corpus(), 0.5, const(), bl(-1, 1), LINF)
    assert r.passed and r.width < 1 + 1e-6


def test_corollary_45_bounded_by_one():
    r = V.verify_corollary_45(const(), bl(-1, 0), bl(1, -1), L2, L2, L2, small_corpus())
    assert r.passed and r.ratio_max <= 1 + V.THREE_LEVEL_TOL


def test_corollary_45_gate():
    with pytest.raises(HypothesisViolated):
        V.verify_corollary_45(const(), bl(1, -1), bl(1, -1), L2, L2, L2, small_corpus())


@pytest.mark.parametrize("abp,m", [((1, 1, 2), 0.5), ((1, 2, 2), 1 / 3), ((2, 1, 3), 0.5)])
def test_thresholds_closed_form(abp, m):
    a, b, p = abp
    s = V.grand_small_setup(a, b, p, 0.0, ell_power(-1), L2)
    m1, m2 = V.reiteration_thresholds(s)
    assert m1 == pytest.approx(a / (a - b + p * b), rel=1e-12) == pytest.approx(m)
    assert m2 == pytest.approx(m1, rel=1e-12)


def test_select_case():
    assert [V.select_case(e, 0.5, 0.5) for e in (0, 0.25, 0.5, 0.75, 1)] == ["d", "a", "c", "b", "e"]


def test_case_gate():
    s = V.grand_small_setup(1, 1, 2, 0.25, ell_power(-1), L2)
    with pytest.raises(CaseGateFailed):
        V.verify_reiteration(s, small_corpus(), case="b")


@settings(max_examples=50)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(1.1, 6))
def test_phi_exponent_identity(a, b, p):
    pp = p / (p - 1)
    assert -a / p - b / pp == pytest.approx((b - a) / p - b, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(1.2, 4), st.floats(0, 1), st.floats(-30, 30))
def test_b_eta_closed_form(a, b, p, eta, x):
    s = V.grand_small_setup(a, b, p, eta, ell_power(-1), L2)
    pp = p / (p - 1)
    le = math.log1p(abs(x))
    # B_eta = ell^{-a(1-eta)/p + b eta/p'} * b(phi) with outer b = ell^-1 and log phi = ((b-a)/p - b) log ell
    expect = (-a * (1 - eta) / p + b * eta / pp) * le - math.log1p(abs(((b - a) / p - b) * le))
    assert float(s.log_B(eta, np.array([x]))[0]) == pytest.approx(expect, abs=1e-9)
    assert float(s.log_phi(np.array([x]))[0]) == pytest.approx(((b - a) / p - b) * le, abs=1e-12)


@settings(max_examples=40)
@given(st.lists(st.floats(0, 1e3), min_size=2, max_size=2))
def test_sandwich_arithmetic(v):
    i1, i2 = v
    assert max(i1, i2) <= i1 + i2 <= 2 * max(i1, i2)


def test_reiteration_small():
    s = V.grand_small_setup(1, 1, 2, 0.25, ell_power(-1), L2)
    r = V.verify_reiteration(s, small_corpus())
    assert r.passed and r.extra["case"] == "a" and r.width < 1e3


def test_seq_hardy_sweep():
    r = V.verify_seq_hardy_sweep()
    assert r.passed and r.extra["geometric_ratio"] == 2.0
    assert r.ratio_max <= 2 + 1e-9


def test_monotone_equivalent_report():
    r = V.verify_monotone_equivalent(bl(2, -1))
    assert r.passed and r.extra["sup_ratio"] <= r.extra["proof_bound"] < 1


def test_operations_registry():
    assert set(V.OPERATIONS) >= {"sv_scaling", "limiting_estimate", "sv_embedding", "limit_hardy",
                                 "seq_hardy", "key_equivalence", "discrete_equivalence", "holmstedt",
                                 "change_of_variables", "reiteration", "corollary_45",
                                 "monotone_equivalent"}
