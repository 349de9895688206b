import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interpnorm.errors import SpecParseError
from interpnorm.kcalc import k_functional, parse_function, random_piecewise, synthetic_kprofile
from interpnorm.spaces import SpaceSpec, check_nontrivial, grand_small_norms, norm, parse_space_string as P

MIN1T = synthetic_kprofile("min1t")
# mpmath nested quadrature in x = log t: K = min(1,t), theta = 1/2, a = 1, b = c = ell^-1, E = F = G = L2
RL_ORACLE = 0.83775074982861278


def test_theta_closed_form():
    assert float(norm(MIN1T, P("theta:0.5,b=const,E=Lq:2"))) == pytest.approx(math.sqrt(2), rel=1e-9)


def test_theta_zero_sup():
    assert float(norm(MIN1T, P("theta:0,b=const,E=Linf"))) == pytest.approx(1.0, rel=1e-9)


def test_theta_ordered_linear():
    # int_0^1 (t^{-1/2} ell(t) (t - t^2/2))^2 dt/t, mpmath
    K = k_functional(parse_function("linear"))
    v = float(norm(K, P("theta:0.5,b=ell,E=L2,mode=ordered_unit")))
    assert v == pytest.approx(1.9767163194063551, rel=1e-6)


@pytest.mark.parametrize("kind", ["R", "L"])
def test_sup_sup_is_one(kind):
    assert float(norm(MIN1T, P(f"{kind}:theta=0.5,F=Linf,E=Linf"))) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("kind", ["R", "L"])
def test_two_level_closed_form(kind):
    # the two ell^-2 integrals cancel and leave int = 2
    v = float(norm(MIN1T, P(f"{kind}:theta=0.5,b=ell_pow(-1),E=L2,F=L2")))
    assert v == pytest.approx(math.sqrt(2), rel=1e-8)


@pytest.mark.parametrize("kind", ["RL", "LR"])
def test_three_level_against_brute_force(kind):
    v = float(norm(MIN1T, P(f"{kind}:theta=0.5,b=ell_pow(-1),c=ell_pow(-1),E=L2,F=L2,G=L2")))
    assert v == pytest.approx(RL_ORACLE, rel=3e-4)


def test_collapse_sup_middle():
    K = k_functional(parse_function("chi:0.3,0.7"))
    a = float(norm(K, P("RL:theta=0.5,b=const,c=ell_pow(-1),F=Linf,G=L2,E=L2")))
    b = float(norm(K, P("L:theta=0.5,b=ell_pow(-1),F=L2,E=L2,outer=hat")))
    assert a == pytest.approx(b, rel=3e-4)


@pytest.mark.parametrize("p,alpha,val", [(2, 1, 0.56377693540918529), (3, 2, 0.56072211496305050)])
def test_grand_constant_function(p, alpha, val):
    # sup_t ell^{-alpha/p}(t) (1-t)^{1/p}, maximised with mpmath
    K = k_functional(parse_function("const:1"))
    assert float(norm(K, P(f"grand:p={p},alpha={alpha}"))) == pytest.approx(val, rel=1e-6)
    assert float(grand_small_norms(parse_function("const:1"), p, alpha)[0]) == pytest.approx(val, rel=1e-9)


def test_grand_characteristic():
    g, _ = grand_small_norms(parse_function("chi:0,0.5"), 2, 1)
    assert float(g) == pytest.approx(0.34898257411168678, rel=1e-9)


def test_small_characteristic_two_routes():
    K = k_functional(parse_function("chi:0,0.5"))
    direct = float(norm(K, P("small:p=2,alpha=1")))
    _, s = grand_small_norms(parse_function("chi:0,0.5"), 2, 1)
    assert direct == pytest.approx(1.2243635170376620, rel=1e-6)
    assert float(s) == pytest.approx(direct, rel=1e-6)


def test_small_constant_function():
    K = k_functional(parse_function("const:1"))
    assert float(norm(K, P("small:p=3,alpha=2"))) == pytest.approx(4.5234891974178666, rel=1e-6)


def test_zero_function():
    K = k_functional(parse_function("const:0"))
    assert float(norm(K, P("small:p=2,alpha=1"))) == 0.0
    assert float(norm(K, P("RL:theta=0.5,b=ell_pow(-1),c=ell_pow(-1),E=L2,F=L2,G=L2"))) == 0.0


def test_nontriviality():
    assert check_nontrivial(P("theta:0.5,b=const,E=Linf"))[0]
    ok, why = check_nontrivial(P("theta:0,b=const,E=L1"))
    assert not ok and why
    assert not check_nontrivial(P("R:theta=0,b=broken_log(0,-2),a=const,F=Linf,E=L1"))[0]
    assert check_nontrivial(P("grand:p=2,alpha=1"))[0]


def test_spec_json_roundtrip():
    s = P("RL:theta=0.25,b=broken_log(-1,1),c=ell_pow(-1),E=L2,F=Linf,G=L1")
    assert SpaceSpec.from_json(s.to_json()).to_json() == s.to_json()


def test_spec_parse_errors():
    for bad in ("nokind:theta=1", "theta:0.5,zz=1", "theta:abc"):
        with pytest.raises(SpecParseError):
            P(bad)


def test_breakdown_profile():
    v = norm(MIN1T, P("R:theta=0.5,b=ell_pow(-1),F=L2,E=L2"), breakdown=True)
    assert set(v.breakdown) >= {"t", "inner"}
    assert len(v.breakdown["t"]) == len(v.breakdown["inner"])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 5000), st.sampled_from([(2, 1), (3, 2), (2.5, 0.5)]))
def test_grand_small_identification(seed, pa):
    p, alpha = pa
    f = random_piecewise(seed)
    K = k_functional(f)
    g, s = grand_small_norms(f, p, alpha)
    assert float(norm(K, P(f"grand:p={p},alpha={alpha}"))) == pytest.approx(float(g), rel=1e-3)
    assert float(norm(K, P(f"small:p={p},alpha={alpha}"))) == pytest.approx(float(s), rel=1e-3)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 5000), st.floats(0.1, 10))
def test_homogeneity(seed, c):
    f = random_piecewise(seed)
    spec = P("R:theta=0.5,b=ell_pow(-1),F=L2,E=L2")
    K1 = k_functional(f)
    Kc = k_functional(type(f)(form=f.form, breaks=f.breaks, values=c * f.values))
    assert float(norm(Kc, spec)) == pytest.approx(c * float(norm(K1, spec)), rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 5000))
def test_embedding_chain(seed):
    # ||f||_R <= ||f||_theta <= ||f||_L up to constants for F = Linf (sup dominates the point value)
    K = k_functional(random_piecewise(seed))
    th = float(norm(K, P("theta:0.5,b=ell_pow(-1),E=L2")))
    r = float(norm(K, P("R:theta=0.5,b=ell_pow(-1),F=Linf,E=L2")))
    l = float(norm(K, P("L:theta=0.5,b=ell_pow(-1),F=Linf,E=L2")))
    assert th <= r * (1 + 1e-9) and th <= l * (1 + 1e-9)
