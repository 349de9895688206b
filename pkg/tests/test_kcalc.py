import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interpnorm.errors import SpecParseError
from interpnorm.kcalc import (check_quasiconcave, default_corpus, k_functional, parse_function, piecewise,
                              random_piecewise, rearrange, synthetic_kprofile)


def _steps(f):
    return list(np.round(f.breaks, 12)), list(np.round(f.values, 12))


def test_rearrange_characteristic():
    assert _steps(rearrange(parse_function("chi:0.3,0.7"))) == ([0.0, 0.4, 1.0], [1.0, 0.0])


def test_rearrange_linear():
    fs = rearrange(parse_function("linear"))
    s = np.array([0.1, 0.5, 0.9])
    assert np.allclose(fs(s), 1 - s, atol=1e-3)


def test_rearrange_sorts_steps():
    f = piecewise([0, 0.25, 0.5, 1], [2, 5, 1])
    assert _steps(rearrange(f)) == ([0.0, 0.25, 0.5, 1.0], [5.0, 2.0, 1.0])


@pytest.mark.parametrize("s0", [0.1, 0.5, 1.0])
def test_k_of_characteristic(s0):
    K = k_functional(parse_function(f"chi:0,{s0}"))
    t = np.logspace(-6, 6, 1000)
    assert np.max(np.abs(K(t) - np.minimum(t, s0))) < 1e-12


def test_k_of_linear():
    K = k_functional(parse_function("linear"))
    t = np.array([0.1, 0.5, 1.0, 3.0])
    expect = np.where(t <= 1, t - t ** 2 / 2, 0.5)
    assert np.allclose(K(t), expect, atol=1e-6)


def test_k_of_piecewise_at_half():
    K = k_functional(piecewise([0, 0.25, 0.5, 1], [2, 5, 1]))
    assert float(K(0.5)) == pytest.approx(1.75, abs=1e-14)


def test_synthetic_profiles():
    K = synthetic_kprofile("min1t")
    assert float(K(2.0)) == 1.0 and float(K(0.5)) == 0.5
    P = synthetic_kprofile("power:1,0")
    t = np.logspace(-4, 3, 50)
    assert np.allclose(P(t), np.minimum(t, 1.0))
    C = synthetic_kprofile("concave:20,7")
    assert check_quasiconcave(C)


def test_parse_errors():
    for bad in ("chi:1", "nothing", "piecewise:x"):
        with pytest.raises(SpecParseError):
            parse_function(bad)


def test_file_function(tmp_path):
    p = tmp_path / "f.txt"
    p.write_text("# empty\n")
    assert k_functional(parse_function(f"file:{p}")).is_zero
    p.write_text("0 3\n0.5 1\n")
    assert float(k_functional(parse_function(f"file:{p}"))(1.0)) == pytest.approx(2.0)


def test_default_corpus_size():
    c = default_corpus()
    assert len(c) == 12
    assert all(check_quasiconcave(K) for K in c)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_k_properties(seed):
    K = k_functional(random_piecewise(seed))
    t = np.logspace(-5, 5, 300)
    k = K(t)
    assert np.all(np.diff(k) >= -1e-12)            # nondecreasing
    assert np.all(np.diff(k / t) <= 1e-12)          # K(t)/t nonincreasing
    assert k[-1] == pytest.approx(K.total)          # K(inf) = ||f||_L1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_rearrangement_preserves_mass(seed):
    f = random_piecewise(seed)
    g = rearrange(f)
    assert np.sum(g.values * np.diff(g.breaks)) == pytest.approx(np.sum(f.values * np.diff(f.breaks)))
    assert np.all(np.diff(g.values) <= 0)
