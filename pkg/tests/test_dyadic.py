import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interpnorm import dyadic
from interpnorm.errors import HypothesisViolated, IndicesViolateHypothesis
from interpnorm.norms import RISpaceSpec, hat_norm
from interpnorm.svfun import const, make_broken_log


def test_lambda_values():
    assert float(dyadic.lambda_k(0)) == 1.0
    assert float(dyadic.lambda_k(1)) == pytest.approx(math.exp(math.e - 1), rel=1e-15)
    assert float(dyadic.lambda_k(-1)) == pytest.approx(math.exp(1 - math.e), rel=1e-15)


def test_unit_masses():
    m = dyadic.make_grid(-30, 30).masses()
    assert np.max(np.abs(m - 1)) < 1e-10


def test_grid_limits():
    with pytest.raises(Exception):
        dyadic.LambdaGrid(-50, 3)


@pytest.mark.parametrize("q", [1.0, 2.0, math.inf])
def test_discrete_norm_unit_mass(q):
    x = np.zeros(11)
    x[8] = 1.0
    assert dyadic.discrete_hat_norm(x, RISpaceSpec(q)) == 1.0


def test_discrete_norm_five_ones():
    assert dyadic.discrete_hat_norm(np.ones(5), RISpaceSpec(1)) == 5.0


def test_discrete_norm_matches_quadrature():
    g = dyadic.make_grid(-6, 6)
    x = np.random.default_rng(3).uniform(0.1, 2.0, g.ks.size)
    S = dyadic.step_function(x, g)
    lo, hi = float(g.lambdas[0]) / math.exp(math.log(g.lambdas[0]) * 0), float(g.lambdas[-1])
    lo = float(dyadic.lambda_k(g.k_min - 1))
    assert hat_norm(S, lo, hi, "L2") == pytest.approx(dyadic.discrete_hat_norm(x, RISpaceSpec(2)), rel=1e-8)


def test_geometric_hardy_bound_attained():
    sigma = 0.5 ** np.arange(64)
    x = np.zeros(64)
    x[0] = 1.0
    r = dyadic.seq_hardy_check(sigma, x, RISpaceSpec(1))
    assert r.ratio_max == 2.0 and r.passed


def test_zero_sequence():
    r = dyadic.seq_hardy_check(0.5 ** np.arange(10), np.zeros(10), RISpaceSpec(2))
    assert r.passed


def test_seeded_hardy_three():
    sigma = 3.0 ** -np.arange(40)
    x = np.random.default_rng(11).uniform(0, 1, 40)
    r = dyadic.seq_hardy_check(sigma, x, RISpaceSpec(2))
    lhs = np.sqrt(np.sum((sigma * np.cumsum(x)) ** 2))
    rhs = np.sqrt(np.sum((sigma * x) ** 2))
    assert r.ratio_max == pytest.approx(lhs / rhs, rel=1e-14)
    assert 1 <= r.ratio_max <= 1.5


def test_hardy_ratio_condition():
    with pytest.raises(HypothesisViolated):
        dyadic.seq_hardy_check(np.ones(5), np.ones(5), RISpaceSpec(1))


@settings(max_examples=60)
@given(st.floats(0.05, 0.95), st.integers(0, 10_000), st.sampled_from([1.0, 2.0, 3.0, math.inf]),
       st.sampled_from(["cumulative_below", "cumulative_above"]))
def test_hardy_bound_property(s, seed, q, direction):
    n = 40
    sigma = s ** np.arange(n) if direction == "cumulative_below" else s ** -np.arange(n)
    x = np.random.default_rng(seed).exponential(size=n)
    r = dyadic.seq_hardy_check(sigma, x, RISpaceSpec(q), direction)
    assert r.ratio_max <= 1 / (1 - s) + 1e-9


def test_monotone_broken_log_already_geometric():
    g = dyadic.make_grid(-10, 10, check=False)
    b = make_broken_log(1, -1)
    sig = dyadic.b_at_lambdas(b, g)
    assert np.allclose(sig, np.exp(-g.ks.astype(float)))
    phi, info = dyadic.monotone_equivalent(b, g)
    assert np.allclose(phi, sig)


def test_monotone_proof_bound():
    g = dyadic.make_grid(-20, 20, check=False)
    phi, info = dyadic.monotone_equivalent(make_broken_log(2, -1), g)
    assert info["sup_ratio"] <= info["proof_bound"] < 1


def test_monotone_core_fixes_bumps():
    ks = np.arange(-5, 6)
    sig = np.exp(-ks.astype(float))
    sig[7] *= 5.0
    phi = dyadic._monotone_core(sig, ks, -0.5, 0.5)
    r = phi[1:] / phi[:-1]
    assert np.all(r <= math.exp(-0.5) + 1e-12)
    eq = phi / sig
    assert eq.min() >= 1 - 1e-12 and eq.max() < 10


def test_monotone_rejects_constant():
    with pytest.raises(IndicesViolateHypothesis):
        dyadic.monotone_equivalent(const(), dyadic.make_grid(-5, 5, check=False))
