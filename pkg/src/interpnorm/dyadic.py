"""The lambda_k partition of (0, inf), discrete hat norms and sequence Hardy checks.

With ``w = sign(x) log(1 + |x|)`` and ``x = log t`` the points
``lambda_k`` sit exactly at ``w = k``, so ``I_k`` is the unit w-interval
``(k-1, k]`` and has unit ``dt/(t ell(t))`` mass by construction.  The
unit-mass claim is still checked independently in ``x`` with scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import HypothesisViolated, IndicesViolateHypothesis, OverflowRange
from .norms import RISpaceSpec, adaptive_log_integral, x_of_w
from .reports import RatioReport, make_report
from .svfun import PositiveFunction, SlowlyVarying

K_LIMIT = 40


def log_lambda(k):
    """``log lambda_k``: ``1 - e^-k`` for ``k < 0`` and ``e^k - 1`` otherwise."""
    k = np.asarray(k, dtype=float)
    return np.where(k < 0, 1.0 - np.exp(-k), np.expm1(k))


def lambda_k(k):
    with np.errstate(over="ignore"):
        return np.exp(log_lambda(k))


def interval_mass(k: int) -> float:
    """``int_{I_k} dt/(t ell(t))`` computed in ``x = log t`` by adaptive quadrature."""
    a, b = float(log_lambda(k - 1)), float(log_lambda(k))
    cuts = [a, 0.0, b] if a < 0.0 < b else [a, b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, _ = quad(lambda x: 1.0 / (1.0 + abs(x)), lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return total


@dataclass(frozen=True)
class LambdaGrid:
    k_min: int
    k_max: int

    def __post_init__(self):
        if not (self.k_min < 0 < self.k_max):
            raise ValueError("need k_min < 0 < k_max")
        if max(-self.k_min, self.k_max) > K_LIMIT:
            raise OverflowRange(f"|k| must stay within {K_LIMIT}")

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def log_lambdas(self) -> np.ndarray:
        return log_lambda(self.ks)

    @property
    def lambdas(self) -> np.ndarray:
        return lambda_k(self.ks)

    def masses(self) -> np.ndarray:
        return np.array([interval_mass(int(k)) for k in self.ks])


def make_grid(k_min: int, k_max: int, check: bool = True, tol: float = 1e-10) -> LambdaGrid:
    """Build the grid and verify unit masses of every ``I_k``."""
    g = LambdaGrid(int(k_min), int(k_max))
    if check:
        m = g.masses()
        if np.max(np.abs(m - 1.0)) > tol:
            raise ValueError(f"interval masses deviate from 1 by {np.max(np.abs(m - 1.0)):.3g}")
    return g


def discrete_hat_norm(x, E: RISpaceSpec, grid: LambdaGrid = None) -> float:
    """``||sum x_k chi_{I_k}||_{E^}``: the plain l_q norm, every I_k having unit mass."""
    x = np.abs(np.asarray(x, dtype=float))
    if grid is not None and x.shape != grid.ks.shape:
        raise ValueError("sequence length does not match the grid")
    if x.size == 0:
        return 0.0
    if math.isinf(E.q):
        return float(np.max(x))
    return float(np.sum(x ** E.q) ** (1.0 / E.q))


def step_function(x, grid: LambdaGrid) -> PositiveFunction:
    """``S x = sum x_k chi_{I_k}`` (zero outside the grid)."""
    ks = grid.ks
    with np.errstate(divide="ignore"):
        lx = np.log(np.abs(np.asarray(x, dtype=float)))

    def logfn(xx):
        w = np.sign(xx) * np.log1p(np.abs(xx))
        k = np.ceil(w).astype(int)
        inside = (k >= ks[0]) & (k <= ks[-1])
        out = np.full(np.shape(xx), -np.inf)
        out[inside] = lx[k[inside] - ks[0]]
        return out

    return PositiveFunction(logfn, "step", breaks=tuple(grid.log_lambdas))


def average(f, grid: LambdaGrid) -> np.ndarray:
    """``T f = (int_{I_k} f dt/(t ell(t)))_k``."""
    logf = f.log
    out = []
    for k in grid.ks:
        v = adaptive_log_integral(lambda w: logf(x_of_w(w)), float(k - 1), float(k))
        out.append(math.exp(v))
    return np.array(out)


def _cumulate(x, direction):
    return np.cumsum(x) if direction == "cumulative_below" else np.cumsum(x[::-1])[::-1]


def hardy_constant(sigma) -> tuple:
    s = np.asarray(sigma, dtype=float)
    r = s[1:] / s[:-1]
    return float(np.max(r)), float(np.min(r))


def seq_hardy_check(sigma, x, E: RISpaceSpec, direction: str = "cumulative_below",
                    experiment_id: str = "seq_hardy") -> RatioReport:
    """``||(sigma_k sum_{m<=k} x_m)|| / ||(sigma_k x_k)||`` against ``1/(1 - s)``.

    ``s = sup sigma_{k+1}/sigma_k < 1`` for ``cumulative_below``; for
    ``cumulative_above`` ``s = sup sigma_k/sigma_{k+1}`` and the sums run over
    ``m >= k``.  Sequences are nonnegative.
    """
    sigma = np.asarray(sigma, dtype=float)
    x = np.abs(np.asarray(x, dtype=float))
    if np.any(sigma <= 0):
        raise HypothesisViolated("sigma must be positive")
    rmax, rmin = hardy_constant(sigma)
    if direction == "cumulative_below":
        s = rmax
    elif direction == "cumulative_above":
        s = 1.0 / rmin
    else:
        raise ValueError(f"unknown direction {direction!r}")
    if not s < 1.0:
        raise HypothesisViolated(f"ratio condition fails: s = {s:.6g} is not below 1")
    lhs = discrete_hat_norm(sigma * _cumulate(x, direction), E)
    rhs = discrete_hat_norm(sigma * x, E)
    const = 1.0 / (1.0 - s)
    notes = [] if E.q >= 1 else ["q<1: reported, not claimed"]
    rep = make_report(experiment_id, [0], [lhs], [rhs], band=(1.0 - 1e-12, const + 1e-9),
                      one_sided=False, max_width=math.inf, notes=notes, grid_label="index",
                      extra={"constant": const, "sigma_ratio": s})
    return rep


def _monotone_core(sig, ks, alpha, beta):
    """Lemma-style monotonisation of ``sig`` (values at ``ks``) for decreasing ratios."""
    out = np.empty_like(sig)
    right = ks >= 0
    kr = ks[right]
    m = np.maximum.accumulate((np.exp(beta * kr) * sig[right])[::-1])[::-1]
    out[right] = np.exp(-beta * kr) * m
    left = ks <= 0
    kl = ks[left]
    base = sig[left].copy()
    base[-1] = out[ks == 0][0]
    d = np.maximum.accumulate((np.exp(-alpha * kl) * base)[::-1])[::-1]
    out[left] = np.exp(alpha * kl) * d
    return out


def b_at_lambdas(b: PositiveFunction, grid: LambdaGrid) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(b.log(grid.log_lambdas))


def monotone_equivalent(b: SlowlyVarying, grid: LambdaGrid, target: str = "ratio_below_1"):
    """Sequence equivalent to ``b(lambda_k)`` with ratios strictly below (above) 1.

    Returns ``(phi, info)``; ``info`` carries the ratio bound, the proof
    bound ``max(e^alpha, e^-beta)`` and the equivalence constant.
    """
    i0, iinf = b.assoc_indices()
    if iinf is None:
        raise IndicesViolateHypothesis("needs the associated function at infinity")
    ks = grid.ks
    sig = b_at_lambdas(b, grid)
    if target == "ratio_below_1":
        if not (i0.rho < 0 < iinf.pi):
            raise IndicesViolateHypothesis(f"need rho_B0 < 0 < pi_Binf, got {i0.rho:g}, {iinf.pi:g}")
        alpha, beta = i0.rho / 2.0, iinf.pi / 2.0
        phi = _monotone_core(sig, ks, alpha, beta)
    elif target == "ratio_above_1":
        if not (iinf.rho < 0 < i0.pi):
            raise IndicesViolateHypothesis(f"need rho_Binf < 0 < pi_B0, got {iinf.rho:g}, {i0.pi:g}")
        alpha, beta = iinf.rho / 2.0, i0.pi / 2.0
        phi = _monotone_core(sig[::-1], -ks[::-1], alpha, beta)[::-1]
    else:
        raise ValueError(f"unknown target {target!r}")
    r = phi[1:] / phi[:-1]
    eq = phi / sig
    info = {
        "alpha": alpha, "beta": beta,
        "sup_ratio": float(np.max(r)), "inf_ratio": float(np.min(r)),
        "proof_bound": max(math.exp(alpha), math.exp(-beta)),
        "equivalence": (float(np.min(eq)), float(np.max(eq))),
    }
    return phi, info
