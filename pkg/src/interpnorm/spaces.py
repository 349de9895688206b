"""Norm functionals of the real interpolation constructions.

Every functional takes a K-profile (anything with ``.log(x) = log K(e^x)``)
and a :class:`SpaceSpec`.  Values are plain floats where ``inf`` means the
function is outside the space.

Two-level norms (R, L) use an exact cumulative inner profile and adaptive
outer quadrature.  Three-level norms (RL, LR) work on a node grid: the
inner norm over (t, u) is assembled from panel integrals between nodes, the
middle and outer norms use trapezoidal sums in ``w`` plus tail terms.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import SpecParseError
from .kcalc import FunctionSample, KProfile, k_functional, rearrange
from .norms import (RISpaceSpec, NormProfile, W_MAX, log_norm_x, log_sup_w, log_density,
                    w_of_x, x_of_w)
from .svfun import PositiveFunction, const, ell_power, parse_weight

KINDS = ("theta", "R", "L", "RL", "LR", "grand", "small")
NODE_FINE = 1.0 / 32     # node spacing in w for |w| <= 6
NODE_COARSE = 0.25       # node spacing in w for 6 < |w| <= NODE_CAP
NODE_CAP = 60.0
FOCUS_WIDTH = 0.25       # extra nodes within this w-distance of a break
FOCUS_LIMIT = 16


@dataclass
class NormValue:
    value: float
    breakdown: Optional[dict] = None

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class SpaceSpec:
    """Full parameterisation of one construction.

    ``theta`` for theta/R/L/RL/LR; ``p`` and ``alpha`` for grand/small.
    Weights default to the constant 1 and spaces to ``L_inf``.
    ``integrand`` selects ``s^-theta K(s)`` (``"kfunctional"``) or
    ``s^(1-theta) f*(s)`` (``"rearrangement"``) as the innermost function.
    """

    kind: str
    theta: float = 0.5
    b: PositiveFunction = field(default_factory=const)
    a: PositiveFunction = field(default_factory=const)
    c: PositiveFunction = field(default_factory=const)
    E: RISpaceSpec = RISpaceSpec(math.inf)
    F: RISpaceSpec = RISpaceSpec(math.inf)
    G: RISpaceSpec = RISpaceSpec(math.inf)
    outer_measure: str = "tilde"
    mode: str = "full_line"
    integrand: str = "kfunctional"
    p: Optional[float] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecParseError(f"unknown kind {self.kind!r}")
        if self.mode not in ("full_line", "ordered_unit"):
            raise SpecParseError(f"unknown mode {self.mode!r}")
        if self.outer_measure not in ("tilde", "hat"):
            raise SpecParseError(f"unknown outer measure {self.outer_measure!r}")
        if self.integrand not in ("kfunctional", "rearrangement"):
            raise SpecParseError(f"unknown integrand {self.integrand!r}")
        if self.kind in ("grand", "small"):
            if self.p is None or self.alpha is None or not self.p > 1 or not self.alpha > 0:
                raise SpecParseError("grand/small need p > 1 and alpha > 0")
        elif not 0.0 <= self.theta <= 1.0:
            raise SpecParseError("theta must lie in [0, 1]")

    # serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.kind, "mode": self.mode}
        if self.kind in ("grand", "small"):
            d.update(p=self.p, alpha=self.alpha)
            return d
        d["theta"] = self.theta
        used = {"theta": "b", "R": "ba", "L": "ba", "RL": "cba", "LR": "cba"}[self.kind]
        d["weights"] = {k: getattr(self, k).name for k in used}
        sp = {"theta": "E", "R": "EF", "L": "EF", "RL": "EFG", "LR": "EFG"}[self.kind]
        d["spaces"] = {k: str(getattr(self, k)) for k in sp}
        d["outer_measure"] = self.outer_measure
        if self.integrand != "kfunctional":
            d["integrand"] = self.integrand
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise SpecParseError("space descriptor needs a 'kind'")
        kind = d["kind"]
        if kind in ("grand", "small"):
            return grand_small_spec(kind, float(d["p"]), float(d["alpha"]))
        kw = {"kind": kind}
        if "theta" in d:
            kw["theta"] = float(d["theta"])
        for k, v in (d.get("weights") or {}).items():
            if k not in ("a", "b", "c"):
                raise SpecParseError(f"unknown weight slot {k!r}")
            kw[k] = parse_weight(v) if isinstance(v, str) else v
        for k, v in (d.get("spaces") or {}).items():
            if k not in ("E", "F", "G"):
                raise SpecParseError(f"unknown space slot {k!r}")
            kw[k] = RISpaceSpec.parse(v)
        for k in ("mode", "outer_measure", "integrand"):
            if k in d:
                kw[k] = d[k]
        if kind in ("RL", "LR") and "outer_measure" not in d:
            kw["outer_measure"] = "hat"
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "SpaceSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecParseError(f"bad JSON: {exc}") from None


def grand_small_spec(kind: str, p: float, alpha: float) -> SpaceSpec:
    """Grand (R-type, outer L_inf) or small (L-type, outer L_1) Lebesgue spec."""
    return SpaceSpec(kind=kind, p=float(p), alpha=float(alpha), mode="ordered_unit",
                     integrand="rearrangement")


def expand(spec: SpaceSpec) -> SpaceSpec:
    """Rewrite grand/small into the underlying R/L parameterisation."""
    if spec.kind == "grand":
        p, al = spec.p, spec.alpha
        return SpaceSpec("R", theta=1.0 - 1.0 / p, b=ell_power(-al / p), a=const(),
                         E=RISpaceSpec(math.inf), F=RISpaceSpec(p), mode="ordered_unit",
                         integrand="rearrangement", outer_measure="tilde")
    if spec.kind == "small":
        p, al = spec.p, spec.alpha
        pp = p / (p - 1.0)
        return SpaceSpec("L", theta=1.0 - 1.0 / p, b=ell_power(al / pp - 1.0), a=const(),
                         E=RISpaceSpec(1.0), F=RISpaceSpec(p), mode="ordered_unit",
                         integrand="rearrangement", outer_measure="tilde")
    return spec


def parse_space_string(text: str) -> SpaceSpec:
    """``kind:key=value,...`` e.g. ``grand:p=2,alpha=1`` or ``theta:0.5,b=const,E=Lq:2``.

    Weight values may contain commas inside parentheses.
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    items, depth, cur = [], 0, ""
    for ch in rest:
        if ch == "," and depth == 0:
            items.append(cur)
            cur = ""
            continue
        depth += (ch == "(") - (ch == ")")
        cur += ch
    if cur:
        items.append(cur)
    d: dict = {"kind": kind, "weights": {}, "spaces": {}}
    for it in items:
        it = it.strip()
        if not it:
            continue
        if "=" not in it:
            key = "p" if kind in ("grand", "small") else "theta"
            try:
                d[key] = float(it)
            except ValueError:
                raise SpecParseError(f"bad number {it!r}") from None
            continue
        k, v = (s.strip() for s in it.split("=", 1))
        if k in ("a", "b", "c"):
            d["weights"][k] = v
        elif k in ("E", "F", "G"):
            d["spaces"][k] = v
        elif k in ("p", "alpha", "theta"):
            try:
                d[k] = float(v)
            except ValueError:
                raise SpecParseError(f"bad number {v!r}") from None
        elif k in ("mode", "outer_measure", "integrand"):
            d[k] = v
        elif k == "outer":
            d["outer_measure"] = v
        else:
            raise SpecParseError(f"unknown key {k!r}")
    return SpaceSpec.from_dict(d)


# helpers ------------------------------------------------------------------------

def _range(spec):
    return (-math.inf, 0.0) if spec.mode == "ordered_unit" else (-math.inf, math.inf)


def _outer(spec):
    return "log_homogeneous" if spec.outer_measure == "hat" else "homogeneous"


def _breaks(*fs):
    out = set()
    for f in fs:
        out.update(getattr(f, "breaks", ()))
    return sorted(out)


def _inner_log(K, spec):
    """``log`` of the innermost function ``s^-theta a(s) K(s)`` (or its f* form)."""
    th, a = spec.theta, spec.a
    if spec.integrand == "rearrangement":
        if not hasattr(K, "fstar_log"):
            raise SpecParseError("rearrangement integrand needs a profile built from a function")
        return lambda x: (1.0 - th) * x + a.log(x) + K.fstar_log(x)
    return lambda x: -th * x + a.log(x) + K.log(x)


def _exp(v):
    with np.errstate(over="ignore"):
        return float(np.exp(v))


# theta, R, L ------------------------------------------------------------------------

def log_norm_theta(K, theta, b, E, mode="full_line", outer_measure="tilde") -> float:
    xa, xb = (-math.inf, 0.0) if mode == "ordered_unit" else (-math.inf, math.inf)
    meas = "log_homogeneous" if outer_measure == "hat" else "homogeneous"
    return log_norm_x(lambda x: -theta * x + b.log(x) + K.log(x), xa, xb, E.q, meas,
                      _breaks(K, b))


def norm_theta(K, theta: float, b: PositiveFunction, E: RISpaceSpec, mode: str = "full_line") -> NormValue:
    """``||t^-theta b(t) K(t)||`` over (0, inf) or (0, 1) with measure dt/t."""
    if not 0.0 <= theta <= 1.0:
        raise SpecParseError("theta must lie in [0, 1]")
    return NormValue(_exp(log_norm_theta(K, theta, b, E, mode)))


def inner_profile(K, spec: SpaceSpec, side: str) -> NormProfile:
    xa, xb = _range(spec)
    return NormProfile(_inner_log(K, spec), spec.F.q, side, xa, xb, "homogeneous",
                       _breaks(K, spec.a))


def _two_level(K, spec: SpaceSpec, side: str, breakdown: bool):
    prof = inner_profile(K, spec, side)
    b = spec.b
    xa, xb = _range(spec)

    def logo(x):
        return b.log(x) + prof.log_at_x(x)

    val = log_norm_x(logo, xa, xb, spec.E.q, _outer(spec), _breaks(K, b, spec.a))
    bd = None
    if breakdown:
        ts = np.logspace(-6, 0 if spec.mode == "ordered_unit" else 6, 25)
        bd = {"t": ts.tolist(), "inner": prof(ts).tolist()}
    return NormValue(_exp(val), bd)


def norm_R(K, spec: SpaceSpec, breakdown: bool = False) -> NormValue:
    """``|| b(t) ||s^-theta a(s) K(s)||_{F(t, inf)} ||_E`` (inner (t, 1) when ordered)."""
    spec = expand(spec)
    if spec.kind != "R":
        raise SpecParseError("norm_R needs an R spec")
    return _two_level(K, spec, "right", breakdown)


def norm_L(K, spec: SpaceSpec, breakdown: bool = False) -> NormValue:
    """``|| b(t) ||s^-theta a(s) K(s)||_{F(0, t)} ||_E``."""
    spec = expand(spec)
    if spec.kind != "L":
        raise SpecParseError("norm_L needs an L spec")
    return _two_level(K, spec, "left", breakdown)


# RL, LR ------------------------------------------------------------------------------

def _node_indices(grid: np.ndarray, cap: float = NODE_CAP, focus=()) -> np.ndarray:
    lo, hi = max(grid[0], -cap), min(grid[-1], cap)
    fine = np.arange(-6.0, 6.0 + 1e-12, NODE_FINE)
    coarse = np.arange(6.0 + NODE_COARSE, cap + 1e-12, NODE_COARSE)
    targets = np.concatenate([-coarse[::-1], fine, coarse, [lo, hi]])
    targets = targets[(targets >= lo) & (targets <= hi)]
    idx = np.searchsorted(grid, targets)
    # every profile node close to a break of K or the weights
    if 0 < len(focus) <= FOCUS_LIMIT:
        near = np.zeros(len(grid), dtype=bool)
        for wb in focus:
            near |= np.abs(grid - wb) <= FOCUS_WIDTH
        near &= (grid >= lo) & (grid <= hi)
        idx = np.concatenate([idx, np.flatnonzero(near)])
    idx = np.clip(idx, 0, len(grid) - 1)
    return np.unique(idx)


def _trap_log_weights(w):
    d = np.diff(w)
    wt = np.zeros_like(w)
    wt[:-1] += d / 2
    wt[1:] += d / 2
    with np.errstate(divide="ignore"):
        return np.log(wt)


def _tail_from_nodes(w, logv, end: int) -> float:
    """log of the integral beyond the last (end=1) or first (end=-1) node, power-law in w."""
    if end > 0:
        we, ve = w[-1], logv[-1]
    else:
        we, ve = w[0], logv[0]
    if ve == -math.inf:
        return -math.inf
    if not math.isfinite(ve):
        return math.inf
    aw = abs(we)
    wmid = np.sign(we) * aw / 2
    vm = float(np.interp(wmid, w, logv))
    if not math.isfinite(vm):
        return math.inf
    p = (vm - ve) / math.log(2.0)
    if not p > 1.0:
        return math.inf
    return ve + math.log(aw / (p - 1.0))


def _combine_outer(w, logv, q, open_lo: bool, open_hi: bool) -> float:
    if math.isinf(q):
        best = float(np.max(logv))
        # a nondecaying sup at an open infinite end is reported as inf
        for flag, e, nb in ((open_hi, -1, -2), (open_lo, 0, 1)):
            if flag and logv[e] == best and logv[e] - logv[nb] > math.log(1.01):
                return math.inf
        return best
    lv = q * logv
    with np.errstate(invalid="ignore"):
        total = float(logsumexp(lv + _trap_log_weights(w)))
    if open_hi:
        total = float(np.logaddexp(total, _tail_from_nodes(w, lv, 1)))
    if open_lo:
        total = float(np.logaddexp(total, _tail_from_nodes(w, lv, -1)))
    return total / q


def middle_nodes(K, spec: SpaceSpec, kind: str):
    """Middle-level values of an RL/LR norm on the node grid.

    Returns ``(w, log_mid)`` with ``mid(u) = || b(t) ||s^-theta a K||_{G(t,u)} ||_{F(0,u)}``
    for ``kind="RL"`` and ``|| b(t) ||...||_{G(u,t)} ||_{F(u,inf)}`` for ``"LR"``.
    """
    xa, xb = _range(spec)
    side = "left" if kind == "RL" else "right"
    brk = _breaks(K, spec.a)
    prof = NormProfile(_inner_log(K, spec), spec.G.q, side, xa, xb, "homogeneous", brk)
    g = prof.grid
    focus = [float(w_of_x(v)) for v in _breaks(K, spec.a, spec.b)]
    idx = _node_indices(g, focus=focus)
    wn = g[idx]
    xn = x_of_w(wn)
    n = len(idx)
    qG, qF = spec.G.q, spec.F.q
    red = np.maximum.reduceat if math.isinf(qG) else np.logaddexp.reduceat
    acc = np.maximum.accumulate if math.isinf(qG) else np.logaddexp.accumulate
    seg = red(prof.panel, idx[:-1]) if n > 1 else np.array([])
    full = prof.cum[idx]   # inner norm^q over (lo, u) [RL] or (u, hi) [LR]
    inv = 1.0 if math.isinf(qG) else 1.0 / qG
    logb = spec.b.log(xn)
    dens = log_density(wn, "homogeneous")
    # tail of the middle norm outside the node range
    if kind == "RL":
        tail_b = (log_sup_w(lambda w: spec.b.log(x_of_w(w)), -math.inf, wn[0]) if math.isinf(qF)
                  else log_norm_x(spec.b.log, -math.inf, float(xn[0]), qF, "homogeneous", spec.b.breaks))
        has_tail = True
    else:
        has_tail = xb > xn[-1] + 1e-12
        tail_b = -math.inf
        if has_tail:
            tail_b = (log_sup_w(lambda w: spec.b.log(x_of_w(w)), wn[-1], w_of_x(xb)) if math.isinf(qF)
                      else log_norm_x(spec.b.log, float(xn[-1]), xb, qF, "homogeneous", spec.b.breaks))
    # S[i, j] = log of the inner q-power over (w_i, w_j), i < j
    S = np.full((n, n), -math.inf)
    for i in range(n - 1):
        S[i, i + 1:] = acc(seg[i:])
    lh = S * inv if not math.isinf(qG) else S
    if kind == "RL":
        mask = np.triu(np.ones((n, n), dtype=bool), 1)      # i < j, column j is the node u_j
        lv = np.where(mask, logb[:, None] + lh, -math.inf)
    else:
        mask = np.triu(np.ones((n, n), dtype=bool), 1)      # j < i, row j is the node u_j
        lv = np.where(mask, logb[None, :] + lh, -math.inf).T
    th = tail_b + full * inv if has_tail else np.full(n, -math.inf)
    if math.isinf(qF):
        mid = np.maximum(np.max(lv, axis=0), th)
    else:
        # trapezoid weights; the endpoint at u_j carries H = 0 and drops out
        d = np.diff(wn)
        wt = np.zeros(n)
        wt[:-1] += d / 2
        wt[1:] += d / 2
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = qF * lv + (dens + np.log(wt))[:, None]
            m = np.max(terms, axis=0)
            mf = np.where(np.isfinite(m), m, 0.0)
            sm = mf + np.log(np.sum(np.exp(terms - mf), axis=0))
        sm = np.where(np.isfinite(m), sm, -math.inf)
        mid = np.logaddexp(sm, qF * th) / qF
    return wn, mid


def outer_from_nodes(w, log_vals, E: RISpaceSpec, mode: str) -> float:
    """log of the hat norm over the node grid (plus power-law tails)."""
    return _combine_outer(w, log_vals, E.q, True, mode != "ordered_unit")


def _three_level(K, spec: SpaceSpec, kind: str, breakdown: bool):
    wn, mid = middle_nodes(K, spec, kind)
    xn = x_of_w(wn)
    val = outer_from_nodes(wn, spec.c.log(xn) + mid, spec.E, spec.mode)
    bd = None
    if breakdown:
        bd = {"u": np.exp(xn).tolist(), "middle": np.exp(mid).tolist()}
    return NormValue(_exp(val), bd)


def norm_RL(K, spec: SpaceSpec, breakdown: bool = False) -> NormValue:
    """``|| c(u) || b(t) ||s^-theta a K||_{G(t,u)} ||_{F(0,u)} ||_{E^}``."""
    if spec.kind != "RL":
        raise SpecParseError("norm_RL needs an RL spec")
    return _three_level(K, replace(spec, outer_measure="hat"), "RL", breakdown)


def norm_LR(K, spec: SpaceSpec, breakdown: bool = False) -> NormValue:
    """``|| c(u) || b(t) ||s^-theta a K||_{G(u,t)} ||_{F(u,inf)} ||_{E^}`` (F(u,1) ordered)."""
    if spec.kind != "LR":
        raise SpecParseError("norm_LR needs an LR spec")
    return _three_level(K, replace(spec, outer_measure="hat"), "LR", breakdown)


def norm(K, spec: SpaceSpec, breakdown: bool = False) -> NormValue:
    """Dispatch on ``spec.kind``; the zero profile has norm 0."""
    if getattr(K, "is_zero", False):
        return NormValue(0.0)
    s = expand(spec)
    if s.kind == "theta":
        meas = s.outer_measure
        return NormValue(_exp(log_norm_theta(K, s.theta, s.b, s.E, s.mode, meas)))
    return {"R": norm_R, "L": norm_L, "RL": norm_RL, "LR": norm_LR}[s.kind](K, s, breakdown)


def intersection_norm(*values) -> float:
    """Norm of an intersection: the maximum of the member norms."""
    return max(float(v) for v in values)


# nontriviality --------------------------------------------------------------------

def _finite(logv: float) -> bool:
    return logv < math.inf


def check_nontrivial(spec: SpaceSpec):
    """Evaluate the finiteness conditions that keep the space nontrivial.

    Returns ``(ok, reasons)``; ``reasons`` lists every failed condition.
    Ordered specs drop conditions on (1, inf) and add ``||a||_F(0,1) < inf``
    when ``theta = 1``.
    """
    s = expand(spec)
    meas = _outer(s)
    q = s.E.q
    th = s.theta
    ordered = s.mode == "ordered_unit"
    fails = []

    def bnorm(lo, hi):
        return log_norm_x(s.b.log, lo, hi, q, meas, s.b.breaks)

    def inner_b(side, lo, hi, ilo=None, ihi=None):
        # || b(t) ||a||_F(t,ihi) ||_E(lo,hi)  (side right) or F(ilo,t) (side left)
        prof = NormProfile(s.a.log, s.F.q, side, ilo if ilo is not None else -math.inf,
                           ihi if ihi is not None else math.inf, "homogeneous", s.a.breaks)
        return log_norm_x(lambda x: s.b.log(x) + prof.log_at_x(x), lo, hi, q, meas,
                          _breaks(s.a, s.b))

    if s.kind == "theta":
        if th == 0 and not ordered and not _finite(bnorm(0.0, math.inf)):
            fails.append("theta=0 needs ||b||_E(1,inf) < inf")
        if th == 1 and not _finite(bnorm(-math.inf, 0.0)):
            fails.append("theta=1 needs ||b||_E(0,1) < inf")
    elif s.kind == "R":
        if not _finite(bnorm(-math.inf, 0.0)):
            fails.append("needs ||b||_E(0,1) < inf")
        if th == 0 and not ordered and not _finite(inner_b("right", 0.0, math.inf)):
            fails.append("theta=0 needs || b ||a||_F(t,inf) ||_E(1,inf) < inf")
        if th == 1:
            if not _finite(inner_b("right", -math.inf, 0.0, ihi=0.0)):
                fails.append("theta=1 needs || b ||a||_F(t,1) ||_E(0,1) < inf")
            if not _finite(log_norm_x(lambda x: s.a.log(x) + s.b.log(x), -math.inf, 0.0, q, meas,
                                      _breaks(s.a, s.b))):
                fails.append("theta=1 needs ||a b||_E(0,1) < inf")
    elif s.kind == "L":
        if 0 < th < 1 and not ordered and not _finite(bnorm(0.0, math.inf)):
            fails.append("needs ||b||_E(1,inf) < inf")
        if th == 0 and not ordered and not _finite(inner_b("left", 0.0, math.inf, ilo=0.0)):
            fails.append("theta=0 needs || b ||a||_F(1,t) ||_E(1,inf) < inf")
        if th == 1:
            if not ordered and not _finite(bnorm(0.0, math.inf)):
                fails.append("theta=1 needs ||b||_E(1,inf) < inf")
            if not _finite(inner_b("left", -math.inf, 0.0)):
                fails.append("theta=1 needs || b ||a||_F(0,t) ||_E(0,1) < inf")
    if ordered and th == 1 and s.kind in ("theta", "R", "L"):
        if not _finite(log_norm_x(s.a.log, -math.inf, 0.0, s.F.q, "homogeneous", s.a.breaks)):
            fails.append("ordered theta=1 needs ||a||_F(0,1) < inf")
    return (not fails, fails)


# grand and small Lebesgue norms by a separate route ------------------------------------

def grand_small_norms(f, p: float, alpha: float):
    """Grand and small Lebesgue norms straight from the rearrangement.

    With ``P(t) = int_0^t f*^p`` (piecewise linear),
    ``||s^(1/p) f*||_{Lp~(t,1)}^p = P(1) - P(t)``.  The grand norm maximises
    ``ell(t)^(-alpha/p) (P(1)-P(t))^(1/p)`` piece by piece with scipy's
    bounded scalar minimiser; the small norm integrates
    ``ell(t)^(alpha/p' - 1) P(t)^(1/p) dt/t`` with scipy.integrate.quad.
    """
    if isinstance(f, FunctionSample):
        fs = f if (f.form == "piecewise_constant" and f.nonincreasing) else rearrange(f)
        knots, vals = fs.breaks, fs.values
    elif isinstance(f, KProfile):
        knots, vals = f.knots, f.slopes
    else:
        raise TypeError("need a FunctionSample or a KProfile")
    if not (p > 1 and alpha > 0):
        raise SpecParseError("need p > 1 and alpha > 0")
    pp = p / (p - 1.0)
    cumP = np.concatenate([[0.0], np.cumsum(vals ** p * np.diff(knots))])
    P1 = float(cumP[-1])
    if P1 == 0.0:
        return NormValue(0.0), NormValue(0.0)

    def P(t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(vals) - 1)
        return cumP[i] + vals[i] ** p * (t - knots[i])

    ga = -alpha / p

    def grand_log(x):  # x = log t < 0
        x = np.asarray(x, dtype=float)
        rem = np.maximum(P1 - P(np.exp(x)), 0.0)
        with np.errstate(divide="ignore"):
            return ga * np.log1p(-x) + np.log(rem) / p

    # coarse scan of every piece at once, then bounded refinement near the best samples
    lk = np.log(np.maximum(knots, 1e-300))
    lk[0] = min(lk[1] - 60.0, -60.0)
    s = np.linspace(0.0, 1.0, 17)
    xs = (lk[1:-1, None] + (lk[2:] - lk[1:-1])[:, None] * s[None, :]).ravel()
    # the first piece reaches down to t = e^-60; sample it evenly in log(1 - x)
    head = -np.expm1(np.linspace(math.log1p(-lk[0]), math.log1p(-lk[1]), 257))
    xs = np.concatenate([head, xs])
    vs = grand_log(xs)
    best = float(np.max(vs))
    for k in np.argsort(vs)[::-1][:8]:
        lo_, hi_ = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
        if hi_ > lo_:
            r = minimize_scalar(lambda x: -float(grand_log(x)), bounds=(lo_, hi_), method="bounded",
                                options={"xatol": 1e-12})
            if np.isfinite(r.fun):
                best = max(best, -float(r.fun))
    grand = math.exp(best)

    gs = alpha / pp - 1.0

    def small_integrand(x):
        return (1.0 - x) ** gs * float(P(math.exp(x))) ** (1.0 / p)

    # P is piecewise linear; split at (at most 64) knots and let quad adapt
    inner_knots = np.log(knots[1:-1])
    if len(inner_knots) > 64:
        inner_knots = inner_knots[np.linspace(0, len(inner_knots) - 1, 64).round().astype(int)]
    cuts = [-math.inf] + sorted(set(float(v) for v in inner_knots)) + [0.0]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(small_integrand, a, b, epsabs=0.0, epsrel=1e-11, limit=1000)
        total += val
    return NormValue(grand), NormValue(total)
