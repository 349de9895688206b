"""Experiment harness: both sides of each norm equivalence over a sweep.

Every ``verify_*`` function returns a :class:`RatioReport`.  Hypothesis
gates run first and raise :class:`HypothesisViolated` (or a subclass) when
the index conditions fail; ``force=True`` skips the gate and records that
in the notes, which is how negative controls are run.

Two-sided reports are also rerun on a doubled grid when ``stability`` is
set; a band that widens by 5 % or more on the finer grid fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import dyadic
from .errors import (CaseGateFailed, HypothesisViolated, IndicesViolateHypothesis,
                     SpecParseError, Triviality)
from .kcalc import FunctionSample, KProfile, default_corpus, k_functional
from .norms import (RISpaceSpec, NormProfile, log_norm_x, log_sup_w, sv_norm_scaling, w_of_x,
                    x_of_w)
from .reports import RatioReport, make_report
from .spaces import (SpaceSpec, middle_nodes, norm, norm_L, norm_LR, norm_R, norm_RL,
                     norm_theta, outer_from_nodes)
from .svfun import (IndexPair, PositiveFunction, SlowlyVarying, almost_increasing, const,
                    log_ell)

WIDTH = 1e3
ONE_SIDED_HI = 1e3
STABILITY_GROWTH = 0.05
HARDY_GROWTH = 10.0      # ratio growth across the window sweep that counts as unbounded
THREE_LEVEL_TOL = 2e-3   # node-grid accuracy of RL / LR norms


# small helpers ------------------------------------------------------------------

@dataclass
class Corpus:
    """Named K-profiles with the seed offset that produced them."""

    entries: list
    seed_offset: int = 0
    names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.names:
            self.names = [getattr(k, "name", f"K{i}") for i, k in enumerate(self.entries)]

    @classmethod
    def default(cls, seed_offset: int = 0) -> "Corpus":
        return cls(default_corpus(seed_offset), seed_offset)

    def doubled(self) -> "Corpus":
        extra = default_corpus(self.seed_offset + 100)
        return Corpus(self.entries + extra, self.seed_offset,
                      self.names + [f"{n}@{self.seed_offset + 100}" for n in
                                    (getattr(k, "name", "K") for k in extra)])

    def __len__(self):
        return len(self.entries)


def log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), int(points))


def doubled_grid(grid) -> np.ndarray:
    """Insert the geometric midpoint between every pair of grid points."""
    g = np.asarray(grid, dtype=float)
    mids = np.sqrt(g[:-1] * g[1:])
    out = np.empty(2 * len(g) - 1)
    out[0::2] = g
    out[1::2] = mids
    return out


def phi_E(E: RISpaceSpec) -> IndexPair:
    """Indices of the fundamental function ``lambda^(1/q)``."""
    return IndexPair(E.inv_q, E.inv_q)


def assoc(b) -> tuple:
    if not hasattr(b, "assoc_indices"):
        raise HypothesisViolated(f"{getattr(b, 'name', b)} carries no slowly varying metadata")
    i0, iinf = b.assoc_indices()
    if iinf is None:
        raise IndicesViolateHypothesis(f"{b.name}: associated function at infinity unavailable")
    return i0, iinf


def _gate(cond: bool, msg: str, force: bool, notes: list):
    if cond:
        return
    if not force:
        raise IndicesViolateHypothesis(msg)
    notes.append(f"hypothesis bypassed: {msg}")


def _exp(v):
    with np.errstate(over="ignore", under="ignore"):
        return np.exp(np.asarray(v, dtype=float))


def dilate(f: PositiveFunction, tau: float) -> PositiveFunction:
    """``s -> f(s / tau)``."""
    lt = math.log(tau)
    return PositiveFunction(lambda x: f.log(np.asarray(x) - lt), f"{f.name}@{tau:.6g}",
                            breaks=[b + lt for b in f.breaks])


def _num(s: str) -> float:
    s = s.strip()
    if s in ("e", "E"):
        return math.e
    if s in ("inf", "oo"):
        return math.inf
    return float(s)


def parse_positive(text: str) -> PositiveFunction:
    """Positive functions on (0, inf) for the pointwise lemmas.

    ``chi:a,b`` is the indicator of (a, b); ``powchi:c,a,b`` is
    ``t^c chi_(a,b)``; ``zero``; anything else is read as a weight expression.
    """
    from .svfun import parse_weight
    kind, _, args = text.partition(":")
    kind = kind.strip()
    try:
        if kind == "zero":
            return PositiveFunction(lambda x: np.full(np.shape(x), -np.inf), "zero")
        if kind in ("chi", "powchi"):
            vals = [_num(v) for v in args.split(",")]
            c, (a, b) = (0.0, vals) if kind == "chi" else (vals[0], vals[1:])
            if not 0 <= a < b:
                raise ValueError("need 0 <= a < b")
            la = math.log(a) if a > 0 else -math.inf
            lb = math.log(b) if b < math.inf else math.inf

            def logfn(x, c=c, la=la, lb=lb):
                x = np.asarray(x, dtype=float)
                return np.where((x > la) & (x < lb), c * x, -np.inf)

            brk = [v for v in (la, lb) if math.isfinite(v)]
            name = f"chi({a:g},{b:g})" if c == 0 else f"t^{c:g}chi({a:g},{b:g})"
            return PositiveFunction(logfn, name, breaks=brk)
    except (ValueError, TypeError) as exc:
        raise SpecParseError(f"bad function {text!r}: {exc}") from None
    return parse_weight(text)


def _profile_value(prof: NormProfile, x):
    return prof.log_at_x(np.asarray(x, dtype=float))


def _finish(experiment_id: str, run: Callable, grid, *, band, one_sided: bool,
            stability: bool, notes: list, grid_label: str = "t", extra=None,
            regrid: Optional[Callable] = None, max_width: float = WIDTH) -> RatioReport:
    """Evaluate ``run(grid) -> (grid, lhs, rhs, extra)``, then the doubled-grid rerun."""
    g, lhs, rhs, ex = run(grid)
    ex = dict(extra or {}, **(ex or {}))
    rep = make_report(experiment_id, g, lhs, rhs, band=band, one_sided=one_sided,
                      max_width=max_width, notes=notes, grid_label=grid_label, extra=ex)
    if stability and rep.passed:
        g2 = regrid(grid) if regrid else doubled_grid(grid)
        _, l2, r2, _ = run(g2)
        rep2 = make_report(experiment_id, g2, l2, r2, band=band, one_sided=one_sided,
                           max_width=max_width)
        base = rep.ratio_max if one_sided else rep.width
        fine = rep2.ratio_max if one_sided else rep2.width
        growth = fine / base - 1.0 if base > 0 else 0.0
        rep.extra["doubling_growth"] = float(growth)
        if not rep2.passed or growth >= STABILITY_GROWTH:
            rep.notes.append(f"grid doubling changes the band by {100 * growth:.2f}%")
            rep.verdict = "fail"
    return rep


# scaling of s^alpha b(s) ----------------------------------------------------------

def verify_sv_scaling(b: PositiveFunction, alpha: float, E: RISpaceSpec, t_grid,
                      variant: str = "i", experiment_id: str = "sv_scaling",
                      stability: bool = True, max_width: float = 1e2) -> RatioReport:
    """``||s^alpha b||_{E~}`` against ``t^alpha b(t)``.

    ``variant="i"``: over (0, t) for ``alpha > 0`` and over (t, inf) for
    ``alpha < 0``.  ``variant="ii"``: over (t, 2t) for any real alpha.
    """
    if alpha == 0 and variant == "i":
        raise HypothesisViolated("alpha must be nonzero on the one-sided intervals")
    logf = lambda x: alpha * np.asarray(x) + b.log(x)  # noqa: E731
    prof = None
    if variant == "i":
        prof = NormProfile(logf, E.q, "left" if alpha > 0 else "right", breaks_x=b.breaks)
    elif variant != "ii":
        raise SpecParseError(f"unknown variant {variant!r}")

    # the ratio has corners where t or 2t crosses a break of b; sample them
    shifts = (0.0,) if variant == "i" else (0.0, -math.log(2.0))
    corners = [xb + sh for xb in b.breaks for sh in shifts]

    def run(grid):
        xs = np.log(np.asarray(grid, dtype=float))
        inside = [c for c in corners if xs[0] < c < xs[-1]]
        xs = np.unique(np.concatenate([xs, inside]))
        grid = np.exp(xs)
        rhs = alpha * xs + b.log(xs)
        if prof is not None:
            lhs = _profile_value(prof, xs)
        else:
            ln2 = math.log(2.0)
            lhs = np.array([log_norm_x(logf, x, x + ln2, E.q, "homogeneous", b.breaks) for x in xs])
        return list(grid), _exp(lhs), _exp(rhs), None

    return _finish(experiment_id, run, t_grid, band=(0.0, math.inf), one_sided=False,
                   stability=stability, notes=[], max_width=max_width,
                   extra={"alpha": alpha, "q": E.q, "variant": variant, "b": b.name})


def sv_scaling_point(b, alpha, E, t):
    """Both sides at one ``t`` by direct quadrature (independent of the profiles)."""
    return sv_norm_scaling(b, alpha, E, t)


# limiting estimate -------------------------------------------------------------------

def verify_limiting_estimate(b: SlowlyVarying, E: RISpaceSpec, side: str, t_grid,
                             experiment_id: str = "limiting_estimate", force: bool = False,
                             stability: bool = True) -> RatioReport:
    """``||b||_{E~(0,t)}`` (side zero) or ``||b||_{E~(t,inf)}`` against ``b(t) phi_E(ell(t))``."""
    i0, iinf = assoc(b)
    pe = phi_E(E)
    notes: list = []
    if side == "zero":
        _gate(iinf.rho < pe.pi and pe.rho < i0.pi,
              f"need rho_Binf < {pe.pi:g} <= {pe.rho:g} < pi_B0, got rho_Binf={iinf.rho:g}, pi_B0={i0.pi:g}",
              force, notes)
        prof_side = "left"
    elif side == "infinity":
        _gate(i0.rho < pe.pi and pe.rho < iinf.pi,
              f"need rho_B0 < {pe.pi:g} <= {pe.rho:g} < pi_Binf, got rho_B0={i0.rho:g}, pi_Binf={iinf.pi:g}",
              force, notes)
        prof_side = "right"
    else:
        raise SpecParseError(f"unknown side {side!r}")
    prof = NormProfile(b.log, E.q, prof_side, breaks_x=b.breaks)

    def run(grid):
        xs = np.log(np.asarray(grid, dtype=float))
        lhs = _profile_value(prof, xs)
        rhs = b.log(xs) + E.inv_q * log_ell(xs)
        return list(grid), _exp(lhs), _exp(rhs), None

    return _finish(experiment_id, run, t_grid, band=(0.0, math.inf), one_sided=False,
                   stability=stability, notes=notes, extra={"side": side, "b": b.name, "q": E.q})


# embedding with a monotone factor ----------------------------------------------------------

def _monotone(phi: PositiveFunction, direction: str) -> bool:
    x = np.linspace(-50.0, 50.0, 2001)
    v = phi.log(x)
    return almost_increasing(v if direction == "increasing" else v[::-1])


def verify_sv_embedding(b: SlowlyVarying, phi: PositiveFunction, E: RISpaceSpec, side: str,
                        t_grid, experiment_id: str = "sv_embedding", force: bool = False,
                        band_hi: float = ONE_SIDED_HI, stability: bool = True) -> RatioReport:
    """``||b phi||_{E~(0,t)}`` against ``int_0^t b phi phi_E(ell) ds/(s ell)`` (one-sided)."""
    i0, iinf = assoc(b)
    notes: list = []
    if side == "zero":
        _gate(i0.pi > 0, f"need pi_B0 > 0, got {i0.pi:g}", force, notes)
        _gate(_monotone(phi, "decreasing"), f"{phi.name} is not almost decreasing", force, notes)
        prof_side = "left"
    elif side == "infinity":
        _gate(iinf.pi > 0, f"need pi_Binf > 0, got {iinf.pi:g}", force, notes)
        _gate(_monotone(phi, "increasing"), f"{phi.name} is not almost increasing", force, notes)
        prof_side = "right"
    else:
        raise SpecParseError(f"unknown side {side!r}")
    brk = sorted(set(b.breaks) | set(phi.breaks))
    g = lambda x: b.log(x) + phi.log(x)  # noqa: E731
    lprof = NormProfile(g, E.q, prof_side, breaks_x=brk)
    rprof = NormProfile(lambda x: g(x) + (E.inv_q - 1.0) * log_ell(x), 1.0, prof_side, breaks_x=brk)

    def run(grid):
        xs = np.log(np.asarray(grid, dtype=float))
        return list(grid), _exp(_profile_value(lprof, xs)), _exp(_profile_value(rprof, xs)), None

    return _finish(experiment_id, run, t_grid, band=(0.0, band_hi), one_sided=True,
                   stability=stability, notes=notes, extra={"side": side})


# limiting Hardy inequality --------------------------------------------------------

def _window_profiles(logg, q: float, measure: str, xmax: float, breaks):
    """Profiles of ``g`` on (1, T) and (1/T, 1) so window norms add without cancellation."""
    right = NormProfile(logg, q, "left", 0.0, xmax, measure, breaks)
    left = NormProfile(logg, q, "right", -xmax, 0.0, measure, breaks)

    def window(T):
        x = math.log(T)
        a = right.log_raw_at_w(w_of_x(x))[0]
        c = left.log_raw_at_w(w_of_x(-x))[0]
        if math.isinf(q):
            return max(a, c)
        return float(np.logaddexp(a, c)) / q

    return window


def verify_limit_hardy(b: SlowlyVarying, f: PositiveFunction, E: RISpaceSpec, side: str,
                       T_grid, experiment_id: str = "limit_hardy", force: bool = False,
                       band_hi: float = ONE_SIDED_HI, stability: bool = True) -> RatioReport:
    """``||b(t) int_0^t f||_{E^}`` against ``||t b f ell||_{E^}`` on windows (1/T, T).

    ``side="cumulative"`` integrates over (0, t), ``"tail"`` over (t, inf).
    The grid holds the window ends ``T > 1``; a bounded ratio as ``T``
    grows is the inequality, unbounded growth refutes it.
    """
    i0, iinf = assoc(b)
    notes: list = []
    if side == "cumulative":
        _gate(i0.rho < 0 < iinf.pi, f"need rho_B0 < 0 < pi_Binf, got {i0.rho:g}, {iinf.pi:g}",
              force, notes)
        fside = "left"
    elif side == "tail":
        _gate(iinf.rho < 0 < i0.pi, f"need rho_Binf < 0 < pi_B0, got {iinf.rho:g}, {i0.pi:g}",
              force, notes)
        fside = "right"
    else:
        raise SpecParseError(f"unknown side {side!r}")
    T = np.asarray(T_grid, dtype=float)
    if np.any(T <= 1):
        raise SpecParseError("window ends must exceed 1")
    xmax = float(math.log(T.max())) * 2.0 + 1.0
    brk = sorted(set(b.breaks) | set(f.breaks))
    cum = NormProfile(lambda x: np.asarray(x) + f.log(x), 1.0, fside, breaks_x=f.breaks)
    lwin = _window_profiles(lambda x: b.log(x) + cum.log_at_x(x), E.q, "log_homogeneous", xmax, brk)
    rwin = _window_profiles(lambda x: np.asarray(x) + b.log(x) + f.log(x) + log_ell(x), E.q,
                            "log_homogeneous", xmax, brk)

    def run(grid):
        lhs = [lwin(t) for t in grid]
        rhs = [rwin(t) for t in grid]
        return list(grid), _exp(lhs), _exp(rhs), None

    rep = _finish(experiment_id, run, T, band=(0.0, band_hi), one_sided=True, stability=stability,
                  notes=notes, grid_label="T", extra={"side": side, "b": b.name, "f": f.name})
    r = [v for v in rep.ratios if math.isfinite(v) and v > 0]
    growth = max(r) / r[0] if r else 1.0
    rep.extra["window_growth"] = growth
    if growth > HARDY_GROWTH:
        rep.notes.append(f"ratio grows {growth:.3g}x as the window extends")
        rep.verdict = "fail"
    return rep


# three-level equivalences ------------------------------------------------------------

def _ratio_weight(b: PositiveFunction, a: PositiveFunction, F: RISpaceSpec, side: str, name: str):
    """``b(u) / ||a||_{F~(0,u)}`` (side left) or ``/ ||a||_{F~(u,inf)}`` (side right)."""
    prof = NormProfile(a.log, F.q, side, breaks_x=a.breaks)
    return PositiveFunction(lambda x: b.log(x) - prof.log_at_x(x), name,
                            breaks=sorted(set(b.breaks) | set(a.breaks)))


def _key_gates(a, b, F, side, force, notes):
    a0, ainf = assoc(a)
    b0, binf = assoc(b)
    pf = phi_E(F)
    if side == "i":
        _gate(ainf.rho < pf.pi and pf.rho < a0.pi,
              f"need rho_Ainf < {pf.pi:g} <= {pf.rho:g} < pi_A0, got {ainf.rho:g}, {a0.pi:g}", force, notes)
        _gate(b0.rho < 0 < binf.pi, f"need rho_B0 < 0 < pi_Binf, got {b0.rho:g}, {binf.pi:g}", force, notes)
    elif side == "ii":
        _gate(a0.rho < pf.pi and pf.rho < ainf.pi,
              f"need rho_A0 < {pf.pi:g} <= {pf.rho:g} < pi_Ainf, got {a0.rho:g}, {ainf.pi:g}", force, notes)
        _gate(binf.rho < 0 < b0.pi, f"need rho_Binf < 0 < pi_B0, got {binf.rho:g}, {b0.pi:g}", force, notes)
    else:
        raise SpecParseError(f"unknown side {side!r}")


def verify_key_equivalence(a: SlowlyVarying, b: SlowlyVarying, E: RISpaceSpec, F: RISpaceSpec,
                           G: RISpaceSpec, f: PositiveFunction, side: str, tau_grid,
                           experiment_id: str = "key_equivalence", force: bool = False,
                           stability: bool = True) -> RatioReport:
    """Two-level norm of ``f`` against the three-level norm with ``b / ||a||``.

    Side i: ``||b(u) ||f||_{G~(0,u)}||_{E^}`` against
    ``||b(u)/||a||_{F~(0,u)} || a(t) ||f||_{G~(t,u)} ||_{F~(0,u)} ||_{E^}``;
    side ii mirrors both with (u, inf).  The sweep runs over dilations
    ``f(s / tau)``.  ``lhs >= rhs`` always, so the band starts at 1.
    """
    notes: list = []
    _key_gates(a, b, F, side, force, notes)
    if side == "i":
        c = _ratio_weight(b, a, F, "left", f"{b.name}/||{a.name}||")
        two = SpaceSpec("L", theta=0.0, b=b, E=E, F=G, outer_measure="hat")
        three = SpaceSpec("RL", theta=0.0, c=c, b=a, E=E, F=F, G=G)
        n2, n3 = norm_L, norm_RL
    else:
        c = _ratio_weight(b, a, F, "right", f"{b.name}/||{a.name}||")
        two = SpaceSpec("R", theta=0.0, b=b, E=E, F=G, outer_measure="hat")
        three = SpaceSpec("LR", theta=0.0, c=c, b=a, E=E, F=F, G=G)
        n2, n3 = norm_R, norm_LR

    def run(grid):
        lhs, rhs = [], []
        for tau in grid:
            ft = dilate(f, tau)
            lhs.append(float(n2(ft, two)))
            rhs.append(float(n3(ft, three)))
        return list(grid), lhs, rhs, None

    return _finish(experiment_id, run, np.asarray(tau_grid, dtype=float),
                   band=(1.0 - THREE_LEVEL_TOL, math.inf), one_sided=False, stability=stability,
                   notes=notes, grid_label="tau", extra={"side": side})


def discrete_side(a, b, f, E, F, G, side: str, grid: dyadic.LambdaGrid) -> float:
    """``||(b(lambda_k) ||a||_F~ ||f||_{G~(lambda_{k-1}, lambda_k)})_k||`` over the grid."""
    lam = grid.log_lambdas
    lo = dyadic.log_lambda(grid.ks - 1)
    lb = b.log(lam)
    if side == "i":
        prof = NormProfile(a.log, F.q, "left", breaks_x=a.breaks)
    else:
        prof = NormProfile(a.log, F.q, "right", breaks_x=a.breaks)
    la = prof.log_at_x(lam)
    lf = np.array([log_norm_x(f.log, float(x0), float(x1), G.q, "homogeneous", f.breaks)
                   for x0, x1 in zip(lo, lam)])
    terms = _exp(lb + la + lf)
    return dyadic.discrete_hat_norm(terms, E)


def verify_discrete_equivalence(a: SlowlyVarying, b: SlowlyVarying, f: PositiveFunction,
                                E: RISpaceSpec, F: RISpaceSpec, G: RISpaceSpec, side: str,
                                tau_grid, k_range=(-40, 40),
                                experiment_id: str = "discrete_equivalence", force: bool = False,
                                band_hi: float = ONE_SIDED_HI, stability: bool = True) -> RatioReport:
    """Continuous three-level norm against its sum over the intervals ``I_k``.

    Side i is a two-sided equivalence; side ii only bounds the continuous
    norm by the sum, so that report is one-sided.
    """
    notes: list = []
    _key_gates(a, b, F, side, force, notes)
    grid = dyadic.make_grid(*k_range, check=False)
    kind = "RL" if side == "i" else "LR"
    spec = SpaceSpec(kind, theta=0.0, c=b, b=a, E=E, F=F, G=G)
    n3 = norm_RL if side == "i" else norm_LR

    def run(taus):
        lhs, rhs = [], []
        for tau in taus:
            ft = dilate(f, tau)
            lhs.append(float(n3(ft, spec)))
            rhs.append(discrete_side(a, b, ft, E, F, G, side, grid))
        return list(taus), lhs, rhs, None

    one = side == "ii"
    band = (0.0, band_hi) if one else (0.0, math.inf)
    return _finish(experiment_id, run, np.asarray(tau_grid, dtype=float), band=band,
                   one_sided=one, stability=stability, notes=notes, grid_label="tau",
                   extra={"side": side, "k_range": list(k_range)})


# Holmstedt-type formula ------------------------------------------------------------------

def _as_profile(f):
    if isinstance(f, FunctionSample):
        return k_functional(f)
    return f


@dataclass
class HolmstedtParts:
    """P0 f and Q1 f on the node grid, with the couple norms."""

    w: np.ndarray
    log_P0: np.ndarray
    log_Q1: np.ndarray
    log_Y0: float
    log_Y1: float


def holmstedt_parts(K, theta, b0, E0, b1, E1, a, F, mode: str = "ordered_unit") -> HolmstedtParts:
    rl = SpaceSpec("RL", theta=theta, b=b0, a=a, F=E0, G=F, mode=mode)
    lr = SpaceSpec("LR", theta=theta, b=b1, a=a, F=E1, G=F, mode=mode)
    w0, p0 = middle_nodes(K, rl, "RL")
    w1, q1 = middle_nodes(K, lr, "LR")
    if len(w0) != len(w1) or np.any(w0 != w1):
        q1 = np.interp(w0, w1, q1)
    y0 = float(norm_R(K, SpaceSpec("R", theta=theta, b=b0, a=a, E=E0, F=F, mode=mode)))
    y1 = float(norm_L(K, SpaceSpec("L", theta=theta, b=b1, a=a, E=E1, F=F, mode=mode)))
    with np.errstate(divide="ignore"):
        return HolmstedtParts(w0, p0, q1, math.log(y0), math.log(y1))


def holmstedt_phi(b0, E0, b1, E1, mode: str = "ordered_unit") -> Callable:
    """``x -> log(||b0||_{E0~(0,u)} / ||b1||_{E1~(u,inf)})`` at ``u = e^x``."""
    hi = 0.0 if mode == "ordered_unit" else math.inf
    p0 = NormProfile(b0.log, E0.q, "left", -math.inf, hi, breaks_x=b0.breaks)
    p1 = NormProfile(b1.log, E1.q, "right", -math.inf, hi, breaks_x=b1.breaks)
    return lambda x: p0.log_at_x(x) - p1.log_at_x(x)


def verify_holmstedt(f, theta: float, b0: SlowlyVarying, b1: SlowlyVarying, a: PositiveFunction,
                     E0: RISpaceSpec, E1: RISpaceSpec, F: RISpaceSpec, u_grid,
                     mode: str = "ordered_unit", experiment_id: str = "holmstedt",
                     stability: bool = False) -> RatioReport:
    """``P0 f(u) + phi(u) Q1 f(u)`` against ``min(||f||_Y0, phi(u) ||f||_Y1)``.

    The right side bounds the K-functional of the derived couple through
    the decompositions ``f = f + 0`` and ``f = 0 + f``.  Each of the four
    inequalities ``P0 <= ||f||_Y0``, ``P0 <= phi ||f||_Y1``,
    ``phi Q1 <= ||f||_Y0`` and ``Q1 <= ||f||_Y1`` holds with constant 1, so
    the ratio never exceeds 2.
    """
    if not 0 < theta < 1:
        raise HypothesisViolated("need 0 < theta < 1")
    hi = 0.0 if mode == "ordered_unit" else math.inf
    if not log_norm_x(b0.log, -math.inf, 0.0, E0.q, "homogeneous", b0.breaks) < math.inf:
        raise Triviality("||b0||_E0~(0,1) diverges")
    if mode != "ordered_unit" and not log_norm_x(b1.log, 0.0, math.inf, E1.q, "homogeneous",
                                                 b1.breaks) < math.inf:
        raise Triviality("||b1||_E1~(1,inf) diverges")
    K = _as_profile(f)
    u = np.asarray(u_grid, dtype=float)
    if mode == "ordered_unit" and np.any(u >= 1):
        raise SpecParseError("ordered couples need u < 1")
    if getattr(K, "is_zero", False):
        z = [0.0] * len(u)
        return make_report(experiment_id, list(u), z, z, band=(0.0, 2.0), one_sided=True,
                           grid_label="u")
    parts = holmstedt_parts(K, theta, b0, E0, b1, E1, a, F, mode)
    lphi = holmstedt_phi(b0, E0, b1, E1, mode)

    def run(grid):
        xs = np.log(np.asarray(grid, dtype=float))
        ws = w_of_x(xs)
        P0 = np.interp(ws, parts.w, parts.log_P0)
        Q1 = np.interp(ws, parts.w, parts.log_Q1)
        ph = lphi(xs)
        lhs = np.logaddexp(P0, ph + Q1)
        rhs = np.minimum(parts.log_Y0, ph + parts.log_Y1)
        worst = max(float(np.max(P0 - parts.log_Y0)), float(np.max(P0 - ph - parts.log_Y1)),
                    float(np.max(ph + Q1 - parts.log_Y0)), float(np.max(Q1 - parts.log_Y1)))
        return list(grid), _exp(lhs), _exp(rhs), {"unit_inequality_max": math.exp(worst)}

    rep = _finish(experiment_id, run, u, band=(0.0, 2.0 * (1.0 + THREE_LEVEL_TOL)), one_sided=True,
                  stability=stability, notes=[], grid_label="u", extra={"mode": mode})
    if rep.extra["unit_inequality_max"] > 1.0 + THREE_LEVEL_TOL:
        rep.notes.append("a unit-constant inequality is exceeded")
        rep.verdict = "fail"
    return rep


# change of variables ------------------------------------------------------------------

def verify_change_of_variables(corpus, theta: float, b: PositiveFunction, phi: SlowlyVarying,
                               E: RISpaceSpec, experiment_id: str = "change_of_variables",
                               force: bool = False, stability: bool = False) -> RatioReport:
    """``||phi^-theta b(phi) K(phi)||_{E^}`` against ``||t^-theta b K||_{E~}`` over a corpus."""
    p0, pinf = assoc(phi)
    notes: list = []
    _gate(pinf.rho < 0 < p0.pi, f"need rho_Phiinf < 0 < pi_Phi0, got {pinf.rho:g}, {p0.pi:g}",
          force, notes)
    corpus = corpus if isinstance(corpus, Corpus) else Corpus(list(corpus))

    def one(K):
        if getattr(K, "is_zero", False):
            return 0.0, 0.0

        def logg(x):
            y = phi.log(x)
            return -theta * y + b.log(y) + K.log(y)

        lhs = log_norm_x(logg, -math.inf, math.inf, E.q, "log_homogeneous", phi.breaks)
        rhs = float(norm_theta(K, theta, b, E))
        return float(_exp(lhs)), rhs

    def run(c):
        vals = [one(K) for K in c.entries]
        return c.names, [v[0] for v in vals], [v[1] for v in vals], None

    return _finish(experiment_id, run, corpus, band=(0.0, math.inf), one_sided=False,
                   stability=stability, notes=notes, grid_label="profile",
                   regrid=lambda c: c.doubled())


# corollary: RL with a normalised weight equals L ---------------------------------------

def verify_corollary_45(a: PositiveFunction, b: SlowlyVarying, c: SlowlyVarying, E: RISpaceSpec,
                        F: RISpaceSpec, G: RISpaceSpec, corpus, theta: float = 0.5,
                        side: str = "i", experiment_id: str = "corollary_45", force: bool = False,
                        stability: bool = False) -> RatioReport:
    """RL norm with ``d = c / ||b||_{F~(0,u)}`` against the L norm with ``c`` (side i).

    Side ii compares LR with ``d = c / ||b||_{F~(u,inf)}`` and the R norm.
    The three-level norm never exceeds the two-level one.
    """
    b0, binf = assoc(b)
    c0, cinf = assoc(c)
    pf = phi_E(F)
    notes: list = []
    if side == "i":
        _gate(binf.rho < pf.pi and pf.rho < b0.pi,
              f"need rho_Binf < {pf.pi:g} <= {pf.rho:g} < pi_B0, got {binf.rho:g}, {b0.pi:g}", force, notes)
        _gate(c0.rho < 0 < cinf.pi, f"need rho_C0 < 0 < pi_Cinf, got {c0.rho:g}, {cinf.pi:g}", force, notes)
        d = _ratio_weight(c, b, F, "left", f"{c.name}/||{b.name}||")
        three = SpaceSpec("RL", theta=theta, c=d, b=b, a=a, E=E, F=F, G=G)
        two = SpaceSpec("L", theta=theta, b=c, a=a, E=E, F=G, outer_measure="hat")
    elif side == "ii":
        _gate(b0.rho < pf.pi and pf.rho < binf.pi,
              f"need rho_B0 < {pf.pi:g} <= {pf.rho:g} < pi_Binf, got {b0.rho:g}, {binf.pi:g}", force, notes)
        _gate(cinf.rho < 0 < c0.pi, f"need rho_Cinf < 0 < pi_C0, got {cinf.rho:g}, {c0.pi:g}", force, notes)
        d = _ratio_weight(c, b, F, "right", f"{c.name}/||{b.name}||")
        three = SpaceSpec("LR", theta=theta, c=d, b=b, a=a, E=E, F=F, G=G)
        two = SpaceSpec("R", theta=theta, b=c, a=a, E=E, F=G, outer_measure="hat")
    else:
        raise SpecParseError(f"unknown side {side!r}")
    corpus = corpus if isinstance(corpus, Corpus) else Corpus(list(corpus))

    def run(cp):
        lhs = [float(norm(K, three)) for K in cp.entries]
        rhs = [float(norm(K, two)) for K in cp.entries]
        return cp.names, lhs, rhs, None

    return _finish(experiment_id, run, corpus, band=(0.0, 1.0 + THREE_LEVEL_TOL), one_sided=False,
                   stability=stability, notes=notes, grid_label="profile",
                   regrid=lambda cp: cp.doubled())


# reiteration ----------------------------------------------------------------------------

@dataclass
class ReiterationSetup:
    """Couple ``(R(theta, b0, E0, a, F), L(theta, b1, E1, a, F))`` and outer ``(eta, b, E)``."""

    theta: float
    a: PositiveFunction
    b0: SlowlyVarying
    E0: RISpaceSpec
    b1: SlowlyVarying
    E1: RISpaceSpec
    F: RISpaceSpec
    b: SlowlyVarying
    E: RISpaceSpec
    eta: float
    mode: str = "ordered_unit"
    label: str = ""

    def log_phi(self, x):
        """Closed-form ``b0 phi_E0(ell) / (b1 phi_E1(ell))``."""
        le = log_ell(x)
        return (self.b0.log(x) + self.E0.inv_q * le) - (self.b1.log(x) + self.E1.inv_q * le)

    def log_B(self, eta: float, x):
        le = log_ell(x)
        g0 = self.b0.log(x) + self.E0.inv_q * le
        g1 = self.b1.log(x) + self.E1.inv_q * le
        return (1.0 - eta) * g0 + eta * g1 + self.b.log(g0 - g1)

    def weight(self, logfn, name):
        brk = sorted(set(self.b0.breaks) | set(self.b1.breaks))
        return PositiveFunction(logfn, name, breaks=brk)


def grand_small_setup(alpha: float, beta: float, p: float, eta: float, b: SlowlyVarying,
                      E: RISpaceSpec) -> ReiterationSetup:
    """Grand space ``L^{p),alpha}`` and small space ``L^{(p,beta}`` written over (L1, Linf)."""
    from .svfun import ell_power
    pp = p / (p - 1.0)
    return ReiterationSetup(theta=1.0 - 1.0 / p, a=const(), b0=ell_power(-alpha / p),
                            E0=RISpaceSpec(math.inf), b1=ell_power(beta / pp - 1.0),
                            E1=RISpaceSpec(1.0), F=RISpaceSpec(p), b=b, E=E, eta=eta,
                            mode="ordered_unit", label=f"alpha={alpha:g},beta={beta:g},p={p:g}")


def _M(num: float, den: float, notes: list, which: str) -> float:
    """``(1 - num/den)^-1`` with the limit conventions for degenerate gaps."""
    if den == 0:
        notes.append(f"{which}: zero index gap, limit value 0 used")
        return 0.0
    if math.isinf(den) or math.isinf(num) and math.isinf(den):
        notes.append(f"{which}: infinite index gap, limit value 1 used")
        return 1.0
    x = num / den
    if x == 1.0:
        notes.append(f"{which}: degenerate ratio, limit value 1 used")
        return 1.0
    return 1.0 / (1.0 - x)


def reiteration_thresholds(s: ReiterationSetup, notes: Optional[list] = None, force: bool = False):
    """Check the index hypotheses and return ``(M1, M2)``."""
    notes = [] if notes is None else notes
    b00, b0inf = assoc(s.b0)
    b10, b1inf = assoc(s.b1)
    e0, e1 = phi_E(s.E0), phi_E(s.E1)
    if s.mode == "ordered_unit":
        _gate(e0.rho < b00.pi, f"need rho_phiE0 < pi_B00, got {e0.rho:g}, {b00.pi:g}", force, notes)
        _gate(b10.rho < e1.pi, f"need rho_B10 < pi_phiE1, got {b10.rho:g}, {e1.pi:g}", force, notes)
        m1 = _M(b10.pi - e1.rho, b00.pi - e0.rho, notes, "M1")
        m2 = _M(b10.rho - e1.pi, b00.rho - e0.pi, notes, "M2")
    else:
        _gate(b0inf.rho < e0.pi and e0.rho < b00.pi,
              "need rho_B0inf < pi_phiE0 <= rho_phiE0 < pi_B00", force, notes)
        _gate(b10.rho < e1.pi and e1.rho < b1inf.pi,
              "need rho_B10 < pi_phiE1 <= rho_phiE1 < pi_B1inf", force, notes)
        m1 = min(_M(b10.pi - e1.rho, b00.pi - e0.rho, notes, "M1"),
                 _M(b1inf.rho - e1.pi, b0inf.rho - e0.pi, notes, "M1"))
        m2 = max(_M(b10.rho - e1.pi, b00.rho - e0.pi, notes, "M2"),
                 _M(b1inf.pi - e1.rho, b0inf.pi - e0.rho, notes, "M2"))
    return m1, m2


def select_case(eta: float, m1: float, m2: float, tol: float = 1e-12) -> str:
    if eta <= tol:
        return "d"
    if eta >= 1 - tol:
        return "e"
    if eta < m1 - tol:
        return "a"
    if eta > m2 + tol:
        return "b"
    return "c"


def _case_allowed(case: str, eta: float, m1: float, m2: float, mode: str, tol: float = 1e-12) -> bool:
    lo_a = -tol if mode == "ordered_unit" else tol
    hi_b = 1 + tol if mode == "ordered_unit" else 1 - tol
    return {"a": lo_a < eta < m1 - tol or (mode == "ordered_unit" and abs(eta) <= tol and m1 > 0),
            "b": m2 + tol < eta < hi_b or (mode == "ordered_unit" and abs(eta - 1) <= tol and m2 < 1),
            "c": m1 - tol <= eta <= m2 + tol,
            "d": abs(eta) <= tol,
            "e": abs(eta - 1) <= tol}[case]


def claimed_norm(K, s: ReiterationSetup, case: str) -> float:
    """Norm of the space the reiteration identity names for ``case``."""
    eta, th = s.eta, s.theta
    kw = dict(theta=th, E=s.E, F=s.F, mode=s.mode, outer_measure="hat")
    B = s.weight(lambda x: s.log_B(eta, x), f"B_{eta:g}")
    bphi = s.weight(lambda x: s.b.log(s.log_phi(x)), "b(phi)")
    if case == "a":
        return float(norm(K, SpaceSpec("R", b=B, a=s.a, **kw)))
    if case == "b":
        return float(norm(K, SpaceSpec("L", b=B, a=s.a, **kw)))
    if case == "c":
        def g0(x):
            return s.b0.log(x) + s.E0.inv_q * log_ell(x)
        Bs = s.weight(lambda x: s.log_B(eta, x) - g0(x), f"B#_{eta:g}")
        As = s.weight(lambda x: s.a.log(x) + g0(x), "a#")
        return float(norm(K, SpaceSpec("L", b=Bs, a=As, **kw)))
    three = dict(theta=th, E=s.E, G=s.F, mode=s.mode, a=s.a, c=bphi)
    if case == "d":
        r = float(norm(K, SpaceSpec("R", b=B, a=s.a, **kw)))
        rl = float(norm(K, SpaceSpec("RL", b=s.b0, F=s.E0, **three)))
        return max(r, rl)
    if case == "e":
        l_ = float(norm(K, SpaceSpec("L", b=B, a=s.a, **kw)))
        lr = float(norm(K, SpaceSpec("LR", b=s.b1, F=s.E1, **three)))
        return max(l_, lr)
    raise SpecParseError(f"unknown case {case!r}")


def sandwich_terms(parts: HolmstedtParts, s: ReiterationSetup, eta: Optional[float] = None):
    """``(I1, I2)``: hat norms of ``phi^-eta b(phi) P0 f`` and ``phi^(1-eta) b(phi) Q1 f``."""
    eta = s.eta if eta is None else eta
    x = x_of_w(parts.w)
    lp = s.log_phi(x)
    lb = s.b.log(lp)
    i1 = outer_from_nodes(parts.w, -eta * lp + lb + parts.log_P0, s.E, s.mode)
    i2 = outer_from_nodes(parts.w, (1.0 - eta) * lp + lb + parts.log_Q1, s.E, s.mode)
    return float(_exp(i1)), float(_exp(i2))


def verify_reiteration(setup: ReiterationSetup, corpus, case: Optional[str] = None,
                       experiment_id: str = "reiteration", force: bool = False,
                       stability: bool = False, parts_cache: Optional[dict] = None) -> RatioReport:
    """Claimed norm of the reiterated space against ``I1 + I2`` over a corpus.

    ``max(I1, I2) <= ||f|| <= I1 + I2`` brackets the norm of the
    interpolated couple, so a bounded ratio of the claimed norm to
    ``I1 + I2`` is the identity at desk scale.  ``parts_cache`` lets
    several values of ``eta`` share the P0 / Q1 computations.
    """
    notes: list = []
    m1, m2 = reiteration_thresholds(setup, notes, force)
    auto = select_case(setup.eta, m1, m2)
    if case is None:
        case = auto
    elif not _case_allowed(case, setup.eta, m1, m2, setup.mode):
        raise CaseGateFailed(f"case {case} needs a different eta (eta={setup.eta:g}, M1={m1:g}, M2={m2:g})")
    if case == "d" and setup.mode != "ordered_unit":
        if not log_norm_x(setup.b.log, 0.0, math.inf, setup.E.q, "homogeneous", setup.b.breaks) < math.inf:
            raise CaseGateFailed("case d needs ||b||_E~(1,inf) < inf")
    if case == "e":
        if not log_norm_x(setup.b.log, -math.inf, 0.0, setup.E.q, "homogeneous", setup.b.breaks) < math.inf:
            raise CaseGateFailed("case e needs ||b||_E~(0,1) < inf")
    corpus = corpus if isinstance(corpus, Corpus) else Corpus(list(corpus))
    cache = {} if parts_cache is None else parts_cache
    s = setup
    sandwich_ok = [True]

    def run(cp):
        lhs, rhs, i1s, i2s = [], [], [], []
        for name, K in zip(cp.names, cp.entries):
            if getattr(K, "is_zero", False):
                lhs.append(0.0)
                rhs.append(0.0)
                continue
            key = (s.label, name)
            if key not in cache:
                cache[key] = holmstedt_parts(K, s.theta, s.b0, s.E0, s.b1, s.E1, s.a, s.F, s.mode)
            i1, i2 = sandwich_terms(cache[key], s)
            tot, mx = i1 + i2, max(i1, i2)
            if not (mx <= tot <= 2.0 * mx):
                sandwich_ok[0] = False
            i1s.append(i1)
            i2s.append(i2)
            lhs.append(claimed_norm(K, s, case))
            rhs.append(tot)
        return cp.names, lhs, rhs, {"I1": i1s, "I2": i2s}

    rep = _finish(experiment_id, run, corpus, band=(0.0, math.inf), one_sided=False,
                  stability=stability, notes=notes, grid_label="profile",
                  regrid=lambda cp: cp.doubled(),
                  extra={"M1": m1, "M2": m2, "case": case, "auto_case": auto, "eta": s.eta})
    if not sandwich_ok[0]:
        rep.notes.append("sandwich inequality violated")
        rep.verdict = "fail"
    return rep


# monotonisation of b(lambda_k) -----------------------------------------------------

def verify_monotone_equivalent(b: SlowlyVarying, k_range=(-30, 30), target: str = "ratio_below_1",
                               experiment_id: str = "monotone_equivalent") -> RatioReport:
    """Monotonised sequence against ``b(lambda_k)``; ratios must stay on the right side of 1."""
    grid = dyadic.make_grid(*k_range, check=False)
    phi, info = dyadic.monotone_equivalent(b, grid, target)
    sig = dyadic.b_at_lambdas(b, grid)
    notes = []
    if target == "ratio_below_1":
        ok = info["sup_ratio"] <= info["proof_bound"] + 1e-12 and info["sup_ratio"] < 1
    else:
        ok = info["inf_ratio"] >= 1.0 / info["proof_bound"] - 1e-12 and info["inf_ratio"] > 1
    rep = make_report(experiment_id, [int(k) for k in grid.ks], phi, sig, band=(1.0 - 1e-12, math.inf),
                      max_width=WIDTH, grid_label="k", extra={k: v for k, v in info.items()})
    if not ok:
        notes.append("monotone ratio bound not met")
        rep.notes.extend(notes)
        rep.verdict = "fail"
    return rep


def verify_seq_hardy(sigma, x, E: RISpaceSpec, direction: str = "cumulative_below",
                     experiment_id: str = "seq_hardy") -> RatioReport:
    return dyadic.seq_hardy_check(sigma, x, E, direction, experiment_id)


def verify_seq_hardy_sweep(ratio: float = 0.5, n: int = 64, trials: int = 100, seed: int = 0,
                           E: RISpaceSpec = RISpaceSpec(2.0), direction: str = "cumulative_below",
                           experiment_id: str = "seq_hardy") -> RatioReport:
    """Geometric example (``x = delta_0`` in l_1) followed by ``trials`` random sequences in ``E``.

    In l_1 the sum interchange makes the ratio exactly ``1/(1 - ratio)``
    for every sequence, so the random part is run in ``E``.

    ``sigma_k = ratio^k`` for ``cumulative_below`` (``ratio^-k`` above);
    every ratio must stay in ``[1, 1/(1 - ratio)]``.
    """
    if not 0 < ratio < 1:
        raise HypothesisViolated("need 0 < ratio < 1")
    k = np.arange(n)
    sigma = ratio ** k if direction == "cumulative_below" else ratio ** (n - 1 - k)
    delta = np.zeros(n)
    delta[0 if direction == "cumulative_below" else n - 1] = 1.0
    rng = np.random.default_rng(seed)
    seqs = [delta] + [rng.exponential(1.0, n) * (rng.random(n) < 0.7) for _ in range(trials)]
    lhs, rhs = [], []
    for i, x in enumerate(seqs):
        r = dyadic.seq_hardy_check(sigma, x, RISpaceSpec(1.0) if i == 0 else E, direction, experiment_id)
        lhs.append(r.lhs[0])
        rhs.append(r.rhs[0])
    const_ = 1.0 / (1.0 - ratio)
    rep = make_report(experiment_id, list(range(len(seqs))), lhs, rhs,
                      band=(1.0 - 1e-12, const_ + 1e-9), one_sided=False, max_width=math.inf,
                      grid_label="sequence", extra={"constant": const_, "geometric_ratio": lhs[0] / rhs[0]})
    return rep


OPERATIONS = {
    "sv_scaling": verify_sv_scaling,
    "limiting_estimate": verify_limiting_estimate,
    "sv_embedding": verify_sv_embedding,
    "limit_hardy": verify_limit_hardy,
    "seq_hardy": verify_seq_hardy_sweep,
    "monotone_equivalent": verify_monotone_equivalent,
    "key_equivalence": verify_key_equivalence,
    "discrete_equivalence": verify_discrete_equivalence,
    "holmstedt": verify_holmstedt,
    "change_of_variables": verify_change_of_variables,
    "reiteration": verify_reiteration,
    "corollary_45": verify_corollary_45,
}
