"""Weighted L_q norms against dt/t and dt/(t ell(t)) over arbitrary intervals.

All quadrature runs in the coordinate ``w = sign(x) log(1 + |x|)`` with
``x = log t``.  In that variable the log-homogeneous measure dt/(t ell(t))
is plain ``dw``, the homogeneous measure dt/t is ``e^|w| dw``, and every
power of ``ell`` becomes an exponential, so tails converge fast.  Integrals
are accumulated as logarithms (log-sum-exp) which makes values such as
``e^-3000`` or ``e^3000`` harmless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import QuadratureNonconvergent, SpecParseError
from .svfun import PositiveFunction, as_positive_function

W_MAX = 700.0           # |w| cap; x = e^700 is still a finite double
RTOL = 1e-9             # per-panel relative tolerance
TAIL_SMALL = 1e-14      # tail panel counts as negligible below this fraction
TAIL_GROWTH = 0.01      # tail panel counts as growing above this fraction
SUP_STEP = math.log(10.0) / 64
PROFILE_STEP = math.log(10.0) / 512
PROFILE_FINE = 8.0      # |w| up to which the fine profile spacing is used
PROFILE_COARSE = 0.05

MEASURES = ("lebesgue", "homogeneous", "log_homogeneous")

_X20, _W20 = np.polynomial.legendre.leggauss(20)
_X10, _W10 = np.polynomial.legendre.leggauss(10)
_LW20 = np.log(_W20)
_LW10 = np.log(_W10)


def w_of_x(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.log1p(np.abs(x))


def x_of_w(w):
    w = np.asarray(w, dtype=float)
    with np.errstate(over="ignore"):
        return np.sign(w) * np.expm1(np.abs(w))


def log_density(w, measure: str):
    """log of d(measure)/dw."""
    w = np.asarray(w, dtype=float)
    if measure == "log_homogeneous":
        return np.zeros_like(w)
    if measure == "homogeneous":
        return np.abs(w)
    if measure == "lebesgue":
        with np.errstate(over="ignore"):
            return np.abs(w) + x_of_w(w)
    raise ValueError(f"unknown measure {measure!r}")


@dataclass(frozen=True)
class RISpaceSpec:
    """``L_q`` on a measure space; ``q`` may be ``inf``."""

    q: float
    kind: str = "lebesgue_q"

    def __post_init__(self):
        if not (self.q > 0):
            raise ValueError("q must be positive")

    @property
    def inv_q(self) -> float:
        return 0.0 if math.isinf(self.q) else 1.0 / self.q

    @classmethod
    def parse(cls, text) -> "RISpaceSpec":
        """Accept ``"Lq:2"``, ``"L2"``, ``"Linf"``, ``"Lq:inf"`` or a number."""
        if isinstance(text, RISpaceSpec):
            return text
        if isinstance(text, (int, float)):
            return cls(float(text))
        s = str(text).strip().lower().replace(" ", "")
        for prefix in ("lq:", "l_", "l"):
            if s.startswith(prefix):
                s = s[len(prefix):]
                break
        try:
            q = math.inf if s in ("inf", "infty", "oo") else float(s)
            return cls(q)
        except ValueError:
            raise SpecParseError(f"cannot parse space {text!r}") from None

    def __str__(self):
        return "Lq:inf" if math.isinf(self.q) else f"Lq:{self.q:g}"


def fundamental_function(E: RISpaceSpec, lam):
    """``lam ** (1/q)``."""
    lam = np.asarray(lam, dtype=float)
    return lam ** E.inv_q


@dataclass(frozen=True)
class MeasuredInterval:
    lo: float
    hi: float
    measure: str = "homogeneous"

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi):
            raise ValueError("need 0 <= lo < hi")
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")


# quadrature kernels ---------------------------------------------------------

def _panel_logint(logg, lo, hi, X=_X20, LW=_LW20):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * X[None, :]
    vals = np.asarray(logg(pts.ravel()), dtype=float).reshape(pts.shape)
    if np.isnan(vals).any():
        raise QuadratureNonconvergent("integrand returned NaN")
    with np.errstate(divide="ignore", invalid="ignore"):
        return logsumexp(vals + LW[None, :], axis=1) + np.log(half)


def adaptive_log_integral(logg, a: float, b: float, rtol: float = RTOL,
                          max_rounds: int = 60, max_panels: int = 50000) -> float:
    """log of ``int_a^b exp(logg(w)) dw`` on a finite interval.

    Gauss-Legendre 20 versus 10 points per panel; a panel is accepted when
    the two agree to ``rtol`` or its error is below ``rtol`` times the
    running total.
    """
    if not b > a:
        return -math.inf
    n0 = max(1, int(math.ceil((b - a) / 0.5)))
    edges = np.linspace(a, b, n0 + 1)
    lo, hi = edges[:-1], edges[1:]
    log_acc = -math.inf
    lrt = math.log(rtol)
    for _ in range(max_rounds):
        i20 = _panel_logint(logg, lo, hi)
        if np.isposinf(i20).any():
            return math.inf
        i10 = _panel_logint(logg, lo, hi, _X10, _LW10)
        both_zero = np.isneginf(i20) & np.isneginf(i10)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(both_zero, 0.0, np.abs(np.expm1(i10 - i20)))
            rel = np.where(np.isneginf(i20) & ~both_zero, np.inf, rel)
            log_err = np.where(np.isneginf(i20), i10, i20 + np.log(rel))
        with np.errstate(divide="ignore"):
            log_scale = np.logaddexp(log_acc, logsumexp(i20))
        ok = (rel <= rtol) | (log_err <= lrt + log_scale) | ((hi - lo) < 1e-10)
        if ok.any():
            with np.errstate(divide="ignore"):
                log_acc = float(np.logaddexp(log_acc, logsumexp(i20[ok])))
        lo, hi = lo[~ok], hi[~ok]
        if lo.size == 0:
            return log_acc
        if lo.size > max_panels:
            break
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    raise QuadratureNonconvergent(f"adaptive quadrature did not settle on [{a:g}, {b:g}]")


def _scalar(logg, w: float) -> float:
    return float(np.asarray(logg(np.array([w])), dtype=float)[0])


def tail_remainder(logg, W: float) -> float:
    """log of ``int_W^inf`` assuming power decay in ``w``; ``inf`` if not integrable."""
    g_end = _scalar(logg, W)
    if g_end == -math.inf:
        return -math.inf
    if g_end == math.inf:
        return math.inf
    p = (_scalar(logg, 0.5 * W) - g_end) / math.log(2.0)
    if not p > 1.0:
        return math.inf
    return g_end + math.log(W / (p - 1.0))


def _tail_log(logg, w0: float, direction: int, log_body: float) -> float:
    g = logg if direction > 0 else (lambda w: logg(-np.asarray(w)))
    a = direction * w0
    log_acc = -math.inf
    width, small, grow = 1.0, 0, 0
    while a < W_MAX - 1e-12:
        b = min(a + width, W_MAX)
        piece = adaptive_log_integral(g, a, b)
        if piece == math.inf:
            return math.inf
        log_tot = float(np.logaddexp(log_body, log_acc))
        log_acc = float(np.logaddexp(log_acc, piece))
        if log_tot > -math.inf and piece <= log_tot + math.log(TAIL_SMALL):
            small += 1
            if small >= 3:
                return log_acc
        elif piece == -math.inf and log_tot == -math.inf:
            small += 1
            if small >= 3:
                return log_acc
        else:
            small = 0
        if piece > -math.inf and piece >= log_tot + math.log(TAIL_GROWTH) \
                and _scalar(g, b) >= _scalar(g, a):
            grow += 1
            if grow >= 3:
                return math.inf
        else:
            grow = 0
        a = b
        width *= 2.0
    return float(np.logaddexp(log_acc, tail_remainder(g, W_MAX)))


MAX_SPLITS = 64         # adaptive quadrature splits at no more than this many breaks


def _thin(points, limit=MAX_SPLITS):
    if len(points) <= limit:
        return points
    keep = np.unique(np.linspace(0, len(points) - 1, limit).round().astype(int))
    return [points[i] for i in keep]


def _body(wa, wb, breaks, thin=True):
    inner = sorted(p for p in breaks if wa < p < wb and abs(p) < W_MAX)
    if thin:
        inner = _thin(inner)
    # dx/dw = e^{|w|} has a kink at w = 0; always cut there
    if wa < 0.0 < wb and 0.0 not in inner:
        inner = sorted(inner + [0.0])
    anchors = [p for p in [0.0] + inner if wa <= p <= wb] or inner
    if not anchors:
        anchors = [wa] if math.isfinite(wa) else [wb]
    lo = wa if math.isfinite(wa) else min(anchors) - 4.0
    hi = wb if math.isfinite(wb) else max(anchors) + 4.0
    return lo, hi, inner


def log_integral_w(logg, wa: float, wb: float, breaks: Sequence[float] = ()) -> float:
    """log of ``int_wa^wb exp(logg(w)) dw``; ends may be infinite."""
    if not wb > wa:
        return -math.inf
    lo, hi, inner = _body(wa, wb, breaks)
    cuts = [lo] + [p for p in inner if lo < p < hi] + [hi]
    log_body = -math.inf
    for c0, c1 in zip(cuts[:-1], cuts[1:]):
        log_body = float(np.logaddexp(log_body, adaptive_log_integral(logg, c0, c1)))
        if log_body == math.inf:
            return math.inf
    # tails beyond the body, including breaks that fall there
    total = log_body
    for direction, end, open_end in ((1, hi, wb), (-1, lo, wa)):
        if math.isfinite(open_end) and abs(open_end - end) < 1e-15:
            continue
        if math.isfinite(open_end):
            piece = adaptive_log_integral(logg, *sorted((end, open_end)))
        else:
            piece = _tail_log(logg, end, direction, total)
        total = float(np.logaddexp(total, piece))
        if total == math.inf:
            return math.inf
    return total


def log_sup_w(logg, wa: float, wb: float, breaks: Sequence[float] = ()) -> float:
    """log of the supremum of ``exp(logg)`` over (wa, wb)."""
    if not wb > wa:
        return -math.inf
    lo, hi, inner = _body(wa, wb, breaks, thin=False)
    n = max(2, int(math.ceil((hi - lo) / SUP_STEP)) + 1)
    parts = [np.linspace(lo, hi, n)]
    eps = 1e-13 * max(1.0, abs(lo), abs(hi))
    for p in inner:
        parts.append(np.array([p - eps, p + eps]))
    tails = {}
    for direction, end, open_end in ((1, hi, wb), (-1, lo, wa)):
        if not math.isinf(open_end):
            continue
        steps = SUP_STEP * 1.05 ** np.arange(400)
        pts = end + direction * np.cumsum(steps)
        pts = pts[np.abs(pts) < W_MAX]
        pts = np.append(pts, direction * W_MAX)
        tails[direction] = pts
        parts.append(pts)
    nodes = np.unique(np.concatenate(parts))
    if math.isfinite(wa):
        nodes = nodes[nodes >= wa]
        nodes[0] = max(nodes[0], wa + eps)
    if math.isfinite(wb):
        nodes = nodes[nodes <= wb]
        nodes[-1] = min(nodes[-1], wb - eps)
    vals = np.asarray(logg(nodes), dtype=float)
    if np.isnan(vals).any():
        raise QuadratureNonconvergent("integrand returned NaN")
    if np.isposinf(vals).any():
        return math.inf
    i = int(np.argmax(vals))
    best = float(vals[i])
    if best == -math.inf:
        return best
    for direction in tails:
        end_idx = len(nodes) - 1 if direction > 0 else 0
        prev = end_idx - direction
        if i == end_idx and vals[end_idx] - vals[prev] > math.log(1.0 + TAIL_GROWTH):
            return math.inf
    if 0 < i < len(nodes) - 1:
        res = minimize_scalar(lambda w: -_scalar(logg, w), bounds=(nodes[i - 1], nodes[i + 1]),
                              method="bounded", options={"xatol": 1e-12})
        if np.isfinite(res.fun):
            best = max(best, -float(res.fun))
    return best


# public norm API ------------------------------------------------------------

def _logf(f):
    if isinstance(f, PositiveFunction):
        return f.log, f.breaks
    pf = as_positive_function(f)
    return pf.log, ()


def log_norm_x(logf: Callable, xa: float, xb: float, q: float, measure: str = "homogeneous",
               breaks_x: Sequence[float] = ()) -> float:
    """log of ``||f||_{L_q((e^xa, e^xb), measure)}`` with ``f`` given by ``logf(x)``."""
    wa, wb = float(w_of_x(xa)), float(w_of_x(xb))
    bw = [float(w_of_x(b)) for b in breaks_x]
    if math.isinf(q):
        return log_sup_w(lambda w: logf(x_of_w(w)), wa, wb, bw)

    def logg(w):
        return q * logf(x_of_w(w)) + log_density(w, measure)

    return log_integral_w(logg, wa, wb, bw) / q


def _x_bounds(lo, hi):
    with np.errstate(divide="ignore"):
        return float(np.log(lo)), float(np.log(hi))


def weighted_norm(f, iv: MeasuredInterval, E: RISpaceSpec) -> float:
    """``||f||_{E(iv)}`` for the measure attached to ``iv``.

    Returns ``inf`` for divergent integrals; raises
    :class:`QuadratureNonconvergent` when the tail neither settles nor grows.

    >>> from .svfun import PowerFunction
    >>> round(weighted_norm(PowerFunction(0.5), MeasuredInterval(0, 1), RISpaceSpec(2)), 12)
    1.0
    """
    logf, br = _logf(f)
    xa, xb = _x_bounds(iv.lo, iv.hi)
    with np.errstate(over="ignore"):
        return float(np.exp(log_norm_x(logf, xa, xb, E.q, iv.measure, br)))


def tilde_norm(f, lo: float, hi: float, E) -> float:
    return weighted_norm(f, MeasuredInterval(lo, hi, "homogeneous"), RISpaceSpec.parse(E))


def hat_norm(f, lo: float, hi: float, E) -> float:
    return weighted_norm(f, MeasuredInterval(lo, hi, "log_homogeneous"), RISpaceSpec.parse(E))


def sv_norm_scaling(b, alpha: float, E: RISpaceSpec, t: float):
    """``(||s^alpha b||_{E~(0,t)}, t^alpha b(t))``; ``(t, inf)`` for ``alpha < 0``."""
    logb, br = _logf(b)
    lt = math.log(t)
    xa, xb = (-math.inf, lt) if alpha > 0 else (lt, math.inf)
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    lhs = log_norm_x(lambda x: alpha * x + logb(x), xa, xb, E.q, "homogeneous", br)
    rhs = alpha * lt + float(logb(np.array([lt]))[0])
    return float(np.exp(lhs)), float(np.exp(rhs))


# cumulative profiles ------------------------------------------------------------

def profile_grid(wa: float, wb: float, extra: Sequence[float] = ()) -> np.ndarray:
    """Fine uniform grid for ``|w| <= 8`` and a coarser one out to ``W_MAX``."""
    lo = max(wa, -W_MAX)
    hi = min(wb, W_MAX)
    fine = np.arange(-PROFILE_FINE, PROFILE_FINE + PROFILE_STEP / 2, PROFILE_STEP)
    coarse = np.arange(PROFILE_FINE + PROFILE_COARSE, W_MAX, PROFILE_COARSE)
    g = np.concatenate([-coarse[::-1], [-W_MAX], fine, coarse, [W_MAX]])
    g = np.concatenate([g, np.asarray([e for e in extra if lo < e < hi], dtype=float), [lo, hi]])
    g = np.unique(g)
    return g[(g >= lo) & (g <= hi)]


class NormProfile:
    """``u -> ||g||_{E(lo, u)}`` (side ``"left"``) or ``||g||_{E(u, hi)}`` (``"right"``).

    Cumulative Gauss-Legendre sums on :func:`profile_grid` are stored as
    logs.  A query between two nodes adds the exact integral over the
    partial panel, so the profile is monotone and needs no interpolation.
    ``q = inf`` uses running maxima instead of sums.  ``panel`` holds the
    per-panel log integrals (or log maxima) between consecutive grid nodes.
    """

    def __init__(self, logf: Callable, q: float, side: str, xa: float = -math.inf,
                 xb: float = math.inf, measure: str = "homogeneous",
                 breaks_x: Sequence[float] = ()):
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.logf, self.q, self.side, self.measure = logf, float(q), side, measure
        self.wa, self.wb = float(w_of_x(xa)), float(w_of_x(xb))
        bw = [float(w_of_x(b)) for b in breaks_x]
        self.grid = profile_grid(self.wa, self.wb, bw)
        g = self.grid
        lo, hi = g[:-1], g[1:]
        if math.isinf(self.q):
            pts = np.concatenate([lo[:, None], 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * _X20[None, :],
                                  hi[:, None]], axis=1)
            # nudge panel ends inward so one-sided limits at breaks are used
            pts[:, 0] += 1e-10
            pts[:, -1] -= 1e-10
            panel = np.max(self._logg(pts.ravel()).reshape(pts.shape), axis=1)
            self.panel = panel
            head_l = log_sup_w(self._logg, self.wa, g[0]) if self.wa < g[0] else -math.inf
            head_r = log_sup_w(self._logg, g[-1], self.wb) if self.wb > g[-1] else -math.inf
            if side == "left":
                self.cum = np.maximum.accumulate(np.concatenate([[head_l], panel]))
            else:
                self.cum = np.maximum.accumulate(np.concatenate([[head_r], panel[::-1]]))[::-1]
        else:
            panel = _panel_logint(self._logg, lo, hi)
            self.panel = panel
            if side == "left":
                head = self._outside(-1)
                self.cum = np.logaddexp.accumulate(np.concatenate([[head], panel]))
            else:
                head = self._outside(1)
                self.cum = np.logaddexp.accumulate(np.concatenate([[head], panel[::-1]]))[::-1]

    def _logg(self, w):
        v = self.logf(x_of_w(w))
        if math.isinf(self.q):
            return v
        return self.q * v + log_density(w, self.measure)

    def _outside(self, direction):
        end = self.grid[-1] if direction > 0 else self.grid[0]
        open_end = self.wb if direction > 0 else self.wa
        if abs(open_end - end) < 1e-15:
            return -math.inf
        g = self._logg if direction > 0 else (lambda w: self._logg(-np.asarray(w)))
        return tail_remainder(g, W_MAX)

    def _partial(self, a, b):
        """log of the partial-panel integral (or sup) over [a, b], vectorised."""
        out = np.full(a.shape, -math.inf)
        m = b > a
        if not m.any():
            return out
        if math.isinf(self.q):
            s = np.linspace(0.0, 1.0, 21)
            pts = a[m][:, None] + (b[m] - a[m])[:, None] * s[None, :]
            pts[:, 0] += 1e-10
            pts[:, -1] -= 1e-10
            out[m] = np.max(self._logg(pts.ravel()).reshape(pts.shape), axis=1)
        else:
            out[m] = _panel_logint(self._logg, a[m], b[m])
        return out

    def log_raw_at_w(self, w):
        """log of the q-th power (or the sup) at abscissae ``w``."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        g = self.grid
        wc = np.clip(w, g[0], g[-1])
        i = np.clip(np.searchsorted(g, wc, side="right") - 1, 0, len(g) - 2)
        comb = np.maximum if math.isinf(self.q) else np.logaddexp
        if self.side == "left":
            val = comb(self.cum[i], self._partial(g[i], wc))
        else:
            val = comb(self.cum[i + 1], self._partial(wc, g[i + 1]))
        return val

    def log_at_w(self, w):
        raw = self.log_raw_at_w(w)
        return raw if math.isinf(self.q) else raw / self.q

    def log_at_x(self, x):
        return self.log_at_w(w_of_x(x))

    def __call__(self, t):
        with np.errstate(divide="ignore"):
            x = np.log(np.asarray(t, dtype=float))
        with np.errstate(over="ignore"):
            return np.exp(self.log_at_x(x))
