"""Slowly varying functions, their associated functions and extension indices.

Every function is stored through its logarithm in logarithmic coordinates:
``f.log(x) == log f(e**x)``.  Products become sums, powers become scalings
and compositions stay exact, so nothing is ever sampled until a quadrature
or an index estimate asks for values.  This also keeps evaluations finite
far out in the tails (``x`` of order ``1e300`` is fine).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import IndexUnstable, NotAdmissible, SpecParseError

LogFn = Callable[[np.ndarray], np.ndarray]

# constant C used for "almost increasing" checks
ALMOST_C = 10.0
# Delta_2 acceptance bound for associated functions
DELTA2_BOUND = 16.0
# default uncertainty budget for numeric index estimates
INDEX_BUDGET = 0.05


def ell(t):
    """``1 + |log t|``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 + np.abs(np.log(t))


def log_ell(x):
    """``log ell(e**x) = log(1 + |x|)``."""
    return np.log1p(np.abs(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class IndexPair:
    """Lower/upper extension indices.

    ``method`` is ``"analytic"`` (exact), ``"bound"`` (``pi`` is a lower bound
    of the true lower index and ``rho`` an upper bound of the true upper
    index) or ``"numeric"``.
    """

    pi: float
    rho: float
    method: str = "analytic"
    uncertainty: float = 0.0

    def __post_init__(self):
        if self.pi > self.rho + 1e-12:
            raise ValueError(f"pi={self.pi} exceeds rho={self.rho}")

    @property
    def exact(self) -> bool:
        return self.method == "analytic"

    def scaled(self, r: float) -> "IndexPair":
        lo, hi = (r * self.pi, r * self.rho) if r >= 0 else (r * self.rho, r * self.pi)
        return IndexPair(lo, hi, self.method, abs(r) * self.uncertainty)

    def __add__(self, other: "IndexPair") -> "IndexPair":
        # exact when both summands are power-like (pi == rho); otherwise the
        # sum only brackets the true indices
        both_flat = self.pi == self.rho and other.pi == other.rho
        method = "analytic" if (self.exact and other.exact and both_flat) else "bound"
        if self.method == "numeric" or other.method == "numeric":
            method = "numeric"
        return IndexPair(self.pi + other.pi, self.rho + other.rho, method,
                         self.uncertainty + other.uncertainty)

    def negated(self) -> "IndexPair":
        return self.scaled(-1.0)


ZERO_INDEX = IndexPair(0.0, 0.0)


class PositiveFunction:
    """A positive function on (0, inf) known through ``x -> log f(e**x)``.

    ``breaks`` lists x-positions of kinks or jumps; quadrature splits there.
    """

    def __init__(self, logfn: LogFn, name: str = "f", breaks: Sequence[float] = ()):
        self._logfn = logfn
        self.name = name
        self.breaks = tuple(sorted(set(float(b) for b in breaks)))

    def log(self, x):
        return self._logfn(np.asarray(x, dtype=float))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            x = np.log(t)
        with np.errstate(over="ignore"):
            return np.exp(self.log(x))

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"

    # algebra -------------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return product(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, 1.0 / float(other))
        return product(self, power(other, -1.0))

    def __pow__(self, r):
        return power(self, float(r))

    def compose(self, inner: "PositiveFunction", **kw):
        return sv_compose(self, inner, **kw)


class SlowlyVarying(PositiveFunction):
    """Positive function with slowly varying metadata.

    Parameters
    ----------
    logfn : callable
        ``x -> log b(e**x)``, vectorised.
    name : str
        Registry-style name, used in reports.
    domain : {"full_line", "unit_interval"}
    assoc : tuple of IndexPair or None
        Extension indices of the associated functions ``(B0, Binf)`` when
        known in closed form.  ``None`` means "estimate numerically".
    sv_class_check : bool
        Whether ``b(t**2) ~ b(t)`` is known to hold.
    """

    def __init__(self, logfn: LogFn, name: str = "b", *, domain: str = "full_line",
                 assoc: Optional[tuple] = None, sv_class_check: bool = True,
                 breaks: Sequence[float] = (0.0,)):
        super().__init__(logfn, name, breaks)
        if domain not in ("full_line", "unit_interval"):
            raise ValueError(f"unknown domain {domain!r}")
        self.domain = domain
        self.assoc = assoc
        self.sv_class_check = bool(sv_class_check)

    @property
    def index_info(self) -> IndexPair:
        # slowly varying functions always have trivial indices
        return ZERO_INDEX

    def assoc_indices(self) -> tuple:
        """Indices of ``(B0, Binf)``; numeric estimate when not known."""
        if self.assoc is not None:
            return self.assoc
        pair = associated_pair(self)
        i0 = extension_indices(pair.B0, domain="unit_interval")
        iinf = (extension_indices(pair.Binf, domain="unit_interval")
                if pair.Binf is not None else None)
        return (i0, iinf)


class PowerFunction(PositiveFunction):
    """``t -> t**c``."""

    def __init__(self, c: float):
        c = float(c)
        super().__init__(lambda x: c * x, f"power({_fmt(c)})")
        self.exponent = c
        self.index_info = IndexPair(c, c)


def _fmt(v: float) -> str:
    return repr(float(v)).rstrip("0").rstrip(".") if float(v) != int(v) else str(int(v))


def _merge_domain(a, b) -> str:
    da = getattr(a, "domain", "full_line")
    db = getattr(b, "domain", "full_line")
    return "unit_interval" if "unit_interval" in (da, db) else "full_line"


# constructors ---------------------------------------------------------------

def make_broken_log(alpha: float, beta: float) -> SlowlyVarying:
    """``ell**alpha`` on (0, 1] and ``ell**beta`` on (1, inf).

    Examples
    --------
    >>> b = make_broken_log(2, -1)
    >>> float(b(np.exp(-1.0))), float(b(1.0)), float(b(np.e))
    (4.0, 1.0, 0.5)
    """
    a, c = float(alpha), float(beta)

    def logfn(x):
        return np.where(x <= 0.0, a, c) * np.log1p(np.abs(x))

    name = f"ell_pow({_fmt(a)})" if a == c else f"broken_log({_fmt(a)},{_fmt(c)})"
    return SlowlyVarying(logfn, name, assoc=(IndexPair(-a, -a), IndexPair(-c, -c)))


def ell_power(gamma: float) -> SlowlyVarying:
    return make_broken_log(gamma, gamma)


def const(c: float = 1.0) -> SlowlyVarying:
    c = float(c)
    if not c > 0 or not math.isfinite(c):
        raise ValueError("constant weight must be positive and finite")
    lc = math.log(c)
    return SlowlyVarying(lambda x: np.full(np.shape(x), lc), "const" if c == 1 else f"const({_fmt(c)})",
                         assoc=(ZERO_INDEX, ZERO_INDEX), breaks=())


def scale(f: PositiveFunction, c: float) -> PositiveFunction:
    if not c > 0:
        raise ValueError("scale factor must be positive")
    lc = math.log(c)
    name = f"{_fmt(c)}*{f.name}"
    if isinstance(f, SlowlyVarying):
        return SlowlyVarying(lambda x: f.log(x) + lc, name, domain=f.domain, assoc=f.assoc,
                             sv_class_check=f.sv_class_check, breaks=f.breaks)
    return PositiveFunction(lambda x: f.log(x) + lc, name, f.breaks)


def product(f: PositiveFunction, g: PositiveFunction) -> PositiveFunction:
    name = f"{f.name}*{g.name}"
    breaks = f.breaks + g.breaks
    fn = lambda x: f.log(x) + g.log(x)  # noqa: E731
    if isinstance(f, SlowlyVarying) and isinstance(g, SlowlyVarying):
        assoc = None
        if f.assoc is not None and g.assoc is not None:
            inf = (f.assoc[1] + g.assoc[1]) if (f.assoc[1] is not None and g.assoc[1] is not None) else None
            assoc = (f.assoc[0] + g.assoc[0], inf)
        return SlowlyVarying(fn, name, domain=_merge_domain(f, g), assoc=assoc,
                             sv_class_check=f.sv_class_check and g.sv_class_check, breaks=breaks)
    return PositiveFunction(fn, name, breaks)


def power(f: PositiveFunction, r: float) -> PositiveFunction:
    r = float(r)
    name = f"({f.name})^{_fmt(r)}" if "*" in f.name else f"{f.name}^{_fmt(r)}"
    fn = lambda x: r * f.log(x)  # noqa: E731
    if isinstance(f, SlowlyVarying):
        assoc = None
        if f.assoc is not None:
            assoc = (f.assoc[0].scaled(r), f.assoc[1].scaled(r) if f.assoc[1] is not None else None)
        return SlowlyVarying(fn, name, domain=f.domain, assoc=assoc,
                             sv_class_check=f.sv_class_check, breaks=f.breaks)
    if isinstance(f, PowerFunction):
        return PowerFunction(f.exponent * r)
    return PositiveFunction(fn, name, f.breaks)


def as_positive_function(phi, name: str = "phi") -> PositiveFunction:
    """Wrap a plain callable of ``t`` so it can be used in log coordinates."""
    if isinstance(phi, PositiveFunction):
        return phi

    def logfn(x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            t = np.exp(x)
            out = np.log(np.asarray(phi(t), dtype=float))
        # 0*inf at t underflowing to 0 or overflowing: treat as a zero value
        edge = np.isnan(out) & ((t == 0.0) | np.isinf(t))
        return np.where(edge, -np.inf, out)

    return PositiveFunction(logfn, name)


# associated functions -------------------------------------------------------

@dataclass(frozen=True)
class AssociatedPair:
    """``B0(u) = b(e**(1-1/u))`` and ``Binf(u) = b(e**(1/u-1))`` on (0, 1].

    Both are stored in log coordinates of ``u``.
    """

    B0: PositiveFunction
    Binf: Optional[PositiveFunction]
    source: SlowlyVarying
    delta2_ratio: float
    not_delta2: bool


def associated_pair(b: SlowlyVarying, bound: float = DELTA2_BOUND) -> AssociatedPair:
    """Associated functions of ``b`` with a numeric Delta_2 check.

    Examples
    --------
    >>> pair = associated_pair(make_broken_log(2.0, -1.0))
    >>> round(float(pair.B0(0.5)), 12), round(float(pair.Binf(0.5)), 12)
    (4.0, 0.5)
    """
    def log_b0(y):
        with np.errstate(over="ignore"):
            return b.log(1.0 - np.exp(-y))

    def log_binf(y):
        with np.errstate(over="ignore"):
            return b.log(np.exp(-y) - 1.0)

    B0 = PositiveFunction(log_b0, f"B0[{b.name}]")
    Binf = None if b.domain == "unit_interval" else PositiveFunction(log_binf, f"Binf[{b.name}]")
    # Delta_2: B(u) ~ B(2u) on (0, 1/2]
    y = np.linspace(math.log(2.0 ** -60), math.log(0.5), 2401)
    ratios = [np.max(np.abs(B0.log(y) - B0.log(y + math.log(2.0))))]
    if Binf is not None:
        ratios.append(np.max(np.abs(Binf.log(y) - Binf.log(y + math.log(2.0)))))
    ratio = float(np.exp(max(ratios)))
    return AssociatedPair(B0, Binf, b, ratio, ratio > bound)


# extension indices ----------------------------------------------------------

def _log_dilation(logphi, xs, lt, domain):
    """log m(t) for t = e**lt, sup over the sample abscissae ``xs``."""
    if domain == "unit_interval":
        xs = xs[xs <= min(0.0, -lt)]
    vals = logphi(xs + lt) - logphi(xs)
    vals = vals[np.isfinite(vals)]
    return float(np.max(vals)) if vals.size else math.nan


def _slope(ks, logm, sign):
    lt = sign * ks * math.log(2.0)
    A = np.column_stack([lt, np.log1p(np.abs(lt)), np.ones_like(lt)])
    coef, *_ = np.linalg.lstsq(A, logm, rcond=None)
    return float(coef[0])


def extension_indices(phi, grid: Optional[np.ndarray] = None, *, domain: str = "full_line",
                      kmax: int = 40, budget: float = INDEX_BUDGET,
                      use_analytic: bool = True) -> IndexPair:
    """Lower and upper extension indices of ``phi``.

    The dilation function ``m(t) = sup_s phi(ts)/phi(s)`` is sampled at
    ``t = 2**(+-k)``, ``k = 1..kmax``.  On the outer decade of ``k`` the
    curve ``log m`` is regressed on ``log t`` and ``log ell(t)``; the second
    regressor absorbs logarithmic factors so that ``t**a * ell**b`` gives the
    slope ``a`` without bias.  The uncertainty is the drift between the
    estimate on ``k in [kmax/2-9, kmax/2]`` and on ``k in [kmax-9, kmax]``.

    Parameters
    ----------
    phi : PositiveFunction or callable of t
    grid : array, optional
        Values of ``s`` used for the supremum (default: a log grid that
        contains every ``2**j``).
    domain : {"full_line", "unit_interval"}
        For ``unit_interval`` both ``s`` and ``ts`` stay in (0, 1].

    Raises
    ------
    IndexUnstable
        If the two window estimates differ by more than ``budget``.
    """
    info = getattr(phi, "index_info", None)
    if use_analytic and isinstance(info, IndexPair) and info.exact:
        return info
    f = as_positive_function(phi)
    span = 2 * kmax * math.log(2.0)
    if grid is None:
        xs = np.union1d(np.linspace(-span, span, 4001),
                        np.arange(-2 * kmax, 2 * kmax + 1) * math.log(2.0))
    else:
        xs = np.log(np.asarray(grid, dtype=float))
    if domain == "unit_interval":
        xs = xs[xs <= 0.0]
    ks = np.arange(1, kmax + 1)
    lm0 = np.array([_log_dilation(f.log, xs, -k * math.log(2.0), domain) for k in ks])
    lminf = np.array([_log_dilation(f.log, xs, k * math.log(2.0), domain) for k in ks])
    half = kmax // 2
    w1 = (ks > half - 10) & (ks <= half)
    w2 = ks > kmax - 10
    est = {}
    for label, lm, sign in (("pi", lm0, -1.0), ("rho", lminf, 1.0)):
        if not np.all(np.isfinite(lm[w1 | w2])):
            raise IndexUnstable(f"dilation function of {f.name} is not finite on the sample grid")
        e1 = _slope(ks[w1], lm[w1], sign)
        e2 = _slope(ks[w2], lm[w2], sign)
        unc = abs(e2 - e1)
        if unc > budget:
            raise IndexUnstable(f"{label} of {f.name}: window estimates {e1:.4g} and {e2:.4g} "
                                f"differ by more than {budget}")
        est[label] = (e2, unc)
    pi, rho = est["pi"][0], est["rho"][0]
    unc = max(est["pi"][1], est["rho"][1], 1e-9)
    if pi > rho:
        mid = 0.5 * (pi + rho)
        unc = max(unc, 0.5 * (pi - rho))
        pi = rho = mid
    return IndexPair(pi, rho, "numeric", unc)


# monotonicity and composition -----------------------------------------------

def almost_increasing(values: np.ndarray, C: float = ALMOST_C) -> bool:
    """``min_{s<t} f(t)/f(s) >= 1/C`` given ``log f`` on an increasing grid."""
    lv = np.asarray(values, dtype=float)
    worst = np.max(np.maximum.accumulate(lv) - lv)
    return bool(worst <= math.log(C) + 1e-12)


def _check_grid(domain: str) -> np.ndarray:
    if domain == "unit_interval":
        return np.linspace(-50.0, 0.0, 1001)
    return np.linspace(-50.0, 50.0, 2001)


def check_sv_class(b: PositiveFunction, bound: float = DELTA2_BOUND) -> bool:
    """Numeric check of ``b(t**2) ~ b(t)`` on a log grid."""
    x = _check_grid(getattr(b, "domain", "full_line"))
    return bool(np.max(np.abs(b.log(2.0 * x) - b.log(x))) <= math.log(bound))


def sv_compose(b: SlowlyVarying, mu: PositiveFunction, *, domain: Optional[str] = None,
               C: float = ALMOST_C) -> SlowlyVarying:
    """``b o mu`` after checking ``mu`` and ``t/mu**delta`` are almost increasing.

    The check runs on a log grid of the requested domain; ``unit_interval``
    only looks at (0, 1], which is what ordered couples need.

    Raises
    ------
    NotAdmissible
        When no ``delta`` in a small ladder makes ``t/mu**delta`` almost
        increasing, or ``mu`` itself is not.
    """
    dom = domain or _merge_domain(b, mu)
    x = _check_grid(dom)
    lmu = mu.log(x)
    if not np.all(np.isfinite(lmu)):
        raise NotAdmissible(f"{mu.name} is not positive and finite on the grid")
    if not almost_increasing(lmu, C):
        raise NotAdmissible(f"{mu.name} is not almost increasing on {dom}")
    if not any(almost_increasing(x - d * lmu, C) for d in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)):
        raise NotAdmissible(f"t/{mu.name}^delta is not almost increasing for any tested delta")
    if isinstance(mu, SlowlyVarying):
        # b(mu(e^(1-1/u))) is slowly varying in u, so both indices vanish
        assoc = (ZERO_INDEX, ZERO_INDEX)
    elif isinstance(mu, PowerFunction) and b.assoc is not None:
        assoc = b.assoc if mu.exponent > 0 else (b.assoc[1], b.assoc[0])
    else:
        assoc = None
    return SlowlyVarying(lambda xx: b.log(mu.log(xx)), f"compose({b.name},{mu.name})",
                         domain=dom, assoc=assoc, sv_class_check=b.sv_class_check,
                         breaks=tuple(mu.breaks) + (0.0,))


# registry ---------------------------------------------------------------------

Value = Union[float, PositiveFunction]

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _as_function(v: Value) -> PositiveFunction:
    if isinstance(v, PositiveFunction):
        return v
    return const(v)


def _num(v: Value, what: str) -> float:
    if isinstance(v, PositiveFunction):
        raise SpecParseError(f"{what} expects a number")
    return float(v)


REGISTRY = {
    "ell": (lambda: ell_power(1.0), "1 + |log t|"),
    "const": (lambda c=1.0: const(_num(c, "const")), "constant weight, const or const(c)"),
    "one": (lambda: const(1.0), "alias of const"),
    "broken_log": (lambda a, b: make_broken_log(_num(a, "broken_log"), _num(b, "broken_log")),
                   "ell^a on (0,1], ell^b on (1,inf)"),
    "ell_pow": (lambda g: ell_power(_num(g, "ell_pow")), "ell^g"),
    "power": (lambda c: PowerFunction(_num(c, "power")), "t^c (not slowly varying; for compositions)"),
    "compose": (lambda f, g: sv_compose(_as_function(f), _as_function(g)), "compose(b, mu) = b(mu(t))"),
    "compose_unit": (lambda f, g: sv_compose(_as_function(f), _as_function(g), domain="unit_interval"),
                     "compose(b, mu) checked on (0,1] only"),
}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise SpecParseError(f"cannot tokenize {text!r} at {pos}")
            num, name, sym = m.groups()
            self.toks.append(("num", float(num)) if num else ("name", name) if name else ("sym", sym))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, sym=None):
        tok = self.peek()
        if sym is not None and tok != ("sym", sym):
            raise SpecParseError(f"expected {sym!r} in {self.text!r}")
        self.i += 1
        return tok

    def parse(self) -> Value:
        v = self.expr()
        if self.i != len(self.toks):
            raise SpecParseError(f"trailing input in {self.text!r}")
        return v

    def expr(self) -> Value:
        v = self.term()
        while self.peek() in (("sym", "*"), ("sym", "/")):
            op = self.take()[1]
            w = self.term()
            if isinstance(v, float) and isinstance(w, float):
                v = v * w if op == "*" else v / w
            elif op == "*":
                v = _as_function(v) * (w if isinstance(w, float) else w) if isinstance(v, PositiveFunction) \
                    else _as_function(w) * v
            else:
                v = _as_function(v) / (w if isinstance(w, float) else _as_function(w))
        return v

    def term(self) -> Value:
        v = self.unary()
        if self.peek() == ("sym", "^"):
            self.take()
            r = _num(self.unary(), "^")
            v = v ** r if isinstance(v, float) else power(v, r)
        return v

    def unary(self) -> Value:
        if self.peek() == ("sym", "-"):
            self.take()
            return -_num(self.unary(), "unary minus")
        return self.atom()

    def atom(self) -> Value:
        kind, val = self.take()
        if kind == "num":
            return val
        if kind == "sym" and val == "(":
            v = self.expr()
            self.take(")")
            return v
        if kind == "name":
            if val not in REGISTRY:
                raise SpecParseError(f"unknown weight {val!r}")
            args = []
            if self.peek() == ("sym", "("):
                self.take()
                if self.peek() != ("sym", ")"):
                    args.append(self.expr())
                    while self.peek() == ("sym", ","):
                        self.take()
                        args.append(self.expr())
                self.take(")")
            try:
                return REGISTRY[val][0](*args)
            except TypeError as exc:
                raise SpecParseError(f"bad arguments for {val}: {exc}") from None
            except (ValueError, NotAdmissible) as exc:
                raise SpecParseError(str(exc)) from None
        raise SpecParseError(f"unexpected token {val!r} in {self.text!r}")


def parse_weight(text: str) -> PositiveFunction:
    """Build a weight from a registry expression.

    >>> parse_weight("broken_log(1,-1)").name
    'broken_log(1,-1)'
    >>> float(parse_weight("ell^2")(np.e))
    4.0
    """
    if not isinstance(text, str) or not text.strip():
        raise SpecParseError("empty weight expression")
    return _as_function(_Parser(text).parse())


def list_weights() -> list:
    return [(name, desc) for name, (_, desc) in sorted(REGISTRY.items())]
