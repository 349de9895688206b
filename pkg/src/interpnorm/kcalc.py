"""Decreasing rearrangements and K-functionals for the couple (L1, Linf) on (0,1)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NotNonnegative, NotQuasiconcave, SpecParseError
from .svfun import PositiveFunction

CLOSURE_SAMPLES = 2 ** 14


@dataclass(frozen=True)
class FunctionSample:
    """A nonnegative function on (0, 1).

    ``form="piecewise_constant"`` stores ``breaks`` (``0 = b_0 < ... < b_n = 1``)
    and ``values`` (length ``n``, value on ``[b_i, b_{i+1})``).
    ``form="closure"`` stores a vectorised callable.
    """

    form: str
    breaks: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    func: Optional[Callable] = None
    name: str = "f"
    nonincreasing: bool = False

    def __post_init__(self):
        if self.form == "piecewise_constant":
            b = np.asarray(self.breaks, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if b.ndim != 1 or v.ndim != 1 or len(b) != len(v) + 1:
                raise ValueError("need len(breaks) == len(values) + 1")
            if len(v) and (b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0)):
                raise ValueError("breakpoints must increase strictly from 0 to 1")
            object.__setattr__(self, "breaks", b)
            object.__setattr__(self, "values", v)
        elif self.form == "closure":
            if self.func is None:
                raise ValueError("closure form needs func")
        else:
            raise ValueError(f"unknown form {self.form!r}")

    @property
    def nonnegative(self) -> bool:
        if self.form == "piecewise_constant":
            return bool(np.all(self.values >= 0))
        s = (np.arange(CLOSURE_SAMPLES) + 0.5) / CLOSURE_SAMPLES
        return bool(np.all(np.asarray(self.func(s)) >= 0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "closure":
            return np.asarray(self.func(x), dtype=float)
        if len(self.values) == 0:
            return np.zeros_like(x)
        i = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.values) - 1)
        return np.where((x >= 0) & (x < 1), self.values[i], 0.0)


def piecewise(breaks, values, name: str = "f") -> FunctionSample:
    return FunctionSample("piecewise_constant", np.asarray(breaks, float), np.asarray(values, float), name=name)


def closure(func: Callable, name: str = "f", nonincreasing: bool = False) -> FunctionSample:
    return FunctionSample("closure", func=func, name=name, nonincreasing=nonincreasing)


def zero_function() -> FunctionSample:
    return piecewise([0.0, 1.0], [0.0], "zero")


def _merge(breaks, values):
    """Drop zero-length pieces and fuse neighbours with equal values."""
    keep_b, keep_v = [breaks[0]], []
    for i, v in enumerate(values):
        if breaks[i + 1] <= breaks[i]:
            continue
        if keep_v and keep_v[-1] == v:
            keep_b[-1] = breaks[i + 1]
        else:
            keep_v.append(v)
            keep_b.append(breaks[i + 1])
    return np.array(keep_b), np.array(keep_v)


def rearrange(f: FunctionSample) -> FunctionSample:
    """Nonincreasing rearrangement on (0, 1).

    Piecewise constant input is handled exactly by sorting pieces by value.
    A closure is sampled at 2**14 midpoints and the samples are sorted,
    which is the exact rearrangement of the sampled step function.

    >>> fs = rearrange(piecewise([0, 0.3, 0.7, 1], [0, 1, 0]))
    >>> np.round(fs.breaks, 12).tolist(), fs.values.tolist()
    ([0.0, 0.4, 1.0], [1.0, 0.0])
    """
    if f.form == "piecewise_constant":
        if np.any(f.values < 0):
            raise NotNonnegative(f"{f.name} takes negative values")
        lengths = np.diff(f.breaks)
        order = np.argsort(-f.values, kind="stable")
        v = f.values[order]
        b = np.concatenate([[0.0], np.cumsum(lengths[order])])
        b[-1] = 1.0
        b, v = _merge(b, v)
        return FunctionSample("piecewise_constant", b, v, name=f"{f.name}*", nonincreasing=True)
    n = CLOSURE_SAMPLES
    s = (np.arange(n) + 0.5) / n
    vals = np.asarray(f.func(s), dtype=float)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise NotNonnegative(f"{f.name} is negative or not finite somewhere on (0,1)")
    v = np.sort(vals)[::-1]
    b, v = _merge(np.linspace(0.0, 1.0, n + 1), v)
    return FunctionSample("piecewise_constant", b, v, name=f"{f.name}*", nonincreasing=True)


def distribution(f: FunctionSample, lam) -> np.ndarray:
    """``|{x in (0,1): f(x) > lam}|`` (exact for piecewise constant ``f``)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if f.form != "piecewise_constant":
        f = rearrange(f)
    lengths = np.diff(f.breaks)
    return np.array([lengths[f.values > x].sum() for x in lam])


def add_piecewise(f: FunctionSample, g: FunctionSample) -> FunctionSample:
    b = np.union1d(f.breaks, g.breaks)
    mid = 0.5 * (b[:-1] + b[1:])
    return piecewise(b, f(mid) + g(mid), f"{f.name}+{g.name}")


class KProfile(PositiveFunction):
    """``t -> K(t, f; L1, Linf)`` for a piecewise-linear concave profile.

    The profile is determined by the nonincreasing slopes ``fstar`` on the
    pieces ``[knots[i], knots[i+1])`` of (0, 1); it is constant for ``t >= 1``.
    ``log(x)`` gives ``log K(e^x)`` without underflow for very small ``t``.
    """

    def __init__(self, knots, slopes, name: str = "K", source: str = "from_function"):
        knots = np.asarray(knots, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        if np.any(slopes < 0):
            raise NotNonnegative("slopes must be nonnegative")
        if np.any(np.diff(slopes) > 0):
            raise NotQuasiconcave("slopes must be nonincreasing")
        self.knots, self.slopes, self.source = knots, slopes, source
        self.cum = np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
        with np.errstate(divide="ignore"):
            lk = np.log(knots)
        super().__init__(self._logK, name, breaks=tuple(lk[1:]))
        self._lk = lk

    @property
    def total(self) -> float:
        """``K(1) = ||f||_{L1}``."""
        return float(self.cum[-1])

    @property
    def sup_value(self) -> float:
        """``lim_{t->0} K(t)/t = ||f||_{Linf}``."""
        return float(self.slopes[0]) if len(self.slopes) else 0.0

    @property
    def is_zero(self) -> bool:
        return self.total == 0.0

    def _logK(self, x):
        x0 = np.asarray(x, dtype=float)
        x = np.atleast_1d(x0)
        out = np.empty_like(x)
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            t = np.exp(np.minimum(x, 0.0))
            i = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.slopes) - 1)
            kval = self.cum[i] + self.slopes[i] * (t - self.knots[i])
            out[:] = np.log(np.maximum(kval, 0.0))
            first = x < self._lk[1]
            out[first] = np.log(self.slopes[0]) + x[first]
            out[x >= 0] = math.log(self.total) if self.total > 0 else -math.inf
        return out.reshape(x0.shape)

    def fstar_log(self, x):
        """``log f*(e^x)`` (``-inf`` beyond 1)."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            t = np.exp(np.minimum(x, 0.0))
            i = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.slopes) - 1)
            out = np.log(self.slopes[i])
        return np.where(x >= 0, -np.inf, out)

    def fstar(self, s):
        s = np.asarray(s, dtype=float)
        i = np.clip(np.searchsorted(self.knots, s, side="right") - 1, 0, len(self.slopes) - 1)
        return np.where((s >= 0) & (s < 1), self.slopes[i], 0.0)


class ClosureKProfile(PositiveFunction):
    """Synthetic profile given by ``log K(e^x)``; no rearrangement attached."""

    def __init__(self, logfn, name: str, breaks=(0.0,)):
        super().__init__(logfn, name, breaks)
        self.source = "synthetic"

    @property
    def is_zero(self) -> bool:
        return False


def k_functional(f: FunctionSample) -> KProfile:
    """``K(t) = int_0^min(t,1) f*``, exact for piecewise constant input.

    >>> K = k_functional(piecewise([0, 0.25, 0.5, 1], [2, 5, 1]))
    >>> float(K(0.5))
    1.75
    """
    fs = f if (f.form == "piecewise_constant" and f.nonincreasing) else rearrange(f)
    return KProfile(fs.breaks, fs.values, name=f"K[{f.name}]", source="from_function")


def check_quasiconcave(K, x=None, tol: float = 1e-12) -> bool:
    """K nondecreasing and K(t)/t nonincreasing on a log grid."""
    if x is None:
        x = np.linspace(-30.0, 5.0, 3501)
    lk = K.log(x)
    d = np.diff(lk)
    return bool(np.all(d >= -tol) and np.all(np.diff(lk - x) <= tol))


def synthetic_kprofile(spec: str, seed: Optional[int] = None):
    """Synthetic K-profiles.

    ``"min1t"``: ``min(1, t)``.
    ``"power:sigma,gamma"``: ``t^sigma ell^gamma(t)`` on (0,1], constant after.
    ``"concave:knots,seed"``: random concave piecewise-linear profile.
    """
    kind, _, args = spec.partition(":")
    kind = kind.strip()
    if kind == "min1t":
        return KProfile([0.0, 1.0], [1.0], "min1t", source="synthetic")
    if kind == "power":
        try:
            sigma, gamma = (float(a) for a in args.split(","))
        except ValueError:
            raise SpecParseError(f"bad power profile {spec!r}") from None

        def logfn(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, sigma * x + gamma * np.log1p(np.abs(x)), 0.0)

        K = ClosureKProfile(logfn, f"power({sigma:g},{gamma:g})")
        if not (0 < sigma <= 1) or not check_quasiconcave(K):
            raise NotQuasiconcave(f"{spec} is not quasi-concave")
        return K
    if kind == "concave":
        parts = [p for p in args.split(",") if p.strip()]
        n = int(parts[0]) if parts else 20
        s = int(parts[1]) if len(parts) > 1 else (7 if seed is None else seed)
        rng = np.random.default_rng(s)
        inner = np.sort(rng.uniform(0.0, 1.0, n - 1))
        knots = np.concatenate([[0.0], inner, [1.0]])
        slopes = np.sort(rng.uniform(0.05, 3.0, n))[::-1]
        K = KProfile(knots, slopes, f"concave({n},{s})", source="synthetic")
        if not check_quasiconcave(K):
            raise NotQuasiconcave(f"{spec} failed the invariant check")
        return K
    raise SpecParseError(f"unknown synthetic profile {spec!r}")


# named functions and the default corpus ------------------------------------------

def random_piecewise(seed: int) -> FunctionSample:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    inner = np.sort(rng.uniform(0.02, 0.98, n - 1))
    b = np.concatenate([[0.0], inner, [1.0]])
    return piecewise(b, np.round(rng.uniform(0.0, 5.0, n), 6), f"piecewise{seed}")


def read_function_file(path) -> FunctionSample:
    """Lines ``breakpoint value``; each value holds up to the next breakpoint (or 1)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                try:
                    b, v = (float(a) for a in line.split())
                except ValueError:
                    raise SpecParseError(f"bad line in {path}: {line!r}") from None
                rows.append((b, v))
    if not rows:
        return zero_function()
    b = [r[0] for r in rows] + [1.0]
    return piecewise(b, [r[1] for r in rows], str(path))


def parse_function(text: str) -> FunctionSample:
    """``const:c``, ``chi:a,b``, ``linear``, ``piecewise:seed``, ``file:PATH``."""
    kind, _, args = text.partition(":")
    kind = kind.strip()
    try:
        if kind == "file":
            return read_function_file(args)
        if kind == "const":
            c = float(args or 1.0)
            return piecewise([0.0, 1.0], [c], f"const{c:g}")
        if kind == "chi":
            a, b = (float(v) for v in args.split(","))
            br = [0.0] + [v for v in (a, b) if 0 < v < 1] + [1.0]
            mid = 0.5 * (np.array(br[:-1]) + np.array(br[1:]))
            return piecewise(br, ((mid > a) & (mid < b)).astype(float), f"chi({a:g},{b:g})")
        if kind == "linear":
            return closure(lambda x: np.asarray(x, dtype=float), "linear")
        if kind == "piecewise":
            return random_piecewise(int(args))
    except (ValueError, OSError) as exc:
        raise SpecParseError(f"bad function {text!r}: {exc}") from None
    raise SpecParseError(f"unknown function {text!r}")


def default_corpus(seed_offset: int = 0) -> list:
    """Twelve K-profiles with fixed seeds, all from (L1, Linf) functions."""
    fns = [parse_function("const:1"), parse_function("chi:0.3,0.7"), parse_function("linear")]
    fns += [random_piecewise(s + seed_offset) for s in range(1, 9)]
    out = [k_functional(f) for f in fns]
    out[0].name = "min1t"
    out.append(synthetic_kprofile(f"concave:20,{7 + seed_offset}"))
    return out
