"""Ratio reports and their CSV / SVG renderings."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_WIDTH = 1e3


@dataclass
class RatioReport:
    """Outcome of one equivalence experiment.

    ``ratio = lhs / rhs`` per grid point; points with ``lhs == rhs == 0`` are
    skipped (noted).  A two-sided report passes when every ratio lies in
    ``constant_band`` and ``ratio_max / ratio_min <= max_width``; a one-sided
    report only needs ``ratio_max <= constant_band[1]``.
    """

    experiment_id: str
    grid: list
    lhs: list
    rhs: list
    ratio_min: float
    ratio_max: float
    constant_band: tuple
    verdict: str
    notes: list = field(default_factory=list)
    one_sided: bool = False
    max_width: float = DEFAULT_WIDTH
    grid_label: str = "t"
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def width(self) -> float:
        if self.ratio_min > 0 and math.isfinite(self.ratio_max):
            return self.ratio_max / self.ratio_min
        return math.inf

    @property
    def ratios(self) -> list:
        out = []
        for a, b in zip(self.lhs, self.rhs):
            out.append(math.nan if (a == 0 and b == 0) else (a / b if b else math.inf))
        return out

    def verdict_line(self) -> str:
        kind = "one-sided" if self.one_sided else "two-sided"
        flags = f" [{'; '.join(self.notes)}]" if self.notes else ""
        return (f"{self.experiment_id}: {self.verdict.upper()} {kind} ratio in "
                f"[{_fmt(self.ratio_min)}, {_fmt(self.ratio_max)}] width {_fmt(self.width)}{flags}")

    def to_csv(self, path) -> None:
        lines = [f"{self.grid_label},lhs,rhs,ratio"]
        for g, a, b, r in zip(self.grid, self.lhs, self.rhs, self.ratios):
            lines.append(",".join(_fmt(v) for v in (g, a, b, r)))
        atomic_write(path, "\n".join(lines) + "\n")

    def to_svg(self, path) -> None:
        atomic_write(path, ratio_svg(self))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def make_report(experiment_id: str, grid: Sequence, lhs: Sequence, rhs: Sequence, *,
                band: tuple = (0.0, math.inf), one_sided: bool = False,
                max_width: float = DEFAULT_WIDTH, notes: Optional[list] = None,
                grid_label: str = "t", extra: Optional[dict] = None) -> RatioReport:
    notes = list(notes or [])
    lhs = [float(v) for v in lhs]
    rhs = [float(v) for v in rhs]
    ratios = []
    skipped = 0
    for a, b in zip(lhs, rhs):
        if not (math.isfinite(a) and math.isfinite(b)):
            notes.append("divergent value")
            ratios.append(math.inf)
            continue
        if a == 0 and b == 0:
            skipped += 1
            continue
        ratios.append(a / b if b > 0 else math.inf)
    if skipped:
        notes.append(f"{skipped} zero/zero points skipped")
    if ratios:
        rmin, rmax = min(ratios), max(ratios)
    else:
        rmin, rmax = 1.0, 1.0
    lo, hi = band
    ok = "divergent value" not in notes
    if one_sided:
        ok = ok and rmax <= hi
    else:
        ok = ok and lo <= rmin and rmax <= hi and rmin > 0 and rmax / rmin <= max_width
    return RatioReport(experiment_id, [float(g) if not isinstance(g, str) else g for g in grid],
                       lhs, rhs, rmin, rmax, (lo, hi), "pass" if ok else "fail",
                       sorted(set(notes), key=notes.index), one_sided, max_width, grid_label,
                       dict(extra or {}))


def atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def ratio_svg(rep: RatioReport, width: int = 640, height: int = 360) -> str:
    """Line chart of log10(ratio) against log10(grid) (or index for labels)."""
    xs, ys = [], []
    for i, (g, r) in enumerate(zip(rep.grid, rep.ratios)):
        if not (isinstance(r, float) and math.isfinite(r) and r > 0):
            continue
        gx = float(g) if not isinstance(g, str) else float(i)
        xs.append(math.log10(gx) if (not isinstance(g, str) and gx > 0) else gx)
        ys.append(math.log10(r))
    pad = 50
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
             f'<text x="{pad}" y="24" font-family="sans-serif" font-size="14">'
             f'{_esc(rep.experiment_id)} ({rep.verdict})</text>']
    if xs:
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 - y0 < 1e-9:
            y0, y1 = y0 - 0.5, y1 + 0.5
        sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)  # noqa: E731
        sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)  # noqa: E731
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="#1f5fa8" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>')
        parts.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
        parts.append(f'<text x="{pad}" y="{height - 15}" font-family="sans-serif" font-size="11">'
                     f'log10 {rep.grid_label}: {x0:.3g} .. {x1:.3g}</text>')
        parts.append(f'<text x="{pad + 4}" y="{pad - 6}" font-family="sans-serif" font-size="11">'
                     f'log10 ratio: {y0:.3g} .. {y1:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def summary_rows(reports) -> np.ndarray:
    return np.array([[r.ratio_min, r.ratio_max] for r in reports], dtype=float)
