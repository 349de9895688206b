"""Command line front end: ``interpnorm norm|verify|campaign|list-weights|list-spaces``.

Exit codes: 0 pass, 1 fail, 2 parse error, 3 quadrature failure,
4 hypothesis gate (negative controls assert this one).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import verify as V
from .errors import (CaseGateFailed, HypothesisViolated, InterpNormError, QuadratureNonconvergent,
                     SpecParseError, Triviality)
from .kcalc import k_functional, parse_function, synthetic_kprofile
from .norms import RISpaceSpec
from .reports import RatioReport, atomic_write
from .spaces import KINDS, check_nontrivial, norm, parse_space_string, SpaceSpec
from .svfun import list_weights, parse_weight

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_QUAD, EXIT_GATE = 0, 1, 2, 3, 4

SPACE_HELP = {
    "theta": "||t^-theta b(t) K(t)||_E~",
    "R": "|| b(t) ||s^-theta a K||_F~(t,inf) ||_E",
    "L": "|| b(t) ||s^-theta a K||_F~(0,t) ||_E",
    "RL": "|| c(u) || b(t) ||s^-theta a K||_G~(t,u) ||_F~(0,u) ||_E^",
    "LR": "|| c(u) || b(t) ||s^-theta a K||_G~(u,t) ||_F~(u,inf) ||_E^",
    "grand": "grand Lebesgue space L^{p),alpha} (R-type over (L1, Linf))",
    "small": "small Lebesgue space L^{(p,alpha} (L-type over (L1, Linf))",
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (HypothesisViolated, CaseGateFailed, Triviality)):
        return EXIT_GATE
    if isinstance(exc, QuadratureNonconvergent):
        return EXIT_QUAD
    if isinstance(exc, (SpecParseError, json.JSONDecodeError, KeyError, TypeError, ValueError)):
        return EXIT_PARSE
    return EXIT_FAIL


# descriptors ---------------------------------------------------------------------

def _space(v, default="Linf") -> RISpaceSpec:
    return RISpaceSpec.parse(v if v is not None else default)


def _grid(desc: dict, lo: float = 1e-6, hi: float = 1e6, points: int = 49) -> np.ndarray:
    g = desc.get("grid") or {}
    n = int(g.get("points", points))
    if n < 8:
        raise SpecParseError("grid.points must be at least 8")
    if g.get("scale", "log") != "log":
        raise SpecParseError("only log-scaled grids are supported")
    return V.log_grid(float(g.get("min", lo)), float(g.get("max", hi)), n)


def load_descriptor(path) -> dict:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: bad JSON: {exc}") from None
    validate_descriptor(d)
    return d


def validate_descriptor(d) -> None:
    if not isinstance(d, dict):
        raise SpecParseError("descriptor must be a JSON object")
    for k in ("id", "kind"):
        if k not in d:
            raise SpecParseError(f"descriptor lacks {k!r}")
    if d["kind"] not in V.OPERATIONS:
        raise SpecParseError(f"unknown kind {d['kind']!r}")
    if not str(d["id"]).replace("_", "").replace("-", "").isalnum():
        raise SpecParseError(f"bad id {d['id']!r}")


def _reiteration_setup(p: dict) -> V.ReiterationSetup:
    b = parse_weight(p.get("b", "ell_pow(-1)"))
    E = _space(p.get("E"), "L2")
    eta_raw = p.get("eta", 0.5)
    if "alpha" in p:
        s = V.grand_small_setup(float(p["alpha"]), float(p["beta"]), float(p["p"]), 0.0, b, E)
    else:
        s = V.ReiterationSetup(theta=float(p["theta"]), a=parse_weight(p.get("a", "const")),
                               b0=parse_weight(p["b0"]), E0=_space(p.get("E0")),
                               b1=parse_weight(p["b1"]), E1=_space(p.get("E1")),
                               F=_space(p.get("F"), "L2"), b=b, E=E, eta=0.0,
                               mode=p.get("mode", "full_line"), label=p.get("label", "general"))
    if isinstance(eta_raw, str):
        m1, m2 = V.reiteration_thresholds(s)
        eta = {"M1": m1, "M2": m2}.get(eta_raw)
        if eta is None:
            raise SpecParseError(f"bad eta {eta_raw!r}")
    else:
        eta = float(eta_raw)
    return V.replace(s, eta=eta)


def run_descriptor(d: dict, seed: int = 0) -> RatioReport:
    """Run one experiment descriptor and return its report (exceptions propagate)."""
    validate_descriptor(d)
    kind, p, eid = d["kind"], dict(d.get("params") or {}), d["id"]
    force = bool(p.get("force", False))
    stab = bool(p.get("stability", True))
    corpus = lambda: V.Corpus.default(seed)  # noqa: E731
    if kind == "sv_scaling":
        rep = V.verify_sv_scaling(parse_weight(p["b"]), float(p["alpha"]), _space(p.get("E")),
                                  _grid(d), p.get("variant", "i"), eid, stab)
    elif kind == "limiting_estimate":
        rep = V.verify_limiting_estimate(parse_weight(p["b"]), _space(p.get("E")), p["side"], _grid(d),
                                         eid, force, stab)
    elif kind == "sv_embedding":
        rep = V.verify_sv_embedding(parse_weight(p["b"]), V.parse_positive(p["phi"]), _space(p.get("E")),
                                    p["side"], _grid(d), eid, force, stability=stab)
    elif kind == "limit_hardy":
        rep = V.verify_limit_hardy(parse_weight(p["b"]), V.parse_positive(p["f"]), _space(p.get("E")),
                                   p["side"], _grid(d, 10.0, 1e6, 25), eid, force, stability=stab)
    elif kind == "seq_hardy":
        rep = V.verify_seq_hardy_sweep(float(p.get("ratio", 0.5)), int(p.get("n", 64)),
                                       int(p.get("trials", 100)), int(p.get("seed", seed)),
                                       _space(p.get("E"), "L2"), p.get("direction", "cumulative_below"), eid)
    elif kind == "monotone_equivalent":
        rep = V.verify_monotone_equivalent(parse_weight(p["b"]), tuple(p.get("k_range", (-30, 30))),
                                           p.get("target", "ratio_below_1"), eid)
    elif kind in ("key_equivalence", "discrete_equivalence"):
        a, b = parse_weight(p["a"]), parse_weight(p["b"])
        E, F, G = (_space(p.get(k), "L2") for k in "EFG")
        f = V.parse_positive(p.get("f", "chi:1,e"))
        if kind == "key_equivalence":
            rep = V.verify_key_equivalence(a, b, E, F, G, f, p["side"], _grid(d, points=25), eid, force, stab)
        else:
            rep = V.verify_discrete_equivalence(a, b, f, E, F, G, p["side"], _grid(d, points=33),
                                                tuple(p.get("k_range", (-40, 40))), eid, force,
                                                stability=stab)
    elif kind == "holmstedt":
        mode = p.get("mode", "ordered_unit")
        hi = 0.5 if mode == "ordered_unit" else 1e6
        rep = V.verify_holmstedt(parse_function(p.get("function", "chi:0.3,0.7")), float(p["theta"]),
                                 parse_weight(p["b0"]), parse_weight(p["b1"]),
                                 parse_weight(p.get("a", "const")), _space(p.get("E0")),
                                 _space(p.get("E1")), _space(p.get("F"), "L2"),
                                 _grid(d, 1e-8 if mode == "ordered_unit" else 1e-6, hi, 25), mode, eid)
    elif kind == "change_of_variables":
        rep = V.verify_change_of_variables(corpus(), float(p.get("theta", 0.5)),
                                           parse_weight(p.get("b", "const")), parse_weight(p["phi"]),
                                           _space(p.get("E"), "L2"), eid, force)
    elif kind == "reiteration":
        rep = V.verify_reiteration(_reiteration_setup(p), corpus(), p.get("case"), eid, force)
    elif kind == "corollary_45":
        rep = V.verify_corollary_45(parse_weight(p.get("a", "const")), parse_weight(p["b"]),
                                    parse_weight(p["c"]), *(_space(p.get(k), "L2") for k in "EFG"),
                                    corpus(), float(p.get("theta", 0.5)), p.get("side", "i"), eid, force)
    else:  # pragma: no cover - guarded by validate_descriptor
        raise SpecParseError(kind)
    band = d.get("band")
    if band:
        apply_band(rep, float(band.get("lo", 0.0)), float(band.get("hi", math.inf)))
    return rep


def apply_band(rep: RatioReport, lo: float, hi: float) -> None:
    """Tighten the acceptance band from a descriptor; never turns a fail into a pass."""
    rep.constant_band = (max(lo, rep.constant_band[0]), min(hi, rep.constant_band[1]))
    r = [v for v in rep.ratios if not math.isnan(v)]
    bad = any(v > hi for v in r) if rep.one_sided else any(v < lo or v > hi for v in r)
    if bad:
        rep.notes.append(f"outside descriptor band [{lo:g}, {hi:g}]")
        rep.verdict = "fail"


def write_artifacts(rep: RatioReport, out_dir) -> None:
    out = Path(out_dir)
    rep.to_csv(out / f"{rep.experiment_id}.csv")
    rep.to_svg(out / f"{rep.experiment_id}.svg")


def expected_outcome(d: dict) -> str:
    """``pass`` for ordinary experiments; negative controls name what they expect."""
    if d.get("negative_control"):
        return d.get("expect", "fail")
    return "pass"


def execute(d: dict, out_dir, seed: int = 0) -> dict:
    """Run a descriptor, write artifacts, and return a summary row."""
    t0 = time.perf_counter()
    row = {"id": d["id"], "kind": d["kind"], "expect": expected_outcome(d), "ratio_min": math.nan,
           "ratio_max": math.nan, "line": ""}
    try:
        rep = run_descriptor(d, seed)
        write_artifacts(rep, out_dir)
        row.update(verdict=rep.verdict, ratio_min=rep.ratio_min, ratio_max=rep.ratio_max,
                   line=rep.verdict_line(), code=EXIT_PASS if rep.passed else EXIT_FAIL)
    except (InterpNormError, KeyError, TypeError, ValueError) as exc:
        code = exit_code_for(exc)
        tag = {EXIT_GATE: "hypothesis_violated", EXIT_QUAD: "quadrature_failure",
               EXIT_PARSE: "parse_error"}.get(code, "error")
        row.update(verdict=tag, code=code, line=f"{d['id']}: {tag.upper()} {exc}")
    row["wall_time"] = time.perf_counter() - t0
    return row


# commands ----------------------------------------------------------------------------

def _threads() -> int:
    v = os.environ.get("INTERPNORM_THREADS")
    if v:
        try:
            return max(1, int(v))
        except ValueError:
            pass
    return os.cpu_count() or 1


def cmd_norm(args) -> int:
    try:
        text = args.space
        spec = SpaceSpec.from_json(text) if text.lstrip().startswith("{") else parse_space_string(text)
        if args.kprofile:
            K = synthetic_kprofile(args.kprofile, args.seed)
        else:
            K = k_functional(parse_function(args.function))
    except InterpNormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    try:
        ok, reasons = check_nontrivial(spec)
        if not ok:
            for r in reasons:
                print(f"warning: {r}", file=sys.stderr)
        val = norm(K, spec, breakdown=args.breakdown)
    except InterpNormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    print(f"{float(val):.12g}")
    if args.breakdown and val.breakdown:
        bd = val.breakdown
        keys = list(bd)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(keys)
        for row in zip(*(bd[k] for k in keys)):
            w.writerow([f"{v:.12g}" for v in row])
        sys.stdout.write(buf.getvalue())
    return EXIT_PASS


def cmd_verify(args) -> int:
    try:
        d = load_descriptor(args.descriptor)
    except (InterpNormError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    out = args.output_dir or d.get("output_dir") or "."
    row = execute(d, out, args.seed)
    print(row["line"])
    return row["code"]


def _summary_csv(rows, timing: bool) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["id", "verdict", "ratio_min", "ratio_max"] + (["wall_time"] if timing else [])
    w.writerow(head)
    for r in rows:
        vals = [r["id"], r["verdict"], f"{r['ratio_min']:.12g}", f"{r['ratio_max']:.12g}"]
        if timing:
            vals.append(f"{r['wall_time']:.3f}")
        w.writerow(vals)
    return buf.getvalue()


def _index_html(rows) -> str:
    parts = ["<!DOCTYPE html>", "<html><head><meta charset=\"utf-8\"><title>campaign</title></head><body>",
             "<h1>Campaign summary</h1>", "<ul>"]
    for r in rows:
        svg = f"{r['id']}.svg"
        line = r["line"].replace("&", "&amp;").replace("<", "&lt;")
        parts.append(f"<li><p>{line}</p><img src=\"{svg}\" alt=\"{r['id']}\"/></li>")
    parts += ["</ul>", "</body></html>"]
    return "\n".join(parts) + "\n"


def _execute_star(a):
    return execute(*a)


def run_campaign(directory, out_dir, seed: int = 0, threads: int = 1, timing: bool = False):
    """Run every ``*.json`` descriptor in ``directory``; returns ``(rows, exit_code)``."""
    paths = sorted(Path(directory).glob("*.json"))
    descs = [load_descriptor(p) for p in paths]
    ids = [d["id"] for d in descs]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise SpecParseError(f"duplicate experiment ids: {', '.join(dup)}")
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    jobs = [(d, out_dir, seed) for d in descs]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as ex:
            rows = list(ex.map(_execute_star, jobs))
    else:
        rows = [execute(*j) for j in jobs]
    rows.sort(key=lambda r: r["id"])
    atomic_write(Path(out_dir) / "summary.csv", _summary_csv(rows, timing))
    atomic_write(Path(out_dir) / "index.html", _index_html(rows))
    code = EXIT_PASS
    for r in rows:
        if r["verdict"] != r["expect"]:
            code = EXIT_FAIL
    return rows, code


def cmd_campaign(args) -> int:
    out = args.output_dir or os.path.join(args.directory, "out")
    try:
        rows, code = run_campaign(args.directory, out, args.seed, _threads(), args.timing)
    except (InterpNormError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    for r in rows:
        flag = "" if r["verdict"] == r["expect"] else "  <-- unexpected"
        neg = " (negative control)" if r["expect"] != "pass" else ""
        print(f"{r['line']}{neg}{flag}")
    print(f"{len(rows)} experiments, summary in {os.path.join(out, 'summary.csv')}")
    return code


def cmd_list_weights(args) -> int:
    for name, desc in list_weights():
        print(f"{name:14s} {desc}")
    return EXIT_PASS


def cmd_list_spaces(args) -> int:
    for k in KINDS:
        print(f"{k:6s} {SPACE_HELP[k]}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="interpnorm", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="corpus / random seed offset")
    sub = ap.add_subparsers(dest="command", required=True)
    n = sub.add_parser("norm", help="compute one norm")
    n.add_argument("--space", required=True, help="e.g. grand:p=2,alpha=1 or a JSON space descriptor")
    g = n.add_mutually_exclusive_group(required=True)
    g.add_argument("--function", help="const:c, chi:a,b, linear, piecewise:seed, file:PATH")
    g.add_argument("--kprofile", help="min1t, power:sigma,gamma, concave:n,seed")
    n.add_argument("--breakdown", action="store_true", help="also print the inner profile as CSV")
    n.set_defaults(func=cmd_norm)
    v = sub.add_parser("verify", help="run one experiment descriptor")
    v.add_argument("descriptor")
    v.add_argument("--output-dir")
    v.set_defaults(func=cmd_verify)
    c = sub.add_parser("campaign", help="run every descriptor in a directory")
    c.add_argument("directory")
    c.add_argument("--output-dir")
    c.add_argument("--timing", action="store_true", help="add a wall_time column to summary.csv")
    c.set_defaults(func=cmd_campaign)
    sub.add_parser("list-weights", help="weight registry").set_defaults(func=cmd_list_weights)
    sub.add_parser("list-spaces", help="space kinds").set_defaults(func=cmd_list_spaces)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_PASS
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
