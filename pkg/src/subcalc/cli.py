"""Command-line entry point: ``subcalc list | run | subdiff | verify | report``."""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import functions as fn
from . import scenarios as sc
from .formulas import FORMULA_IDS
from .geometry import Polyhedron, _interval
from .integral import oracle_eps_subdiff

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def format_set(P: Polyhedron) -> str:
    if P.empty:
        return "empty"
    if P.dim == 1:
        lo, hi = _interval(P)
        if lo == hi:
            return f"{{{_num(lo)}}}"
        left = "(" if math.isinf(lo) else "["
        right = ")" if math.isinf(hi) else "]"
        return f"{left}{_num(lo)}, {_num(hi)}{right}"
    return json.dumps(P.to_json())


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.10g}"


def _out_dir(arg: str | None) -> str:
    return arg or os.environ.get("SUBCALC_OUT") or "subcalc-out"


def _options(args, out_dir: str | None = None) -> sc.RunOptions:
    return sc.RunOptions(tol=args.tol, directions=args.directions, box_radius=args.box_radius,
                         out_dir=out_dir, plots=not getattr(args, "no_plots", False))


def _print_report(rep: sc.Report) -> None:
    for r in rep.results:
        gap = "" if r.gap is None else f" gap={sc._fmt(r.gap)}"
        why = f" ({r.reason})" if r.reason else ""
        print(f"  {r.verdict:7s} {r.check}{gap}{why}")


def cmd_list(args) -> int:
    for name in sc.builtin_names():
        s = sc.load(name)
        summary = re.split(r"\.\s", s.description)[0]
        print(f"{name:26s} {len(s.checks):2d} checks  {summary}")
    return EXIT_OK


def cmd_run(args) -> int:
    names = sc.builtin_names() if args.scenario == "all" else [args.scenario]
    try:
        scen = [sc.load(n) for n in names]
    except KeyError as err:
        print(f"unknown scenario {err.args[0]!r}", file=sys.stderr)
        return EXIT_USAGE
    except sc.ScenarioError as err:
        print(f"rejected: {err}", file=sys.stderr)
        return EXIT_USAGE
    out = _out_dir(args.out)
    opts = _options(args, out)
    if args.jobs > 1 and args.scenario == "all":
        reports = sc.run_many(names, opts, jobs=args.jobs)
    else:
        reports = sorted((sc.run_scenario(s, opts) for s in scen), key=lambda r: r.scenario)
    sc.write_reports(reports, out)
    for rep in reports:
        print(f"{rep.scenario}: {'pass' if rep.passed else 'FAIL'}")
        _print_report(rep)
    print(f"reports written to {out}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _load_function_json(src: str) -> dict:
    p = Path(src)
    if p.exists():
        return json.loads(p.read_text())
    return json.loads(src)


def cmd_subdiff(args) -> int:
    try:
        data = _load_function_json(args.function)
        x = [float(v) for v in str(args.x).split(",")]
        f = fn.from_json(data, {}, len(x))
    except (ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"cannot read function: {err}", file=sys.stderr)
        return EXIT_USAGE
    res = fn.eps_subdifferential(f, np.array(x), args.eps, directions=args.directions)
    print(format_set(res.set))
    if args.verbose:
        print(f"exactness: {res.exactness}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.formula not in FORMULA_IDS:
        print(f"unknown formula {args.formula!r}; known: {', '.join(FORMULA_IDS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        s = sc.load(args.scenario)
    except KeyError:
        print(f"unknown scenario {args.scenario!r}", file=sys.stderr)
        return EXIT_USAGE
    opts = _options(args)
    checks = [c for c in s.checks if c.get("formula") == args.formula
              or (args.formula == "hup" and c["kind"] == "hup")]
    if checks:
        ok_all = True
        for c in checks:
            try:
                ok, gap, detail, _ = sc._check(s, c, opts)
            except (sc.Skip, ValueError) as err:
                print(f"  skipped {c['id']} ({err})")
                continue
            for key, d in detail.items():
                res = d.get("result") if isinstance(d, dict) else None
                if res is not None:
                    shown = "refused" if res["set"] is None else format_set(
                        Polyhedron.from_json(res["set"]["set"], dim=s.dim))
                    print(f"{args.formula} {key}: {shown}")
            print(f"  {'pass' if ok else 'fail':7s} {c['id']} gap={sc._fmt(gap)}")
            ok_all &= ok
        return EXIT_OK if ok_all else EXIT_FAIL
    # no declared expectation: compare against the definitional oracle
    x = np.asarray(s.query_points[0] if s.query_points else [0.0] * s.dim, dtype=float).reshape(s.dim)
    eps = float(s.eps_grid[0]) if s.eps_grid else 0.0
    try:
        res = sc.evaluate_formula(args.formula, s, x, eps, {}, opts)
    except (sc.Skip, sc.ScenarioError, ValueError) as err:
        print(f"{args.formula} not applicable to {s.name}: {err}", file=sys.stderr)
        return EXIT_FAIL
    if res.set is None:
        print(f"{args.formula} refused: qualification fails")
        return EXIT_FAIL
    orc = oracle_eps_subdiff(s.build(), x, eps)
    gap = sc.set_gap(res.set.set, orc, args.box_radius)
    tol = args.tol if args.tol is not None else sc.QUADRATURE_TOL
    print(f"{args.formula} at x={x.tolist()} eps={eps}: {format_set(res.set.set)}")
    print(f"oracle: {format_set(orc)}  gap={sc._fmt(gap)}")
    return EXIT_OK if gap <= tol else EXIT_FAIL


def cmd_report(args) -> int:
    if not Path(args.dir).is_dir():
        print(f"no such directory {args.dir!r}", file=sys.stderr)
        return EXIT_USAGE
    summary = sc.aggregate(args.dir)
    c = summary["counts"]
    print(f"{len(summary['scenarios'])} scenarios: {c['pass']} pass, {c['fail']} fail, {c['skipped']} skipped")
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subcalc", description="eps-subdifferential calculus for integral functionals")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="override every check tolerance")
    common.add_argument("--directions", type=int, default=360, help="direction grid for 2D sampled sets")
    common.add_argument("--box-radius", type=float, default=1e3, help="truncation box for Hausdorff comparisons")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("list", help="list the builtin scenarios").set_defaults(func=cmd_list)
    r = sub.add_parser("run", parents=[common], help="run a scenario (or all) and write reports")
    r.add_argument("scenario")
    r.add_argument("--out", default=None, help="output directory (default $SUBCALC_OUT or ./subcalc-out)")
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=cmd_run)
    d = sub.add_parser("subdiff", parents=[common], help="one-shot eps-subdifferential of a function JSON")
    d.add_argument("function", help="path to a function JSON file, or inline JSON")
    d.add_argument("--x", required=True, help="point, comma separated in 2D")
    d.add_argument("--eps", type=float, default=0.0)
    d.add_argument("--verbose", action="store_true")
    d.set_defaults(func=cmd_subdiff)
    v = sub.add_parser("verify", parents=[common], help="evaluate one formula on a scenario")
    v.add_argument("formula")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_verify)
    rp = sub.add_parser("report", help="aggregate reports in a directory")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return int(args.func(args))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
