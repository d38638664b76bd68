"""Run every builtin scenario and print a one-line verdict per check.

    python3 scripts/run_catalog.py --out subcalc-out --jobs 4
"""
import argparse
import sys

from subcalc import scenarios as sc


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="subcalc-out")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="subset of scenario names")
    args = ap.parse_args()
    names = args.only or sc.builtin_names()
    opts = sc.RunOptions(out_dir=args.out)
    reports = sc.run_many(names, opts, jobs=args.jobs)
    sc.write_reports(reports, args.out)
    summary = sc.aggregate(args.out)
    for rep in reports:
        for r in rep.results:
            gap = "" if r.gap is None else f"  gap {sc._fmt(r.gap)}"
            print(f"{rep.scenario:26s} {r.check:16s} {r.verdict:7s} {r.seconds:7.2f}s{gap}")
    c = summary["counts"]
    print(f"\n{c['pass']} pass, {c['fail']} fail, {c['skipped']} skipped; reports in {args.out}")
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
