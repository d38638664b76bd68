"""Declarative scenarios: JSON catalog, verification runner, reports and SVG plots."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from . import expr
from . import functions as fn
from . import measure as ms
from .formulas import (
    FormulaResult, check_qualification, hup_sum, modulus_penalty_check, rhs_cor41,
    rhs_cor42, rhs_cor52, rhs_qualfin, rhs_theorem41, verify_conjugate_interchange,
    verify_inf_convolution_attainment,
)
from .geometry import (
    INF, Polyhedron, box, empty_set, hausdorff_distance, intersect, normal_cone_eps,
    whole_space, _interval,
)
from .integral import (
    Integrand, NodeFamily, aumann_of_subdifferentials, domain_of_integral, eps_certificate_decomposition,
    integral_value_status, oracle_eps_subdiff,
)

SCENARIO_PACKAGE = "subcalc.data"
CLOSED_FORM_TOL = 1e-6
QUADRATURE_TOL = 1e-3
_CLOSED_KINDS = {"node_eps_subdiff", "hup"}


class ScenarioError(ValueError):
    """Scenario rejected before any computation."""


class Skip(Exception):
    """A check that cannot run in this configuration."""


# ------------------------------------------------------------ nonconvex integrands for modulus checks

def _min_abs(y, c1=0.0, c2=1.0, k=1.0, d=0.0):
    return k * min(abs(y - c1), abs(y - c2) + d)


def _linear(y, k=1.0, b=0.0):
    return k * y + b


NONCONVEX_REGISTRY: dict[str, Callable[..., float]] = {"min_abs": _min_abs, "linear": _linear}


# ------------------------------------------------------------ scenario loading


def _schema() -> dict:
    return json.loads(resources.files(SCENARIO_PACKAGE).joinpath("scenario.schema.json").read_text())


def builtin_names() -> list[str]:
    root = resources.files(SCENARIO_PACKAGE).joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    description: str
    dim: int
    measure: dict
    integrand: dict
    facts: tuple
    checks: tuple
    functions: dict = field(default_factory=dict)
    query_points: tuple = ()
    eps_grid: tuple = ()
    raw: dict = field(default_factory=dict, repr=False)
    _built: dict = field(default_factory=dict, repr=False)

    def family(self, t: float) -> fn.ConvexFunction:
        if "members" in self.integrand:
            # one function per node of a discrete measure, matched by node value
            nodes = list(self.measure["nodes"])
            return fn.from_json(self.integrand["members"][nodes.index(t)], {"t": t}, self.dim)
        return fn.from_json(self.integrand["function"], {"t": t}, self.dim)

    def build(self) -> Integrand:
        if "F" not in self._built:
            mu = ms.from_json(self.measure)
            dd = self.integrand.get("declared_domain")
            kinks = None
            if self.integrand.get("kinks"):
                srcs = self.integrand["kinks"]
                kinks = lambda x: [expr.evaluate(s, _xenv(x)) for s in srcs]  # noqa: E731
            self._built["F"] = Integrand(
                self.name, self.family, mu,
                None if dd is None else fn.poly_from_json(dd, self.dim, {}), kinks)
        return self._built["F"]

    def function(self, key: str) -> fn.ConvexFunction:
        if key not in self.functions:
            raise ScenarioError(f"scenario {self.name!r} defines no function {key!r}")
        return fn.from_json(self.functions[key], {}, self.dim)


def _xenv(x) -> dict:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    env = {f"x{i}": float(v) for i, v in enumerate(x)}
    env["x"] = float(x[0])
    return env


def validate(data: dict) -> None:
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as err:
        raise ScenarioError(f"schema violation: {err.message}") from None
    fact_ids = [f["id"] for f in data["facts"]]
    check_ids = [c["id"] for c in data["checks"]]
    if len(set(check_ids)) != len(check_ids):
        raise ScenarioError("check ids must be unique")
    for c in data["checks"]:
        if "fact" in c and c["fact"] not in fact_ids:
            raise ScenarioError(f"check {c['id']!r} cites unknown fact {c['fact']!r}")


def parse(data: dict) -> Scenario:
    validate(data)
    return Scenario(
        name=data["name"], description=data.get("description", ""), dim=int(data["dim"]),
        measure=data["measure"], integrand=data["integrand"], facts=tuple(data["facts"]),
        checks=tuple(data["checks"]), functions=data.get("functions", {}),
        query_points=tuple(data.get("query_points", ())), eps_grid=tuple(data.get("eps_grid", ())), raw=data)


def load(name_or_path: str) -> Scenario:
    """A builtin scenario by name or a JSON file by path."""
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        return parse(json.loads(p.read_text()))
    if name_or_path not in builtin_names():
        raise KeyError(name_or_path)
    src = resources.files(SCENARIO_PACKAGE).joinpath("scenarios").joinpath(f"{name_or_path}.json").read_text()
    return parse(json.loads(src))


# ------------------------------------------------------------ reports


@dataclass
class CheckResult:
    check: str
    kind: str
    verdict: str  # pass | fail | skipped
    gap: float | None = None
    seconds: float = 0.0
    reason: str | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"check": self.check, "kind": self.kind, "verdict": self.verdict, "gap": self.gap}
        if self.reason:
            out["reason"] = self.reason
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class Report:
    scenario: str
    results: list[CheckResult]
    artifacts: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.verdict != "fail" for r in self.results)

    def to_json(self) -> dict:
        # runtimes are kept out so repeated runs give byte-identical JSON; they go to the CSV
        return _clean({"scenario": self.scenario, "passed": self.passed,
                       "checks": [r.to_json() for r in self.results],
                       "artifacts": sorted(Path(a).name for a in self.artifacts)})

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def csv_rows(self) -> list[list]:
        return [[self.scenario, r.check, r.verdict, _fmt(r.gap), f"{r.seconds:.3f}"] for r in self.results]


def _fmt(g) -> str:
    if g is None:
        return ""
    if isinstance(g, float) and not math.isfinite(g):
        return "inf" if g > 0 else "-inf"
    return f"{g:.3e}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ------------------------------------------------------------ runner


@dataclass(frozen=True)
class RunOptions:
    tol: float | None = None
    directions: int = 360
    box_radius: float = 1e3
    out_dir: str | None = None
    plots: bool = True


def expected_set(spec, env: dict, dim: int) -> Polyhedron:
    if spec == "whole":
        return whole_space(dim)
    if spec == "empty":
        return empty_set(dim)
    return fn.poly_from_json(spec, dim, env)


def set_gap(observed: Polyhedron, expected: Polyhedron, box_radius: float = 1e3) -> float:
    """Hausdorff distance of box truncations; infinite when recession cones differ."""
    if observed.empty and expected.empty:
        return 0.0
    h = hausdorff_distance(observed, expected, box_radius)
    if h.status == "empty-operand" or not h.cones_equal:
        return INF
    return float(h.distance)


def _points(value, dim: int) -> list[np.ndarray]:
    arr = np.asarray(value, dtype=float)
    return [row for row in arr.reshape(-1, dim)]


def _listify(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def evaluate_formula(fid: str, s: Scenario, x, eps: float = 0.0, params: dict | None = None,
                     opts: RunOptions = RunOptions()) -> FormulaResult:
    params = dict(params or {})
    F = s.build()
    if fid == "thm4_1":
        return rhs_theorem41(F, x, eps, **params)
    if fid in ("cor4_1_eq3", "cor4_1_eq4"):
        eq = "integral" if fid.endswith("eq3") else "finite"
        return rhs_cor41(F, x, T0=params.get("T0"), eq=eq, box_radius=opts.box_radius)
    if fid == "cor4_2":
        return rhs_cor42(F, x)
    if fid == "cor5_2":
        return rhs_cor52(F, x, eta0=params.get("eta0", 1.0), box_radius=opts.box_radius)
    if fid == "hup":
        return hup_sum(s.function(params.get("f1", "f1")), s.function(params.get("f2", "f2")), x,
                       eps0=params.get("eps0", 1.0), box_radius=opts.box_radius)
    if fid in ("qualfin_i", "qualfin_ii"):
        if not F.measure.is_discrete:
            raise Skip("finite-sum formulas need a finite discrete measure")
        return rhs_qualfin(F.members, x, params.get("T0", []), fid[-1], weights=F.measure.weights,
                           box_radius=opts.box_radius)
    raise KeyError(fid)


def _compare_formula(res: FormulaResult, expect: dict, env: dict, dim: int, tol: float, box_r: float):
    """(ok, gap, detail) for a formula result against its expectation block."""
    detail: dict[str, Any] = {"result": res.to_json()}
    ok, gap = True, None
    if "refused" in expect:
        ok &= res.refused == bool(expect["refused"])
    if res.set is None:
        return ok and "set" not in expect and "status" not in expect, gap, detail
    if "status" in expect:
        ok &= res.set.status == expect["status"]
    if "verdict" in expect:
        ok &= res.parameters.get("verdict") == expect["verdict"]
    if "set" in expect:
        E = expected_set(expect["set"], env, dim)
        gap = set_gap(res.set.set, E, box_r)
        detail["expected"] = E.to_json()
        ok &= gap <= tol
    return bool(ok), gap, detail


def _check(s: Scenario, c: dict, opts: RunOptions):
    """Run one check; returns (ok, gap, detail, labelled sets for plotting)."""
    kind = c["kind"]
    tol = opts.tol if opts.tol is not None else c.get("tol", CLOSED_FORM_TOL if kind in _CLOSED_KINDS
                                                          else QUADRATURE_TOL)
    dim, br = s.dim, opts.box_radius
    xs = _points(c.get("x", [0.0] * dim), dim)
    eps_list = [float(e) for e in _listify(c.get("eps", 0.0))]
    gaps: list[float] = []
    detail: dict[str, Any] = {}
    sets: list[tuple[str, Polyhedron]] = []
    ok = True

    def record(key, observed: Polyhedron, spec, env):
        nonlocal ok
        E = expected_set(spec, env, dim)
        g = set_gap(observed, E, br)
        gaps.append(g)
        detail[key] = {"observed": observed.to_json(), "expected": E.to_json(), "gap": g}
        ok &= g <= tol
        if len(sets) < 6:
            sets.append((f"{c['id']} {key}", observed))

    if kind == "node_eps_subdiff":
        for t in _listify(c["t"]):
            f = s.family(float(t))
            for x in xs:
                for e in eps_list:
                    S = fn.eps_subdifferential(f, x, e, directions=opts.directions).set
                    record(f"t={t},x={x.tolist()},eps={e}", S, c["expected"], {"t": t, "eps": e, **_xenv(x)})
    elif kind == "integral_value":
        F = s.build()
        for x in xs:
            r = integral_value_status(F, x)
            exp = expr.evaluate(c["expected"], _xenv(x))
            g = 0.0 if (exp == INF and r.value == INF) else abs(r.value - exp)
            gaps.append(g)
            detail[f"x={x.tolist()}"] = {"value": r.value, "status": r.status, "expected": exp}
            ok &= g <= tol
    elif kind == "domain":
        D = domain_of_integral(s.build())
        detail["source"] = D.source
        record("domain", D.set, c["expected"], {})
    elif kind == "aumann":
        F = s.build()
        for x in xs:
            Fx = F.at(x)
            fam = NodeFamily(Fx.members, Fx.measure, Fx.family)
            for e in eps_list:
                res = aumann_of_subdifferentials(fam, x, e)
                key = f"x={x.tolist()},eps={e}"
                if "status" in c:
                    ok &= res.status == c["status"]
                    detail[key] = res.to_json()
                if "expected" in c:
                    record(key, res.set, c["expected"], {"eps": e, **_xenv(x)})
    elif kind == "formula":
        fid = c["formula"]
        for x in xs:
            for e in eps_list:
                res = evaluate_formula(fid, s, x, e, c.get("params"), opts)
                o, g, d = _compare_formula(res, c.get("expect", {}), {"eps": e, **_xenv(x)}, dim, tol, br)
                ok &= o
                key = f"x={x.tolist()},eps={e}"
                detail[key] = d
                if g is not None:
                    gaps.append(g)
                if res.set is not None and len(sets) < 6:
                    sets.append((f"{fid} {key}", res.set.set))
    elif kind == "oracle":
        F = s.build()
        for x in xs:
            for e in eps_list:
                record(f"x={x.tolist()},eps={e}", oracle_eps_subdiff(F, x, e), c["expected"],
                       {"eps": e, **_xenv(x)})
    elif kind == "naive_unequal":
        F = s.build()
        wrong = expected_set(c["wrong_domain"], {}, dim)
        for x in xs:
            Fx = F.at(x)
            fam = NodeFamily(Fx.members, Fx.measure, Fx.family)
            naive = aumann_of_subdifferentials(fam, x, 0.0, extra=normal_cone_eps(wrong, x, 0.0))
            orc = oracle_eps_subdiff(F, x, 0.0)
            g = set_gap(naive.set, orc, br)
            gaps.append(g)
            detail[f"x={x.tolist()}"] = {"naive": naive.set.to_json(), "oracle": orc.to_json(), "gap": g}
            ok &= g > tol
            sets += [("naive", naive.set), ("oracle", orc)]
    elif kind == "hup":
        p = c.get("params", {})
        res = evaluate_formula("hup", s, xs[0], 0.0, p, opts)
        eps0 = p.get("eps0", 1.0)
        its = []
        for n, it in enumerate(res.iterates):
            env = {"eps": eps0 * 2.0 ** -n, **_xenv(xs[0])}
            E = expected_set(c["iterate"], env, dim)
            g = set_gap(it, E, br)
            gaps.append(g)
            its.append({"n": n, "observed": it.to_json(), "gap": g})
            ok &= g <= tol
        o, _, d = _compare_formula(res, c.get("expect", {}), _xenv(xs[0]), dim, tol, br)
        ok &= o and len(res.iterates) > 0
        detail.update(d, iterates=its)
        sets += [(f"eps_{n}", it) for n, it in enumerate(res.iterates[:5])]
    elif kind == "modulus":
        gs = [(lambda y, e=e: NONCONVEX_REGISTRY[e["name"]](y, **e.get("params", {}))) for e in c["g"]]
        window = tuple(c.get("window", (-5.0, 5.0)))
        for case in c["cases"]:
            rep = modulus_penalty_check(gs, c["weights"], float(xs[0][0]), float(case["eps"]), window)
            got = {"verdict": rep.verdict, "bound_holds": rep.bound_holds, "oracle_empty": rep.oracle_empty}
            want = {k: case[k] for k in got if k in case}
            ok &= all(got[k] == v for k, v in want.items())
            gaps.append(abs(rep.modulus_integral - float(case["eps"])))
            detail[f"eps={case['eps']}"] = {**got, "modulus_integral": rep.modulus_integral}
    elif kind == "certificate":
        F = s.build()
        for x in xs:
            cert = eps_certificate_decomposition(F, x, c["xstar"], eps_list[0])
            detail[f"x={x.tolist()}"] = {"status": cert.status, "residual": cert.residual}
            ok &= cert.status == c.get("status", "certified")
    elif kind == "qualification":
        F = s.build()
        for x in xs:
            q = check_qualification(F, x, int(c["t_index"]), which=c.get("which", "i"))
            detail[f"x={x.tolist()}"] = q.to_json()
            ok &= q.holds == bool(c.get("holds", True))
    elif kind == "interchange":
        rep = verify_conjugate_interchange(s.build(), c["vstar"])
        detail.update(lhs=rep.lhs, rhs=rep.rhs)
        ok &= rep.equal == bool(c.get("equal", True))
    elif kind == "inf_convolution":
        L = expected_set(c["L"], {}, dim)
        rep = verify_inf_convolution_attainment(s.function(c["g"]), L, c["xstar"])
        if rep.skipped:
            raise Skip("conjugate not computable")
        detail.update(lhs=rep.lhs, rhs=rep.rhs, attained=rep.attained)
        gaps.append(rep.gap)
        ok &= rep.equal and rep.attained == bool(c.get("attained", True))
    else:  # pragma: no cover - rejected by the schema
        raise ScenarioError(f"unknown check kind {kind!r}")
    finite = [g for g in gaps if g is not None]
    gap = max(finite) if finite else None
    if kind == "naive_unequal" and finite:
        gap = min(finite)
    return bool(ok), gap, detail, sets


def run_scenario(s: Scenario | str | dict, opts: RunOptions = RunOptions()) -> Report:
    if isinstance(s, str):
        s = load(s)
    elif isinstance(s, dict):
        s = parse(s)
    results: list[CheckResult] = []
    plotted: list[tuple[str, Polyhedron]] = []
    for c in s.checks:
        t0 = time.perf_counter()
        try:
            ok, gap, detail, sets = _check(s, c, opts)
            res = CheckResult(c["id"], c["kind"], "pass" if ok else "fail", gap, detail=detail)
            plotted += sets
        except Skip as sk:
            res = CheckResult(c["id"], c["kind"], "skipped", reason=str(sk))
        except NotImplementedError as err:
            res = CheckResult(c["id"], c["kind"], "skipped", reason=f"not implemented: {err}")
        except (ValueError, ArithmeticError) as err:
            res = CheckResult(c["id"], c["kind"], "fail", reason=f"{type(err).__name__}: {err}")
        if res.verdict == "pass":
            res.detail = {}  # only failures carry the offending sets
        res.seconds = time.perf_counter() - t0
        results.append(res)
    report = Report(s.name, results)
    if opts.out_dir and opts.plots and s.dim <= 2 and plotted:
        path = Path(opts.out_dir) / f"{s.name}.svg"
        emit_plot(plotted[:8], path, opts.box_radius if s.dim == 2 else None)
        report.artifacts.append(str(path))
    return report


def _run_named(args):
    name, opts = args
    return run_scenario(name, opts)


def run_many(names: list[str], opts: RunOptions = RunOptions(), jobs: int = 1) -> list[Report]:
    """Scenario-level parallelism; reports come back ordered by scenario name."""
    names = sorted(names)
    if jobs <= 1 or len(names) <= 1:
        reports = [run_scenario(n, opts) for n in names]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_named, [(n, opts) for n in names]))
    return sorted(reports, key=lambda r: r.scenario)


CSV_HEADER = ["scenario", "check", "verdict", "gap", "seconds"]


def write_reports(reports: list[Report], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for r in reports:
        p = out / f"{r.scenario}.json"
        p.write_text(r.dumps())
        paths.append(p)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in reports:
            w.writerows(r.csv_rows())
    paths.append(out / "summary.csv")
    return paths


def aggregate(out_dir: str | Path) -> dict:
    """Merge every per-scenario JSON report found in ``out_dir``."""
    out = Path(out_dir)
    merged = []
    for p in sorted(out.glob("*.json")):
        if p.name == "aggregate.json":
            continue
        data = json.loads(p.read_text())
        if "scenario" in data and "checks" in data:
            merged.append(data)
    counts = {"pass": 0, "fail": 0, "skipped": 0}
    for rep in merged:
        for c in rep["checks"]:
            counts[c["verdict"]] += 1
    summary = {"scenarios": [r["scenario"] for r in merged], "counts": counts,
               "passed": counts["fail"] == 0 and bool(merged), "reports": merged}
    (out / "aggregate.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    with open(out / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "check", "verdict", "gap"])
        for rep in merged:
            for c in rep["checks"]:
                w.writerow([rep["scenario"], c["check"], c["verdict"], c.get("gap")])
    return summary


# ------------------------------------------------------------ plots


def emit_plot(sets: list[tuple[str, Polyhedron]], path: str | Path, box_radius: float | None = None) -> Path:
    """SVG of labelled 1D or 2D sets; unbounded sets are clipped to a frame and get ray arrows."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not sets:
        raise ValueError("nothing to plot")
    dims = {P.dim for _, P in sets}
    if len(dims) != 1 or dims.pop() > 2:
        raise ValueError("only 1D or 2D sets of one dimension can be plotted")
    dim = sets[0][1].dim
    matplotlib.rcParams["svg.hashsalt"] = "subcalc"
    fig, ax = plt.subplots(figsize=(6, 0.6 * len(sets) + 1.5) if dim == 1 else (6, 6))
    finite = [v for _, P in sets if not P.empty for v in np.ravel(P.vertices)]
    span = max([abs(v) for v in finite] + [1.0])
    R = box_radius if box_radius is not None else 2.0 * span
    R = min(R, 4.0 * span)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k, (label, P) in enumerate(sets):
        col = colors[k % len(colors)]
        if P.empty:
            ax.plot([], [], color=col, label=f"{label} (empty)")
            continue
        if dim == 1:
            lo, hi = _interval(P)
            a, b = max(lo, -R), min(hi, R)
            y = -k
            if abs(b - a) <= 1e-12:
                ax.plot([a], [y], "o", color=col, label=label)
            else:
                ax.plot([a, b], [y, y], "-", lw=3, color=col, label=label)
            for end, edge in ((lo, -R), (hi, R)):
                if not math.isfinite(end):
                    ax.annotate("", xy=(edge, y), xytext=(edge - 0.15 * R * np.sign(edge), y),
                                arrowprops={"arrowstyle": "->", "color": col})
        else:
            T = intersect(P, box(R, 2))
            if T.empty:
                continue
            V = T.vertices
            if len(V) == 1:
                ax.plot(V[:, 0], V[:, 1], "o", color=col, label=label)
            elif len(V) == 2:
                ax.plot(V[:, 0], V[:, 1], "-", lw=2, color=col, label=label)
            else:
                c = V.mean(axis=0)
                order = np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))
                ax.fill(V[order, 0], V[order, 1], alpha=0.3, color=col, label=label)
            base = P.vertices.mean(axis=0)
            for r in P.rays:
                d = np.asarray(r) / np.linalg.norm(r) * 0.3 * R
                ax.annotate("", xy=tuple(base + d), xytext=tuple(base),
                            arrowprops={"arrowstyle": "->", "color": col})
    if dim == 1:
        ax.set_yticks([])
        ax.set_xlim(-1.1 * R, 1.1 * R)
    else:
        ax.set_xlim(-1.1 * R, 1.1 * R)
        ax.set_ylim(-1.1 * R, 1.1 * R)
        ax.set_aspect("equal")
    ax.legend(fontsize=7, loc="best")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
