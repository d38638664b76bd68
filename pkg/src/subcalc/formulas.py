"""Evaluators for the subdifferential formulas of integral functionals and for the
qualification conditions that select among them.

Everything lives in R^n (n <= 2), where the intersection over finite-dimensional
subspaces L containing x collapses to L = R^n: the eps-subdifferential of
f + indicator(A) grows as A shrinks, and R^n itself is admissible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .functions import (
    ConvexFunction, RestrictTo, conjugate_value, convexity_modulus, direction_fan,
    eps_subdifferential,
)
from .geometry import (
    INF, Polyhedron, affine_hull, empty_set, ext_add, hausdorff_distance,
    intersect, make_polyhedron, minkowski_sum, negate, normal_cone_eps, orthogonal_complement,
    point, relative_interior_contains, ri_point, scale, support, whole_space, _affine_frame,
)
from .integral import (
    EMPTY_STATUS, Integrand, NodeFamily, OracleGrid, SetWithStatus, aumann_integral,
    aumann_integral_1d, aumann_of_subdifferentials, domain_of_integral, integral_value,
    node_intervals, oracle_from_values, restricted_family,
)
from .measure import MeasureSpace, grid_allocation, optimal_allocation, uniform_allocation

FORMULA_IDS = ("thm4_1", "cor4_1_eq3", "cor4_1_eq4", "cor4_2", "cor5_2", "hup", "qualfin_i", "qualfin_ii")
STOP_TOL = 1e-6
MAX_STEPS = 30
QC_SAMPLE_NODES = 16


@dataclass(frozen=True)
class QualificationReport:
    condition: str
    holds: bool
    witness: np.ndarray | None = None
    certificate: dict | None = None
    node: int | None = None

    def to_json(self) -> dict:
        return {"condition": self.condition, "holds": self.holds, "node": self.node,
                "witness": None if self.witness is None else np.asarray(self.witness).tolist(),
                "certificate": self.certificate}


@dataclass(frozen=True)
class FormulaResult:
    set: SetWithStatus | None
    formula_id: str
    parameters: dict = field(default_factory=dict)
    convergence_log: tuple = ()
    iterates: tuple = ()
    qualification: tuple = ()
    refused: bool = False

    def __post_init__(self):
        if self.formula_id not in FORMULA_IDS:
            raise ValueError(f"unknown formula id {self.formula_id!r}")

    @property
    def empty(self) -> bool:
        return self.set is not None and self.set.empty

    def to_json(self) -> dict:
        return {
            "formula_id": self.formula_id,
            "set": None if self.set is None else self.set.to_json(),
            "parameters": self.parameters,
            "convergence_log": [None if not math.isfinite(d) else d for d in self.convergence_log],
            "qualification": [q.to_json() for q in self.qualification],
            "refused": self.refused,
        }


def _vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _hull(parts: Sequence[Polyhedron], dim: int) -> Polyhedron:
    parts = [p for p in parts if not p.empty]
    if not parts:
        return empty_set(dim)
    verts = np.vstack([p.vertices for p in parts])
    rays = [r for p in parts for r in p.rays]
    return make_polyhedron(verts, rays, dim=dim)


def _directions(dim: int, fan: int) -> list[np.ndarray]:
    return [np.array([1.0]), np.array([-1.0])] if dim == 1 else list(direction_fan(fan))


def _aumann_per_node(members, mu: MeasureSpace, x, eps_values, extras) -> SetWithStatus:
    """Aumann integral of t -> eps(t)-subdifferential of members[t] plus extras[t]."""
    dim = members[0].dim
    eps_values = np.broadcast_to(np.asarray(eps_values, dtype=float), (len(members),))
    if dim == 1:
        lo, hi = node_intervals(members, x, eps_values)
        for i, E in enumerate(extras):
            if E is None:
                continue
            if E.empty:
                lo[i], hi[i] = INF, -INF
            else:
                lo[i] -= support(E, [-1.0])
                hi[i] += support(E, [1.0])
        return aumann_integral_1d(np.nan_to_num(lo, nan=-INF), np.nan_to_num(hi, nan=INF), mu)
    sets = []
    for f, e, E in zip(members, eps_values, extras):
        S = eps_subdifferential(f, x, float(e)).set
        sets.append(S if E is None else minkowski_sum(S, E))
    return aumann_integral(sets, mu)


def _dedupe_dirs(dirs) -> tuple:
    out: list[np.ndarray] = []
    for d in dirs:
        if not any(np.allclose(d, e) for e in out):
            out.append(np.asarray(d, dtype=float))
    return tuple(out)


def _capped(v: float) -> float:
    # scipy's scalar minimisers cannot digest +inf
    return v if math.isfinite(v) else 1e300


def _combine(parts: list[SetWithStatus], dim: int, exact_union: bool) -> SetWithStatus:
    live = [p for p in parts if not p.empty]
    if not live:
        return SetWithStatus(empty_set(dim), EMPTY_STATUS)
    S = _hull([p.set for p in live], dim)
    unb = _dedupe_dirs(d for p in live for d in p.unbounded_directions)
    exact = exact_union and all(p.status == "nonempty-exact" for p in live)
    return SetWithStatus(S, "nonempty-exact" if exact else "approximate", unb)


# --------------------------------------------------------------- qualification-free formula


def _allocations(strategy: str, eps1: float, x, fam: NodeFamily, dirs) -> list[np.ndarray]:
    mu = fam.measure
    if eps1 == 0.0:
        return [np.zeros(len(fam.members))]
    out = [uniform_allocation(eps1, mu).values]
    if strategy == "uniform":
        return out
    for v in dirs:
        if strategy == "optimal":
            out.append(optimal_allocation(eps1, x, v, fam).values)
        elif strategy == "grid":
            out.append(grid_allocation(eps1, x, v, fam).values)
        else:
            raise ValueError(f"unknown allocation strategy {strategy!r}")
    return out


def rhs_theorem41(F: Integrand, x, eps: float, strategy: str = "optimal", form: str = "restricted",
                  fan: int = 16) -> FormulaResult:
    """Right-hand side of the qualification-free eps-subdifferential formula.

    ``form="restricted"``: union over l in I(eps) of int d_{l(t)}(f_t + indicator(dom I_f))(x).
    ``form="split"``: union over eps1 + eps2 = eps (eps2 on a 9-point grid) of
    int d_{l(t)}(f_t + indicator(aff dom I_f))(x) + N^{eps2}_{dom I_f}(x).
    The union over allocations is realised per support direction.
    """
    x = _vec(x)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not math.isfinite(integral_value(F, x)):
        raise ValueError("x must lie in dom I_f")
    F = F.at(x)
    dim = F.dim
    D = domain_of_integral(F).set
    dirs = _directions(dim, fan)
    parts: list[SetWithStatus] = []
    if form == "restricted":
        fam = restricted_family(F, D)
        splits = [(eps, None)]
    elif form == "split":
        fam = restricted_family(F, affine_hull(D))
        splits = [(max(eps - e2, 0.0), normal_cone_eps(D, x, e2)) for e2 in sorted({eps * k / 8 for k in range(9)})]
    else:
        raise ValueError("form must be 'restricted' or 'split'")
    for eps1, N in splits:
        for ell in _allocations(strategy, eps1, x, fam, dirs):
            parts.append(aumann_of_subdifferentials(fam, x, ell, extra=N))
    exact_union = dim == 1 or eps == 0.0
    res = _combine(parts, dim, exact_union)
    params = {"eps": eps, "strategy": strategy, "form": form, "domain": D.to_json()}
    if form == "split":
        params["eps2_grid"] = [eps - e1 for e1, _ in splits]
    return FormulaResult(res, "thm4_1", params)


# --------------------------------------------------------------- intersections over eps


def _intersection_limit(make: Callable[[float], SetWithStatus], eta0: float, dim: int,
                        box_radius: float, steps: int = MAX_STEPS, sequence=None):
    """Running intersection of make(eta_n), eta_n = eta0 2^-n, with the stabilisation rule."""
    etas = list(sequence) if sequence is not None else [eta0 * 2.0 ** -n for n in range(steps + 1)]
    cap: Polyhedron | None = None
    log: list[float] = []
    iterates: list[Polyhedron] = []
    statuses: list[str] = []
    verdict = "stabilized"
    sup_hist: list[np.ndarray] = []
    probe_dirs = _directions(dim, 8)
    for n, eta in enumerate(etas):
        S = make(eta)
        statuses.append(S.status)
        iterates.append(S.set)
        if S.empty:
            return SetWithStatus(empty_set(dim), EMPTY_STATUS), log, iterates, "empty-iterate"
        new = S.set if cap is None else intersect(cap, S.set)
        if new.empty:
            return SetWithStatus(empty_set(dim), EMPTY_STATUS), log, iterates, "empty-intersection"
        sup_hist.append(np.array([support(new, d) for d in probe_dirs]))
        if cap is not None:
            h = hausdorff_distance(cap, new, box_radius)
            log.append(h.distance)
            if h.status == "both-outside-box" and _drifting(sup_hist):
                return SetWithStatus(empty_set(dim), EMPTY_STATUS), log, iterates, "drift-outside-box"
            if h.status == "ok" and h.cones_equal and h.distance <= STOP_TOL:
                cap = new
                break
        cap = new
    else:
        verdict = "step-cap" if sequence is None else "sequence-exhausted"
    exact = all(s == "nonempty-exact" for s in statuses)
    unb = tuple(d for d in probe_dirs if support(cap, d) == INF)
    return SetWithStatus(cap, "nonempty-exact" if exact else "approximate", unb), log, iterates, verdict


def _drifting(sup_hist: list[np.ndarray]) -> bool:
    """Some support value strictly decreased over the last three iterates."""
    if len(sup_hist) < 3:
        return False
    a, b, c = sup_hist[-3:]
    return bool(np.any((b < a - 1e-12) & (c < b - 1e-12)))


def _finite_sum_sets(members, weights, x, eps_per_node) -> SetWithStatus:
    dim = members[0].dim
    out = point(np.zeros(dim))
    for f, w, e in zip(members, weights, eps_per_node):
        if w == 0:
            continue
        S = eps_subdifferential(f, x, float(e)).set
        if S.empty:
            return SetWithStatus(empty_set(dim), EMPTY_STATUS)
        out = minkowski_sum(out, scale(S, w))
    return SetWithStatus(out, "nonempty-exact")


def hup_sum(f1: ConvexFunction, f2: ConvexFunction, x, eps0: float = 1.0, eps_sequence=None,
            box_radius: float = 1e3) -> FormulaResult:
    """Intersection over eps of cl(d_eps f1(x) + d_eps f2(x))."""
    x = _vec(x)
    for f in (f1, f2):
        if not math.isfinite(f.evaluate(x)):
            raise ValueError("both functions must be finite at x")
    make = lambda e: _finite_sum_sets((f1, f2), (1.0, 1.0), x, (e, e))  # noqa: E731
    res, log, its, verdict = _intersection_limit(make, eps0, f1.dim, box_radius, sequence=eps_sequence)
    return FormulaResult(res, "hup", {"eps0": eps0, "verdict": verdict}, tuple(log), tuple(its))


# --------------------------------------------------------------- qualification


def _ri_meets(A: Polyhedron, B: Polyhedron) -> tuple[bool, np.ndarray | None]:
    """Whether ri(A) meets the closed set B; decided at a relative-interior point of A n B."""
    Q = intersect(A, B)
    if Q.empty:
        return False, None
    y = ri_point(Q)
    return relative_interior_contains(A, y), y


def _full_dim(P: Polyhedron) -> bool:
    return not P.empty and len(_affine_frame(P)[1]) == P.dim


def check_qualification(F: Integrand, x, t_index: int, L: Polyhedron | None = None,
                        which: str = "i") -> QualificationReport:
    """QC(i)-(v) for node t_index, in their R^n forms, with L a subspace through x."""
    x = _vec(x)
    f = F.members[t_index]
    D = domain_of_integral(F).set
    if L is not None:
        D = intersect(D, L)
    A = affine_hull(D) if not D.empty else D
    dom = f.domain()
    name = f"QC({which})"
    if A.empty:
        return QualificationReport(name, False, certificate={"reason": "dom I_f is empty"}, node=t_index)
    if which == "i":
        ok, y = _ri_meets(dom, A)
        cert = None if ok else {"reason": "ri(dom f_t) misses aff(dom I_f)", "dom": dom.to_json(),
                                "aff": A.to_json()}
        return QualificationReport(name, ok, y if ok else None, cert, t_index)
    if which == "ii":
        C = minkowski_sum(dom, negate(A))
        ok = relative_interior_contains(C, np.zeros(F.dim))
        cert = None if ok else {"reason": "cone(dom f_t - aff dom I_f) is not a subspace"}
        return QualificationReport(name, ok, np.zeros(F.dim) if ok else None, cert, t_index)
    if which == "iii":
        if not _full_dim(dom):
            return QualificationReport(name, False, certificate={"reason": "dom f_t has empty interior"},
                                       node=t_index)
        ok, y = _ri_meets(dom, D)
        cert = None if ok else {"reason": "int(dom f_t) misses dom I_f"}
        return QualificationReport(name, ok, y if ok else None, cert, t_index)
    if which == "iv":
        ok, y = _ri_meets(dom, A)
        if not ok:
            return QualificationReport(name, False, certificate={"reason": "no relative-interior anchor"},
                                       node=t_index)
        span = _affine_frame(minkowski_sum(dom, negate(A)))[1]
        delta = 1e-6
        vals = [f.evaluate(y + s * delta * b) for b in span for s in (-1.0, 1.0)] + [f.evaluate(y)]
        ok = all(math.isfinite(v) for v in vals)
        cert = None if ok else {"reason": "f_t unbounded near the anchor within the span"}
        return QualificationReport(name, ok, y if ok else None, cert, t_index)
    if which == "v":
        fan = _directions(F.dim, 8)
        reports = [verify_inf_convolution_attainment(f, A, 0.5 * v) for v in fan]
        ok = all(r.attained and r.equal for r in reports if not r.skipped)
        ok = ok and not any(r.skipped for r in reports)
        cert = None if ok else {"reason": "inf-convolution not attained on the fan",
                                "gaps": [r.gap for r in reports]}
        return QualificationReport(name, ok, None, cert, t_index)
    raise ValueError(f"unknown qualification condition {which!r}")


def _sample_nodes(n: int, k: int = QC_SAMPLE_NODES) -> list[int]:
    if n <= k:
        return list(range(n))
    return sorted({int(round(i)) for i in np.linspace(0, n - 1, k)})


def _qualify(F: Integrand, x, nodes, which="i") -> tuple[bool, tuple]:
    reps = tuple(check_qualification(F, x, i, which=which) for i in nodes)
    return all(r.holds for r in reps), reps


# --------------------------------------------------------------- corollaries


def _node_mask(F: Integrand, T0) -> np.ndarray:
    n = len(F.members)
    if T0 is None:
        return np.ones(n, dtype=bool)
    if callable(T0):
        return np.array([bool(T0(float(t))) for t in F.measure.nodes])
    mask = np.zeros(n, dtype=bool)
    mask[list(T0)] = True
    return mask


def rhs_cor41(F: Integrand, x, T0=None, eq: str = "finite", eps0: float = 1.0, eps_sequence=None,
              box_radius: float = 1e3) -> FormulaResult:
    """Exact formulas when a qualification holds on the nodes T0 (indices or a predicate on t)."""
    x = _vec(x)
    F = F.at(x)
    mask = _node_mask(F, T0)
    q_nodes = [i for i in _sample_nodes(len(mask)) if mask[i]] or [i for i in np.flatnonzero(mask)[:1]]
    ok, reps = _qualify(F, x, q_nodes)
    if eq not in ("finite", "integral"):
        raise ValueError("eq must be 'finite' or 'integral'")
    fid = "cor4_1_eq3" if eq == "integral" else "cor4_1_eq4"
    if not ok:
        return FormulaResult(None, fid, {"T0": np.flatnonzero(mask).tolist()}, qualification=reps, refused=True)
    D = domain_of_integral(F).set
    dim = F.dim
    members = F.members
    if eq == "integral":
        A = affine_hull(D)
        perp = orthogonal_complement(_affine_frame(D)[1], dim)
        mem = [f if mask[i] else RestrictTo(f, A) for i, f in enumerate(members)]
        extras = [perp if mask[i] else None for i in range(len(members))]
        agg = _aumann_per_node(mem, F.measure, x, 0.0, extras)
        if agg.empty:
            return FormulaResult(agg, fid, {"eq": eq}, qualification=reps)
        N = normal_cone_eps(D, x, 0.0)
        total = minkowski_sum(agg.set, N)
        st = SetWithStatus(total, agg.status if not total.empty else EMPTY_STATUS, agg.unbounded_directions)
        return FormulaResult(st, fid, {"eq": eq, "domain": D.to_json()}, qualification=reps)
    if F.measure.kind != "finite-discrete":
        raise ValueError("the finite-sum form needs a finite discrete measure")
    w = F.measure.weights
    make = lambda e: _finite_sum_sets(members, w, x, np.where(mask, 0.0, e))  # noqa: E731
    res, log, its, verdict = _intersection_limit(make, eps0, dim, box_radius, sequence=eps_sequence)
    return FormulaResult(res, fid, {"eq": eq, "eps0": eps0, "verdict": verdict}, tuple(log), tuple(its), reps)


def rhs_cor42(F: Integrand, x) -> FormulaResult:
    """int (df_t(x) + N_{dom I_f}(x)) dmu under the relative-interior qualification."""
    x = _vec(x)
    F = F.at(x)
    ok, reps = _qualify(F, x, _sample_nodes(len(F.members)))
    if not ok:
        return FormulaResult(None, "cor4_2", {}, qualification=reps, refused=True)
    D = domain_of_integral(F).set
    N = normal_cone_eps(D, x, 0.0)
    fam = NodeFamily(F.members, F.measure, F.family)
    res = aumann_of_subdifferentials(fam, x, 0.0, extra=N)
    return FormulaResult(res, "cor4_2", {"domain": D.to_json(), "normal_cone": N.to_json()}, qualification=reps)


def rhs_cor52(F: Integrand, x, eta0: float = 1.0, eta_sequence=None, box_radius: float = 1e3) -> FormulaResult:
    """Intersection over eta of cl int (d_eta f_t(x) + N_{dom I_f}(x)) dmu, finite measures."""
    x = _vec(x)
    F = F.at(x)
    M = float(np.sum(F.measure.weights))
    if not (math.isfinite(M) and M > 0):
        raise ValueError("a finite positive measure is required")
    D = domain_of_integral(F).set
    N = normal_cone_eps(D, x, 0.0)
    fam = NodeFamily(F.members, F.measure, F.family)
    make = lambda eta: aumann_of_subdifferentials(fam, x, eta, extra=N)  # noqa: E731
    res, log, its, verdict = _intersection_limit(make, eta0, F.dim, box_radius, sequence=eta_sequence)
    return FormulaResult(res, "cor5_2", {"eta0": eta0, "verdict": verdict, "domain": D.to_json()},
                         tuple(log), tuple(its))


def rhs_qualfin(fs: Sequence[ConvexFunction], x, T0: Sequence[int], variant: str = "i",
                weights=None, eps0: float = 1.0, box_radius: float = 1e3) -> FormulaResult:
    """Finite sums with a relative-interior (i) or interior (ii) condition on the block T0."""
    x = _vec(x)
    n = len(fs)
    dim = fs[0].dim
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    inT0 = np.zeros(n, dtype=bool)
    inT0[list(T0)] = True
    fid = "qualfin_i" if variant == "i" else "qualfin_ii"
    closed = whole_space(dim)
    for i in range(n):
        closed = intersect(closed, fs[i].domain())
    holds = not closed.empty
    witness = None
    if holds:
        y = ri_point(closed)
        for i in np.flatnonzero(inT0):
            dom = fs[i].domain()
            if variant == "ii" and not _full_dim(dom):
                holds = False
            elif not relative_interior_contains(dom, y):
                holds = False
        witness = y if holds else None
    rep = QualificationReport(f"qualfin({variant})", holds, witness,
                              None if holds else {"reason": "no common (relative) interior point"})
    if not holds:
        return FormulaResult(None, fid, {"T0": list(T0)}, qualification=(rep,), refused=True)
    if variant == "i":
        make = lambda e: _finite_sum_sets(fs, w, x, np.where(inT0, 0.0, e))  # noqa: E731
        res, log, its, verdict = _intersection_limit(make, eps0, dim, box_radius)
        return FormulaResult(res, fid, {"eps0": eps0, "verdict": verdict}, tuple(log), tuple(its), (rep,))
    fixed = _finite_sum_sets([f for f, m in zip(fs, inT0) if m], w[inT0], x, np.zeros(inT0.sum()))
    rest = [f for f, m in zip(fs, inT0) if not m]
    if not rest:
        return FormulaResult(fixed, fid, {"eps0": eps0}, qualification=(rep,))
    make = lambda e: _finite_sum_sets(rest, w[~inT0], x, np.full(len(rest), e))  # noqa: E731
    tail, log, its, verdict = _intersection_limit(make, eps0, dim, box_radius)
    if fixed.empty or tail.empty:
        return FormulaResult(SetWithStatus(empty_set(dim), EMPTY_STATUS), fid, {"verdict": verdict},
                             tuple(log), tuple(its), (rep,))
    total = SetWithStatus(minkowski_sum(fixed.set, tail.set), tail.status)
    return FormulaResult(total, fid, {"eps0": eps0, "verdict": verdict}, tuple(log), tuple(its), (rep,))


# --------------------------------------------------------------- identity checks


@dataclass(frozen=True)
class InfConvolutionReport:
    lhs: float
    rhs: float
    argmin: np.ndarray | None
    attained: bool
    equal: bool
    skipped: str | None = None

    @property
    def gap(self) -> float:
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)):
            return 0.0 if self.lhs == self.rhs else INF
        return abs(self.lhs - self.rhs)


def verify_inf_convolution_attainment(g: ConvexFunction, L: Polyhedron, xstar,
                                      radius: float = 50.0, samples: int = 2001) -> InfConvolutionReport:
    """(g + indicator L)*(x*) = min_y { g*(y) + sigma_L(x* - y) } with the min attained.

    sigma_L(z) is finite only for z orthogonal to L, so the minimisation runs over
    the fan y = x* - u, u in L-perp, sampled on a grid and refined."""
    xstar = _vec(xstar)
    dim = g.dim
    ok, _ = _ri_meets(g.domain(), L)
    if not ok:
        return InfConvolutionReport(math.nan, math.nan, None, False, False, "hypothesis unmet")
    base, basis = _affine_frame(L)
    perp = orthogonal_complement(basis, dim)
    pdirs = _affine_frame(perp)[1]
    # L = R^n: the restriction is g itself
    lhs = conjugate_value(g if len(pdirs) == 0 else RestrictTo(g, L), xstar)

    def h(u):
        return ext_add(conjugate_value(g, xstar - u), float(u @ base))

    if len(pdirs) == 0:
        rhs, arg = h(np.zeros(dim)), xstar
    elif len(pdirs) == 1:
        d = pdirs[0]
        taus = np.linspace(-radius, radius, samples)
        vals = np.array([h(tau * d) for tau in taus])
        k = int(np.argmin(vals))
        rhs = float(vals[k])
        if math.isfinite(rhs):
            lo, hi = taus[max(k - 1, 0)], taus[min(k + 1, samples - 1)]
            r = minimize_scalar(lambda tau: _capped(h(tau * d)), bounds=(lo, hi), method="bounded",
                                options={"xatol": 1e-12})
            if r.fun < rhs:
                rhs, k_tau = float(r.fun), float(r.x)
            else:
                k_tau = float(taus[k])
        else:
            k_tau = float(taus[k])
        arg = xstar - k_tau * d
        attained = math.isfinite(rhs) and abs(k_tau) < radius * (1 - 1e-9)
    else:
        g2 = np.linspace(-radius, radius, 201)
        best, bu = INF, np.zeros(dim)
        for a in g2:
            for b in g2:
                u = a * pdirs[0] + b * pdirs[1]
                v = h(u)
                if v < best:
                    best, bu = v, u
        if math.isfinite(best):
            r = minimize(lambda c: _capped(h(c[0] * pdirs[0] + c[1] * pdirs[1])), [bu @ pdirs[0], bu @ pdirs[1]],
                         method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
            if r.fun < best:
                best, bu = float(r.fun), r.x[0] * pdirs[0] + r.x[1] * pdirs[1]
        rhs, arg = best, xstar - bu
        attained = math.isfinite(rhs) and float(np.abs(bu).max()) < radius * (1 - 1e-9)
    if len(pdirs) == 0:
        attained = True
    equal = (lhs == rhs) if not (math.isfinite(lhs) and math.isfinite(rhs)) else abs(lhs - rhs) <= 1e-6 * (1 + abs(lhs))
    return InfConvolutionReport(float(lhs), float(rhs), arg, bool(attained), bool(equal))


@dataclass(frozen=True)
class InterchangeReport:
    lhs: float
    rhs: float
    equal: bool
    per_node: tuple


def _direct_sup_1d(f: ConvexFunction, v: float, radius: float = 50.0, samples: int = 4001) -> float:
    xs = np.linspace(-radius, radius, samples)
    vals = np.array([v * u - f.evaluate([u]) for u in xs])
    k = int(np.argmax(vals))
    if not math.isfinite(vals[k]):
        return float(vals[k])
    if k in (0, samples - 1):
        # still climbing at the edge: test far out
        side = 1.0 if k == samples - 1 else -1.0
        far = [v * side * R - f.evaluate([side * R]) for R in (1e3, 1e5, 1e7)]
        if far[0] < far[1] < far[2]:
            return INF
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, samples - 1)]
    r = minimize_scalar(lambda u: _capped(f.evaluate([u]) - v * u), bounds=(lo, hi), method="bounded",
                        options={"xatol": 1e-12})
    return float(max(vals[k], -r.fun))


def _direct_sup_2d(f: ConvexFunction, v: np.ndarray, radius: float = 50.0, samples: int = 201) -> float:
    g = np.linspace(-radius, radius, samples)
    best, bu = -INF, np.zeros(2)
    for a in g:
        for b in g:
            u = np.array([a, b])
            val = float(v @ u) - f.evaluate(u)
            if val > best:
                best, bu = val, u
    if not math.isfinite(best):
        return best
    if np.abs(bu).max() >= radius:
        d = bu / np.linalg.norm(bu)
        far = [float(v @ (R * d)) - f.evaluate(R * d) for R in (1e3, 1e5, 1e7)]
        if far[0] < far[1] < far[2]:
            return INF
    r = minimize(lambda u: _capped(f.evaluate(u) - float(v @ u)), bu, method="Nelder-Mead",
                 options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 4000})
    return float(max(best, -r.fun))


def verify_conjugate_interchange(F: Integrand, vstar) -> InterchangeReport:
    """sum_t mu_t f_t*(v_t) against the node-wise direct supremum of sum_t mu_t(<u_t, v_t> - f_t(u_t))."""
    if F.measure.kind != "finite-discrete":
        raise ValueError("interchange check needs a finite discrete measure")
    vstar = np.asarray(vstar, dtype=float).reshape(len(F.members), -1)
    lhs, rhs, per = 0.0, 0.0, []
    for f, v, w in zip(F.members, vstar, F.measure.weights):
        c = conjugate_value(f, v)
        d = _direct_sup_1d(f, float(v[0])) if f.dim == 1 else _direct_sup_2d(f, v)
        per.append((c, d))
        if w > 0:
            lhs = ext_add(lhs, w * c if math.isfinite(c) else c)
            rhs = ext_add(rhs, w * d if math.isfinite(d) else d)
    if math.isfinite(lhs) and math.isfinite(rhs):
        equal = abs(lhs - rhs) <= 1e-6 * (1 + abs(lhs))
    else:
        equal = lhs == rhs
    return InterchangeReport(float(lhs), float(rhs), bool(equal), tuple(per))


@dataclass(frozen=True)
class ModulusReport:
    modulus_integral: float
    eps: float
    bound_holds: bool
    oracle_empty: bool
    verdict: str  # "pass" | "fail" | "skipped"
    per_node: tuple = ()


def modulus_penalty_check(g_family: Sequence[Callable[[float], float]], weights, x: float, eps: float,
                          window: tuple[float, float] = (-5.0, 5.0),
                          grid: OracleGrid | None = None) -> ModulusReport:
    """int m_t dmu <= eps whenever the eps-subdifferential of I_g(x) is nonempty."""
    weights = np.asarray(weights, dtype=float)
    mods = np.array([convexity_modulus(g, x, window) for g in g_family])
    total = float(np.dot(mods, weights))

    def I(y):
        return float(sum(w * g(float(np.atleast_1d(y)[0])) for g, w in zip(g_family, weights)))

    orc = oracle_from_values(I, np.array([x]), eps, (grid or OracleGrid()).points(1))
    holds = total <= eps + 1e-6
    if orc.empty:
        verdict = "skipped"
    else:
        verdict = "pass" if holds else "fail"
    return ModulusReport(total, float(eps), holds, orc.empty, verdict, tuple(mods))
