"""Integral functionals I_f(x) = int f(t, x) dmu(t) over discretised measure spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .functions import (
    ConvexFunction, RestrictTo, direction_fan, directional_support, eps_subdifferential,
    fenchel_young_gap, set_from_supports,
)
from .geometry import (
    INF, Polyhedron, contains, empty_set, from_halfspaces, interval, intersect,
    minkowski_sum, normal_cone_eps, point, ri_point, scale, support, whole_space,
)
from .measure import IntegralResult, MeasureSpace, integrate, optimal_allocation, uniform_allocation

PROBE_BISECTIONS = 50
PROBE_RADIUS = 1e3


@dataclass(frozen=True, eq=False)
class Integrand:
    """A node-indexed family t -> f_t over ``measure``.

    ``kinks(x)`` may list the t-values where f_t is nonsmooth at x; interval
    quadrature is then split there so piecewise-constant subgradients integrate exactly.
    """

    name: str
    family: Callable[[float], ConvexFunction]
    measure: MeasureSpace
    declared_domain: Polyhedron | None = None
    kinks: Callable[[np.ndarray], Sequence[float]] | None = None
    members: tuple = field(init=False, repr=False)
    _split_cache: dict = field(init=False, repr=False, default_factory=dict)
    _cache: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.family(float(t)) for t in self.measure.nodes))
        if not self.members:
            raise ValueError("integrand needs at least one node")

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def at(self, x) -> "Integrand":
        """The same integrand with quadrature panels split at the kinks for x."""
        if self.kinks is None or self.measure.kind != "interval":
            return self
        pts = tuple(sorted(float(k) for k in self.kinks(np.atleast_1d(np.asarray(x, float)))))
        if pts not in self._split_cache:
            mu = self.measure.split(pts)
            self._split_cache[pts] = self if mu is self.measure else Integrand(
                self.name, self.family, mu, self.declared_domain, _cache=self._cache)
        return self._split_cache[pts]


@dataclass(frozen=True, eq=False)
class NodeFamily:
    """Explicit per-node functions over a measure (what allocators consume)."""

    members: tuple
    measure: MeasureSpace
    family: Callable[[float], ConvexFunction] | None = None

    @property
    def dim(self) -> int:
        return self.members[0].dim


def restricted_family(F: Integrand, D: Polyhedron) -> NodeFamily:
    """t -> f_t + indicator(D); the identity when D is the whole space."""
    if _is_whole(D):
        return NodeFamily(F.members, F.measure, F.family)
    return NodeFamily(tuple(RestrictTo(f, D) for f in F.members), F.measure,
                      lambda t: RestrictTo(F.family(t), D))


def _is_whole(D: Polyhedron) -> bool:
    if D.empty:
        return False
    dirs = [np.array([1.0]), np.array([-1.0])] if D.dim == 1 else direction_fan(8)
    return all(support(D, d) == INF for d in dirs)


# --------------------------------------------------------------- I_f


def integral_value_status(F: Integrand, x) -> IntegralResult:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    values = np.array([f.evaluate(x) for f in F.members], dtype=float)
    probe = None
    if F.measure.kind == "interval":
        probe = lambda t: F.family(t).evaluate(x)  # noqa: E731
    return integrate(values, F.measure, probe=probe)


def integral_value(F: Integrand, x) -> float:
    res = integral_value_status(F, x)
    if res.status == "indeterminate":
        return INF
    return res.value


@dataclass(frozen=True)
class DomainResult:
    set: Polyhedron
    exact: bool
    source: str  # "declared" | "intersection" | "probed"


def _node_domain_intersection(F: Integrand) -> tuple[Polyhedron, bool]:
    seen: dict[str, Polyhedron] = {}
    exact = True
    for f in F.members:
        d = f.domain()
        exact = exact and f.domain_exact
        key = repr((d.vertices.round(12).tolist(), d.rays.round(12).tolist(), d.empty))
        seen.setdefault(key, d)
    out = None
    for d in seen.values():
        out = d if out is None else intersect(out, d)
    return out, exact


def domain_of_integral(F: Integrand) -> DomainResult:
    if "domain" not in F._cache:
        F._cache["domain"] = _domain_of_integral(F)
    return F._cache["domain"]


def _domain_of_integral(F: Integrand) -> DomainResult:
    if F.declared_domain is not None:
        return DomainResult(F.declared_domain, True, "declared")
    D0, exact = _node_domain_intersection(F)
    if D0.empty or F.measure.kind == "finite-discrete":
        return DomainResult(D0, exact, "intersection")
    if F.dim != 1:
        return DomainResult(D0, False, "intersection")
    return DomainResult(_probe_1d(F, D0), False, "probed")


def _probe_1d(F: Integrand, D0: Polyhedron) -> Polyhedron:
    lo0, hi0 = -support(D0, [-1.0]), support(D0, [1.0])
    cands = [0.0, ri_point(D0)[0]] + list(D0.vertices[:, 0])
    x0 = None
    for c in cands:
        if contains(D0, [c]) and math.isfinite(integral_value(F, [c])):
            x0 = float(c)
            break
    if x0 is None:
        return empty_set(1)

    def edge(end, sign):
        far = end if math.isfinite(end) else x0 + sign * PROBE_RADIUS
        if math.isfinite(integral_value(F, [far])):
            return end
        good, bad = x0, far
        for _ in range(PROBE_BISECTIONS):
            mid = 0.5 * (good + bad)
            if math.isfinite(integral_value(F, [mid])):
                good = mid
            else:
                bad = mid
        return good

    lo, hi = edge(lo0, -1.0), edge(hi0, 1.0)
    if hi - lo < 1e-9:
        return point([x0])
    return interval(lo, hi)


# --------------------------------------------------------------- oracle


@dataclass(frozen=True)
class OracleGrid:
    lo: float = -5.0
    hi: float = 5.0
    points_1d: int = 401
    points_2d: int = 41

    def points(self, dim: int) -> np.ndarray:
        if dim == 1:
            return np.linspace(self.lo, self.hi, self.points_1d)[:, None]
        g = np.linspace(self.lo, self.hi, self.points_2d)
        X, Y = np.meshgrid(g, g)
        return np.column_stack([X.ravel(), Y.ravel()])


ORACLE_EMPTY_TOL = 1e-9


def oracle_from_values(I: Callable[[np.ndarray], float], x: np.ndarray, eps: float,
                       probes: np.ndarray) -> Polyhedron:
    """{x* : <x*, y - x> <= I(y) - I(x) + eps at every probe y} for any function I."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dim = len(x)
    Ix = I(x)
    if not math.isfinite(Ix):
        return empty_set(dim)
    rows, rhs = [], []
    for y in probes:
        d = y - x
        if not np.any(np.abs(d) > 1e-15):
            continue
        Iy = I(y)
        if math.isfinite(Iy):
            rows.append(d)
            rhs.append(Iy - Ix + eps)
    if not rows:
        return whole_space(dim)
    A, b = np.array(rows), np.array(rhs)
    if dim == 1:
        a = A[:, 0]
        up = b[a > 0] / a[a > 0]
        dn = b[a < 0] / a[a < 0]
        lo = dn.max() if len(dn) else -INF
        hi = up.min() if len(up) else INF
        if lo > hi + ORACLE_EMPTY_TOL:
            return empty_set(1)
        if lo > hi:
            lo = hi = 0.5 * (lo + hi)
        return interval(lo, hi)
    return from_halfspaces(A, b, dim)


def oracle_eps_subdiff(F: Integrand, x, eps: float, grid: OracleGrid | None = None) -> Polyhedron:
    """Outer approximation of the eps-subdifferential of I_f from the subgradient
    inequality imposed at every probe point (grid plus the vertices of dom I_f)."""
    grid = grid or OracleGrid()
    dom = domain_of_integral(F).set
    probes = [grid.points(F.dim)]
    if not dom.empty and len(dom.vertices):
        probes.append(dom.vertices)
    return oracle_from_values(lambda y: integral_value(F, y), x, eps, np.vstack(probes))


# --------------------------------------------------------------- Aumann integral


@dataclass(frozen=True)
class SetWithStatus:
    set: Polyhedron
    status: str  # nonempty-exact | empty-no-integrable-selection | unbounded-direction | approximate
    unbounded_directions: tuple = ()

    def __post_init__(self):
        if (self.status == "empty-no-integrable-selection") != self.set.empty:
            raise ValueError("empty status must match an empty set")

    @property
    def empty(self) -> bool:
        return self.set.empty

    def to_json(self) -> dict:
        out = {"set": self.set.to_json(), "status": self.status}
        if self.unbounded_directions:
            out["unbounded_directions"] = [list(map(float, np.atleast_1d(v))) for v in self.unbounded_directions]
        return out


EMPTY_STATUS = "empty-no-integrable-selection"


def _empty(dim):
    return SetWithStatus(empty_set(dim), EMPTY_STATUS)


def aumann_integral_1d(lo: np.ndarray, hi: np.ndarray, mu: MeasureSpace,
                       probe_lo: Callable | None = None, probe_hi: Callable | None = None) -> SetWithStatus:
    """Aumann integral of t -> [lo(t), hi(t)] with the clamp-selection criterion."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    pos = mu.weights > 0
    if np.any((lo > hi + 1e-12)[pos]):
        return _empty(1)
    plo = None if probe_lo is None else (lambda t: max(probe_lo(t), 0.0))
    phi = None if probe_hi is None else (lambda t: max(-probe_hi(t), 0.0))
    A = integrate(np.maximum(lo, 0.0), mu, probe=plo)
    B = integrate(np.maximum(-hi, 0.0), mu, probe=phi)
    if not (A.finite and B.finite):
        return _empty(1)
    L = integrate(lo, mu, probe=probe_lo)
    U = integrate(hi, mu, probe=probe_hi)
    lo_v = L.value if L.finite else -INF
    hi_v = U.value if U.finite else INF
    unb = tuple(d for d, flag in ((np.array([-1.0]), lo_v == -INF), (np.array([1.0]), hi_v == INF)) if flag)
    return SetWithStatus(interval(lo_v, hi_v), "nonempty-exact", unb)


def aumann_integral(G, mu: MeasureSpace, directions: int = 360) -> SetWithStatus:
    """Aumann integral of a polyhedron-valued map given per node or as a callable of t."""
    if callable(G):
        sets = [G(float(t)) for t in mu.nodes]
        probe_set = G
    else:
        sets = list(G)
        probe_set = None
    if len(sets) != len(mu.nodes):
        raise ValueError("one set per node is required")
    dim = sets[0].dim
    pos = mu.weights > 0
    if any(S.empty for S, p in zip(sets, pos) if p):
        return _empty(dim)
    if dim == 1:
        lo = np.array([-support(S, [-1.0]) for S in sets])
        hi = np.array([support(S, [1.0]) for S in sets])
        plo = phi = None
        if probe_set is not None and mu.kind == "interval":
            plo = lambda t: -support(probe_set(t), [-1.0])  # noqa: E731
            phi = lambda t: support(probe_set(t), [1.0])  # noqa: E731
        return aumann_integral_1d(lo, hi, mu, plo, phi)
    if mu.kind == "finite-discrete":
        out = point(np.zeros(dim))
        for S, w in zip(sets, mu.weights):
            if w > 0:
                out = minkowski_sum(out, scale(S, w))
        return SetWithStatus(out, "nonempty-exact")
    dirs = direction_fan(directions)
    vals, unb = [], []
    for d in dirs:
        r = integrate(np.array([support(S, d) for S in sets]), mu)
        if r.value == INF:
            unb.append(d)
        vals.append(r.value if r.status != "indeterminate" else INF)
    res = set_from_supports(dirs, vals, dim)
    if res.empty:
        return SetWithStatus(res, EMPTY_STATUS)
    if unb:
        return SetWithStatus(res, "unbounded-direction", tuple(unb))
    radius = np.array([INF if len(S.rays) else float(np.max(np.linalg.norm(S.vertices, axis=1)))
                       for S in sets])
    bounded = integrate(radius, mu)
    return SetWithStatus(res, "nonempty-exact" if bounded.finite else "approximate")


def node_intervals(members: Sequence[ConvexFunction], x, eps_values) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints of the node-wise eps(t)-subdifferentials in 1D via directional supports."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eps_values = np.broadcast_to(np.asarray(eps_values, dtype=float), (len(members),))
    lo = np.empty(len(members))
    hi = np.empty(len(members))
    for i, (f, e) in enumerate(zip(members, eps_values)):
        if not math.isfinite(f.evaluate(x)):
            lo[i], hi[i] = INF, -INF
            continue
        hi[i] = directional_support(f, x, [1.0], float(e))
        lo[i] = -directional_support(f, x, [-1.0], float(e))
    return lo, hi


def aumann_of_subdifferentials(fam, x, eps_values, extra: Polyhedron | None = None,
                               directions: int = 360) -> SetWithStatus:
    """Aumann integral of t -> (eps(t)-subdifferential of fam_t at x) + extra."""
    mu = fam.measure
    dim = fam.members[0].dim
    eps_values = np.broadcast_to(np.asarray(eps_values, dtype=float), (len(fam.members),))
    if dim == 1:
        lo, hi = node_intervals(fam.members, x, eps_values)
        if extra is not None:
            if extra.empty:
                return _empty(1)
            lo = lo - support(extra, [-1.0])
            hi = hi + support(extra, [1.0])
        plo = phi = None
        fam_fn = getattr(fam, "family", None)
        if mu.kind == "interval" and fam_fn is not None and np.ptp(eps_values) == 0:
            e0 = float(eps_values[0])
            xe = np.atleast_1d(np.asarray(x, dtype=float))
            ext_lo = 0.0 if extra is None else -support(extra, [-1.0])
            ext_hi = 0.0 if extra is None else support(extra, [1.0])
            plo = lambda t: -directional_support(fam_fn(t), xe, [-1.0], e0) + ext_lo  # noqa: E731
            phi = lambda t: directional_support(fam_fn(t), xe, [1.0], e0) + ext_hi  # noqa: E731
        lo = np.nan_to_num(lo, nan=-INF)
        hi = np.nan_to_num(hi, nan=INF)
        return aumann_integral_1d(lo, hi, mu, plo, phi)
    sets = [eps_subdifferential(f, x, float(e), directions=directions).set
            for f, e in zip(fam.members, eps_values)]
    if extra is not None:
        sets = [minkowski_sum(S, extra) for S in sets]
    return aumann_integral(sets, mu, directions=directions)


# --------------------------------------------------------------- certificates


@dataclass(frozen=True)
class Certificate:
    status: str  # "certified" | "resolution-failure" | "precondition-failed"
    eps1: np.ndarray | None = None
    eps2: float | None = None
    selection: np.ndarray | None = None
    remainder: np.ndarray | None = None
    budget_used: float | None = None
    residual: float | None = None

    @property
    def found(self) -> bool:
        return self.status == "certified"


def _select_lp(sets: Sequence[Polyhedron], weights: np.ndarray, R: Polyhedron, target: np.ndarray):
    dim = len(target)
    blocks = list(zip(sets, weights)) + [(R, 1.0)]
    cols = []
    layout = []
    for bi, (S, w) in enumerate(blocks):
        nv, nr = len(S.vertices), len(S.rays)
        layout.append((len(cols), nv, nr))
        for v in S.vertices:
            cols.append((bi, "v", w * v))
        for r in S.rays:
            cols.append((bi, "r", w * r))
    n = len(cols)
    A_eq = np.zeros((dim + len(blocks), n))
    b_eq = np.concatenate([target, np.ones(len(blocks))])
    for j, (bi, kind, vec) in enumerate(cols):
        A_eq[:dim, j] = vec
        if kind == "v":
            A_eq[dim + bi, j] = 1.0
    res = linprog(np.zeros(n), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        return None
    z = res.x
    points = []
    for (start, nv, nr), (S, _w) in zip(layout, blocks):
        lam = z[start:start + nv]
        mu_ = z[start + nv:start + nv + nr]
        p = lam @ S.vertices if nv else np.zeros(dim)
        if nr:
            p = p + mu_ @ S.rays
        points.append(p)
    return np.array(points[:-1]), points[-1]


def _select_clamp_1d(lo, hi, mu: MeasureSpace, R: Polyhedron, target: float):
    agg = aumann_integral_1d(lo, hi, mu)
    if agg.empty:
        return None
    A, B = -support(agg.set, [-1.0]), support(agg.set, [1.0])
    r_lo, r_hi = -support(R, [-1.0]), support(R, [1.0])
    y_lo, y_hi = max(A, target - r_hi), min(B, target - r_lo)
    if y_lo > y_hi + 1e-9 * (1 + abs(target)):
        return None
    y = min(max(target, y_lo), y_hi)
    w = mu.weights
    if math.isfinite(A) and math.isfinite(B):
        theta = 0.0 if B - A <= 0 else (y - A) / (B - A)
        sel = lo + theta * (hi - lo)
        sel = np.where(np.isfinite(sel), sel, np.where(np.isfinite(lo), lo, hi))
    else:
        def total(c):
            return float(np.dot(np.clip(c, lo, hi), w))
        a, b = -1e12, 1e12
        for _ in range(200):
            m = 0.5 * (a + b)
            if total(m) < y:
                a = m
            else:
                b = m
        sel = np.clip(0.5 * (a + b), lo, hi)
    rem = target - float(np.dot(sel, w))
    return sel[:, None], np.array([rem])


def eps_certificate_decomposition(F: Integrand, x, xstar, eps: float, fan: int = 16,
                                  check_oracle: bool = True, grid: OracleGrid | None = None) -> Certificate:
    """Search for l*(t) in the eps1(t)-subdifferential of f_t + indicator(dom I_f) and
    a remainder in the eps2-normal set of dom I_f with int eps1 + eps2 <= eps."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xstar = np.atleast_1d(np.asarray(xstar, dtype=float))
    if check_oracle:
        orc = oracle_eps_subdiff(F, x, eps, grid)
        if not contains(orc, xstar, tol=1e-6):
            return Certificate("precondition-failed")
    D = domain_of_integral(F).set
    fam = restricted_family(F, D)
    mu = F.measure
    w = mu.weights
    dim = F.dim
    eps2_grid = sorted({eps * k / 8.0 for k in range(9)})
    dirs = [np.array([1.0]), np.array([-1.0])] if dim == 1 else list(direction_fan(fan))
    for eps2 in eps2_grid:
        eps1 = max(eps - eps2, 0.0)
        R = normal_cone_eps(D, x, eps2)
        if R.empty:
            continue
        allocs = [np.zeros(len(w))]
        if eps1 > 0:
            allocs = [uniform_allocation(eps1, mu).values]
            allocs += [optimal_allocation(eps1, x, v, fam).values for v in dirs]
        for ell in allocs:
            if dim == 1:
                lo, hi = node_intervals(fam.members, x, ell)
                found = _select_clamp_1d(lo, hi, mu, R, float(xstar[0]))
            else:
                sets = [eps_subdifferential(f, x, float(e)).set for f, e in zip(fam.members, ell)]
                if any(S.empty for S in sets):
                    continue
                found = _select_lp(sets, w, R, xstar)
            if found is None:
                continue
            sel, rem = found
            gaps = np.empty(len(w))
            for i, f in enumerate(fam.members):
                try:
                    gaps[i] = max(fenchel_young_gap(f, x, sel[i]), 0.0)
                except NotImplementedError:
                    gaps[i] = ell[i]
            used = float(np.dot(gaps, w)) + eps2
            residual = float(np.linalg.norm(w @ sel + rem - xstar))
            if used <= eps + 1e-6 and residual <= 1e-6 and contains(R, rem, tol=1e-6):
                return Certificate("certified", gaps, eps2, sel, rem, used, residual)
    return Certificate("resolution-failure")
