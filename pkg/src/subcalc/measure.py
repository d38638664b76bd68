"""Discretised measure spaces, upper integrals with divergence detection, and
error-budget allocations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import expr
from .geometry import INF

DEFAULT_NODES = 2048
COUNTABLE_N = 10_000
DIVERGENCE_THRESHOLD = 1e12
EXPONENT_MARGIN = 1e-6
BISECTION_STEPS = 100
LAMBDA_CAP = 1e12
GOLDEN_ITERS = 80
TABULATE_ABOVE = 64  # nodes; above this the per-node maximisation is tabulated


@dataclass(frozen=True)
class MeasureSpace:
    kind: str  # "finite-discrete" | "countable-truncated" | "interval"
    nodes: np.ndarray
    weights: np.ndarray
    a: float | None = None
    b: float | None = None
    density: str = "lebesgue"
    singularity: dict = field(default_factory=dict)  # {"a": exponent, "b": exponent}
    node_count: int | None = None
    tail_bound: float = 0.0
    spec: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")

    def __len__(self):
        return len(self.nodes)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights)) + (self.tail_bound_mass if self.kind == "countable-truncated" else 0.0)

    @property
    def tail_bound_mass(self) -> float:
        return float(self.spec.get("tail_mass", 0.0))

    @property
    def is_discrete(self) -> bool:
        return self.kind == "finite-discrete"

    def split(self, points: Sequence[float]) -> "MeasureSpace":
        """Same interval measure with quadrature panels broken at ``points``."""
        if self.kind != "interval":
            return self
        inner = sorted({float(p) for p in points if self.a < p < self.b})
        if not inner:
            return self
        return _interval_measure(self.a, self.b, self.density, self.singularity,
                                 self.node_count, inner, self.spec)

    def to_json(self) -> dict:
        return dict(self.spec)


def _density_fn(density: str) -> Callable[[np.ndarray], np.ndarray]:
    if density == "lebesgue":
        return lambda t: np.ones_like(t)
    return np.vectorize(lambda t: expr.evaluate(density, {"t": t}))


def _substitution_power(exponent: float) -> int:
    # t - a = (b - a) s^k keeps s^(k-1) * s^(-k p) bounded when k (1 - p) >= 1
    if exponent is None or exponent >= 1.0:
        return 2
    return max(2, math.ceil(1.0 / (1.0 - exponent) - 1e-12))


def _panel(lo, hi, n, sing_lo, sing_hi):
    s, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    if sing_lo is not None and sing_hi is not None:
        mid = 0.5 * (lo + hi)
        t1, w1 = _panel(lo, mid, n // 2, sing_lo, None)
        t2, w2 = _panel(mid, hi, n - n // 2, None, sing_hi)
        return np.concatenate([t1, t2]), np.concatenate([w1, w2])
    if sing_lo is not None:
        k = _substitution_power(sing_lo)
        return lo + (hi - lo) * s ** k, w * (hi - lo) * k * s ** (k - 1)
    if sing_hi is not None:
        k = _substitution_power(sing_hi)
        return hi - (hi - lo) * s ** k, w * (hi - lo) * k * s ** (k - 1)
    return lo + (hi - lo) * s, w * (hi - lo)


def _interval_measure(a, b, density, singularity, node_count, breaks, spec):
    edges = [a] + list(breaks) + [b]
    total = b - a
    ts, ws = [], []
    for i in range(len(edges) - 1):
        lo, hi = edges[i], edges[i + 1]
        n = max(64, int(round(node_count * (hi - lo) / total)))
        t, w = _panel(lo, hi, n, singularity.get("a") if i == 0 else None,
                      singularity.get("b") if i == len(edges) - 2 else None)
        ts.append(t); ws.append(w)
    t = np.concatenate(ts)
    w = np.concatenate(ws) * _density_fn(density)(np.concatenate(ts))
    return MeasureSpace("interval", t, w, float(a), float(b), density, dict(singularity),
                        node_count, 0.0, spec)


def finite_discrete(nodes: Sequence[float], weights: Sequence[float]) -> MeasureSpace:
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if nodes.shape != weights.shape:
        raise ValueError("nodes and weights must match")
    spec = {"kind": "finite-discrete", "nodes": nodes.tolist(), "weights": weights.tolist()}
    return MeasureSpace("finite-discrete", nodes, weights, spec=spec)


def countable_truncated(weight: str | Callable[[int], float], tail_bound: float,
                        N: int = COUNTABLE_N, tail_mass: float = 0.0) -> MeasureSpace:
    """Nodes 1..N of a measure on the naturals; ``tail_bound`` bounds the neglected tail."""
    n = np.arange(1, N + 1, dtype=float)
    if callable(weight):
        w = np.array([weight(int(k)) for k in n])
        wspec = None
    else:
        w = np.array([expr.evaluate(weight, {"t": k, "n": k}) for k in n])
        wspec = weight
    spec = {"kind": "countable-truncated", "weight": wspec, "N": N, "tail_bound": tail_bound,
            "tail_mass": tail_mass}
    return MeasureSpace("countable-truncated", n, w, tail_bound=float(tail_bound), spec=spec)


def interval(a: float, b: float, density: str = "lebesgue", singularity: dict | None = None,
             node_count: int = DEFAULT_NODES) -> MeasureSpace:
    """Gauss-Legendre discretisation of (a, b] with an optional power-law singular endpoint.

    ``singularity`` maps "a"/"b" to the declared exponent p of the integrands'
    t^(-p) behaviour there; it selects the substitution power and switches on the
    exponent-fit divergence test.
    """
    if not b > a:
        raise ValueError("need a < b")
    sing = {}
    if singularity:
        if "at" in singularity:
            sing[singularity["at"]] = float(singularity.get("exponent", 0.5))
        else:
            sing = {k: float(v) for k, v in singularity.items()}
    spec = {"kind": "interval", "a": a, "b": b, "density": density, "node_count": node_count}
    if singularity:
        spec["singularity"] = singularity
    return _interval_measure(float(a), float(b), density, sing, node_count, [], spec)


def from_json(data: dict) -> MeasureSpace:
    kind = data["kind"]
    if kind == "finite-discrete":
        return finite_discrete(data["nodes"], data["weights"])
    if kind == "countable-truncated":
        return countable_truncated(data["weight"], data.get("tail_bound", 0.0), data.get("N", COUNTABLE_N),
                                   data.get("tail_mass", 0.0))
    if kind == "interval":
        return interval(data["a"], data["b"], data.get("density", "lebesgue"),
                        data.get("singularity"), data.get("node_count", DEFAULT_NODES))
    raise ValueError(f"unknown measure kind {kind!r}")


# --------------------------------------------------------------- integration


@dataclass(frozen=True)
class IntegralResult:
    value: float
    status: str  # "finite" | "divergent" | "indeterminate"

    @property
    def finite(self) -> bool:
        return self.status == "finite"


def _fit_exponent(ts: np.ndarray, gs: np.ndarray, end: float) -> float:
    d = np.abs(ts - end)
    g = np.abs(gs)
    ok = (d > 0) & (g > 1e-300)
    if ok.sum() < 2:
        return -INF
    x, y = np.log(d[ok]), np.log(g[ok])
    if np.ptp(x) == 0:
        return -INF
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def endpoint_exponent(mu: MeasureSpace, end: str, values=None, phi: Callable | None = None) -> float:
    """Local power-law exponent p of phi*density ~ |t - end|^(-p)."""
    e = mu.a if end == "a" else mu.b
    side = 1.0 if end == "a" else -1.0
    dens = _density_fn(mu.density)
    if phi is not None:
        ts = e + side * (mu.b - mu.a) * np.array([1e-9, 1e-10, 1e-11])
        vals = np.array([phi(t) for t in ts], dtype=float)
        if np.any(np.isinf(vals)):
            return INF
        return _fit_exponent(ts, vals * dens(ts), e)
    order = np.argsort(np.abs(mu.nodes - e))[:4]
    ts = mu.nodes[order]
    vals = np.asarray(values, dtype=float)[order]
    return _fit_exponent(ts, vals * dens(ts), e)


def _sum_ext(values: np.ndarray, weights: np.ndarray) -> IntegralResult:
    pos = weights > 0
    v = values[pos]
    w = weights[pos]
    has_pos = bool(np.any(v == INF))
    has_neg = bool(np.any(v == -INF))
    if has_pos and has_neg:
        return IntegralResult(math.nan, "indeterminate")
    if has_pos:
        return IntegralResult(INF, "divergent")
    if has_neg:
        return IntegralResult(-INF, "divergent")
    total = float(np.dot(v, w))
    if abs(total) > DIVERGENCE_THRESHOLD:
        return IntegralResult(math.copysign(INF, total), "divergent")
    return IntegralResult(total, "finite")


def integrate(phi, mu: MeasureSpace, probe: Callable[[float], float] | None = None) -> IntegralResult:
    """Upper integral of phi over mu.

    ``phi`` is either a callable of t or an array of values at ``mu.nodes``.
    ``probe`` (defaults to phi when callable) is used for the endpoint exponent
    fit at declared singular endpoints.
    """
    if callable(phi):
        probe = probe or phi
        values = np.array([phi(t) for t in mu.nodes], dtype=float)
    else:
        values = np.asarray(phi, dtype=float)
        if values.shape != mu.nodes.shape:
            raise ValueError("values must be given at every node")
    res = _sum_ext(values, mu.weights)
    if res.status != "finite":
        return res
    if mu.kind == "interval":
        for end in ("a", "b"):
            p = endpoint_exponent(mu, end, values, probe)
            if p >= 1.0 - EXPONENT_MARGIN:
                e = mu.a if end == "a" else mu.b
                near = values[np.argmin(np.abs(mu.nodes - e))]
                return IntegralResult(math.copysign(INF, near), "divergent")
        if not mu.singularity and probe is not None and abs(res.value) > 1e6:
            fine = _interval_measure(mu.a, mu.b, mu.density, {}, 2 * (mu.node_count or DEFAULT_NODES), [], {})
            res2 = _sum_ext(np.array([probe(t) for t in fine.nodes], dtype=float), fine.weights)
            if res2.status != "finite":
                return res2
    return res


# --------------------------------------------------------------- allocations


@dataclass(frozen=True)
class ErrorAllocation:
    values: np.ndarray
    budget: float
    certified_integral: float
    achieved_support: float | None = None
    multiplier: float | None = None
    node_status: tuple = ()

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("allocation values must be nonnegative")
        if self.certified_integral > self.budget + 1e-12 * (1.0 + self.budget):
            raise ValueError("allocation exceeds its budget")


def _certify(values: np.ndarray, mu: MeasureSpace) -> float:
    return float(np.dot(values, mu.weights))


def _finite_mass(mu: MeasureSpace) -> float:
    M = float(np.sum(mu.weights))
    if not (M > 0 and math.isfinite(M)):
        raise ValueError("uniform allocation needs a finite positive total mass")
    return M


def uniform_allocation(eps1: float, mu: MeasureSpace) -> ErrorAllocation:
    if eps1 < 0:
        raise ValueError("budget must be nonnegative")
    M = _finite_mass(mu)
    vals = np.full(len(mu.nodes), eps1 / M)
    cert = min(_certify(vals, mu), eps1)
    return ErrorAllocation(vals, float(eps1), cert)


def _golden_argmax(phi, lo, hi, iters=GOLDEN_ITERS):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = phi(d)
    cands = [(phi(lo), lo), (fc, c), (fd, d), (phi(hi), hi)]
    # prefer the smallest argument among ties so the budget is not wasted
    best = max(v for v, _ in cands)
    return min(x for v, x in cands if v >= best - 1e-15 * (1 + abs(best)) or v == best)


def optimal_allocation(eps1: float, x, v, F) -> ErrorAllocation:
    """Maximise sum_t w_t sigma_t(l_t) subject to sum_t w_t l_t <= eps1 by Lagrangian bisection.

    ``F`` needs ``members`` (one convex function per node) and ``measure``.  For a
    multiplier lam each node solves max_e sigma_t(e) - lam e on [0, eps1 / w_t], in
    closed form where the primitive allows it and by golden section otherwise
    (tabulated when there are many nodes).
    """
    from .functions import support_curve

    mu = F.measure
    funcs = F.members
    n = len(funcs)
    w = mu.weights
    if eps1 < 0:
        raise ValueError("budget must be nonnegative")
    curves = [support_curve(f, x, v) for f in funcs]
    base = np.array([c.sigma(0.0) for c in curves])
    status = tuple("infinite" if b == INF else "ok" for b in base)
    if eps1 == 0.0:
        return ErrorAllocation(np.zeros(n), 0.0, 0.0, _weighted_sum(base, w), 0.0, status)
    if any(st == "infinite" for st in status):
        alloc = uniform_allocation(eps1, mu)
        return replace(alloc, achieved_support=INF, node_status=status)

    caps = np.where(w > 0, eps1 / np.where(w > 0, w, 1.0), 0.0)
    h = 1e-12
    slopes = [(c.sigma(h) - b) / h for c, b in zip(curves, base)]
    finite = [s for s in slopes if math.isfinite(s)]
    lam_max = LAMBDA_CAP if len(finite) < n else min(LAMBDA_CAP, max(finite + [0.0]))

    open_nodes = [i for i in range(n) if curves[i].argmax is None and caps[i] > 0]
    table = grid = None
    if len(open_nodes) > TABULATE_ABOVE:
        grid = np.unique(np.concatenate([[0.0], np.geomspace(1e-9, 1.0, 95) * caps.max(),
                                         [eps1 / np.sum(w)]]))
        table = {i: np.array([curves[i].sigma(e) if e <= caps[i] else -INF for e in grid])
                 for i in open_nodes}

    def alloc_at(lam):
        out = np.zeros(n)
        for i in range(n):
            if caps[i] == 0:
                continue
            c = curves[i]
            if c.argmax is not None:
                out[i] = min(max(c.argmax(lam, caps[i]), 0.0), caps[i])
            elif table is not None:
                out[i] = grid[int(np.argmax(table[i] - lam * grid))]
            else:
                out[i] = _golden_argmax(lambda e: c.sigma(e) - lam * e, 0.0, caps[i])
        return out

    lo, hi = 0.0, lam_max
    l_lo, l_hi = alloc_at(lo), alloc_at(hi)
    tol = 1e-9 * (1.0 + eps1)
    if _certify(l_lo, mu) <= eps1:
        l_hi = l_lo
    else:
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            l_mid = alloc_at(mid)
            if _certify(l_mid, mu) > eps1:
                lo, l_lo = mid, l_mid
            else:
                hi, l_hi = mid, l_mid
            if abs(_certify(l_hi, mu) - eps1) <= tol:
                break
    # mix the feasible and infeasible ends so the budget is met exactly
    I_hi, I_lo = _certify(l_hi, mu), _certify(l_lo, mu)
    if I_lo > eps1 > I_hi and I_lo > I_hi:
        theta = (eps1 - I_hi) / (I_lo - I_hi)
        vals = l_hi + theta * (l_lo - l_hi)
    else:
        vals = l_hi
    vals = np.maximum(vals, 0.0)
    cert = _certify(vals, mu)
    if cert > eps1:
        vals *= eps1 / cert
        cert = _certify(vals, mu)
    achieved = _weighted_sum(np.array([c.sigma(e) for c, e in zip(curves, vals)]), w)
    # never do worse than the uniform split, which is itself admissible
    unif = uniform_allocation(eps1, mu)
    u_val = _weighted_sum(np.array([c.sigma(e) for c, e in zip(curves, unif.values)]), w)
    if u_val > achieved:
        return replace(unif, achieved_support=u_val, multiplier=hi, node_status=status)
    return ErrorAllocation(vals, float(eps1), min(cert, eps1), achieved, hi, status)


def grid_allocation(eps1: float, x, v, F, steps: int = 200, support_fn: Callable | None = None) -> ErrorAllocation:
    """Brute-force allocation on a simplex grid; for discrete measures with at most 3 nodes."""
    from .functions import directional_support

    sigma = support_fn or directional_support
    mu = F.measure
    n = len(F.members)
    if n > 3:
        raise ValueError("grid allocation is limited to 3 nodes")
    w = mu.weights
    best, best_vals = -INF, np.zeros(n)
    rng = range(steps + 1)
    combos = ((i,) for i in rng) if n == 1 else (
        ((i, steps - i) for i in rng) if n == 2 else
        ((i, j, steps - i - j) for i in rng for j in range(steps + 1 - i)))
    for c in combos:
        if n == 1 and c[0] != steps:
            continue
        shares = np.array(c, dtype=float) / steps * eps1
        vals = np.where(w > 0, shares / np.where(w > 0, w, 1.0), 0.0)
        tot = _weighted_sum(np.array([sigma(F.members[i], x, v, vals[i]) for i in range(n)]), w)
        if tot > best:
            best, best_vals = tot, vals
    cert = min(_certify(best_vals, mu), eps1)
    return ErrorAllocation(best_vals, float(eps1), cert, best)


def _weighted_sum(vals: np.ndarray, w: np.ndarray) -> float:
    pos = w > 0
    v = vals[pos]
    if np.any(v == INF):
        return INF
    if np.any(v == -INF):
        return -INF
    return float(np.dot(v, w[pos]))
