"""Convex functions on R^1 / R^2 as small expression trees.

Primitives carry closed forms for values, conjugates and epsilon-subdifferential
supports.  Everything else goes through one kernel: the support of the
epsilon-subdifferential in direction v is

    inf_{s>0} (f(x + s v) - f(x) + eps) / s,

minimised by ternary search over log s.  Sums are never split into sums of
subdifferentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from . import expr
from .geometry import (
    INF, Polyhedron, contains, empty_set, ext_add, ext_mul, halfspaces, interval,
    intersect, make_polyhedron, normal_cone_eps, point, scale,
    support, translate, whole_space, from_halfspaces,
)

KERNEL_S_MIN = 1e-8
KERNEL_S_MAX = 1e8
KERNEL_ITERS = 200
GOLDEN_ITERS = 200
DEFAULT_DIRECTIONS_2D = 360

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _vec(x, dim: int) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
    if len(v) != dim:
        raise ValueError(f"expected a point of R^{dim}, got {x!r}")
    return v


def _max_step(P: Polyhedron, x: np.ndarray, v: np.ndarray) -> float:
    """sup{s >= 0 : x + s v in P} for x in P."""
    A, b = halfspaces(P)
    if len(A) == 0:
        return INF
    av = A @ v
    slack = np.maximum(b - A @ x, 0.0)
    mask = av > 1e-15
    if not np.any(mask):
        return INF
    return float(np.min(slack[mask] / av[mask]))


def _indicator_support(P: Polyhedron, x, v, eps) -> tuple[float, float]:
    smax = _max_step(P, x, v)
    if smax == INF:
        return 0.0, INF
    if smax <= 1e-15:
        return INF, 0.0
    return (eps / smax if eps > 0 else 0.0), smax


class ConvexFunction:
    """Base class; see the concrete node types below."""

    dim: int

    def evaluate(self, x) -> float:
        raise NotImplementedError

    def conjugate(self, s: np.ndarray) -> float | None:
        return None

    def support_closed(self, x: np.ndarray, v: np.ndarray, eps: float):
        """(value, minimising step) of the eps-support, or None if no closed form."""
        return None

    def eps_set_closed(self, x: np.ndarray, eps: float) -> Polyhedron | None:
        return None

    def domain(self) -> Polyhedron:
        return whole_space(self.dim)

    @property
    def domain_exact(self) -> bool:
        return True

    def polyhedral_parts(self):
        """(pieces, A, b) with f = sum_j max_i(pieces_j) + indicator(Ax<=b), or None."""
        return None

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Affine(ConvexFunction):
    a: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return len(self.a)

    def evaluate(self, x):
        return float(self.a @ _vec(x, self.dim) + self.b)

    def conjugate(self, s):
        return -self.b if np.abs(s - self.a).max() <= 1e-12 * (1 + np.abs(self.a).max()) else INF

    def support_closed(self, x, v, eps):
        return float(self.a @ v), INF

    def eps_set_closed(self, x, eps):
        return point(self.a)

    def polyhedral_parts(self):
        return [(self.a[None, :], np.array([self.b]))], np.zeros((0, self.dim)), np.zeros(0)

    def to_json(self):
        return {"type": "affine", "a": self.a.tolist(), "b": self.b}


@dataclass(frozen=True, eq=False)
class PiecewiseLinearMax(ConvexFunction):
    """x -> max_i (slopes[i] . x + offsets[i])."""

    slopes: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        off = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        sl = np.asarray(self.slopes, dtype=float).reshape(len(off), -1)
        object.__setattr__(self, "slopes", sl)
        object.__setattr__(self, "offsets", off)

    @property
    def dim(self):
        return self.slopes.shape[1]

    def evaluate(self, x):
        return float(np.max(self.slopes @ _vec(x, self.dim) + self.offsets))

    def conjugate(self, s):
        if self.dim != 1:
            return None
        a, c = self.slopes[:, 0], -self.offsets
        s0 = float(s[0])
        if s0 < a.min() - 1e-12 or s0 > a.max() + 1e-12:
            return INF
        # lower convex envelope of the points (a_i, -b_i)
        pts = sorted(zip(a, c))
        hull: list[tuple[float, float]] = []
        for p in pts:
            if hull and abs(hull[-1][0] - p[0]) <= 1e-15:
                if p[1] < hull[-1][1]:
                    hull[-1] = p
                continue
            while len(hull) >= 2:
                (x1, y1), (x2, y2) = hull[-2], hull[-1]
                if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                    hull.pop()
                else:
                    break
            hull.append(p)
        hx, hy = zip(*hull)
        return float(np.interp(min(max(s0, hx[0]), hx[-1]), hx, hy))

    def _gaps(self, x):
        vals = self.slopes @ x + self.offsets
        return vals.max() - vals

    def support_closed(self, x, v, eps):
        # h(u) = max_i (c_i - e_i u) with u = 1/s, convex piecewise linear in u
        c = self.slopes @ v
        e = self._gaps(x) - eps
        tol = 1e-12 * (1.0 + abs(self.evaluate(x)))
        cands = [0.0]
        for i in range(len(c)):
            for j in range(i + 1, len(c)):
                de = e[i] - e[j]
                if abs(de) > 1e-15:
                    u = (c[i] - c[j]) / de
                    if u > 0:
                        cands.append(u)
        best, best_u = INF, 0.0
        for u in cands:
            val = float(np.max(c - e * u))
            if val < best:
                best, best_u = val, u
        if not np.any(e < -tol):
            act = np.abs(e) <= tol
            lim = float(c[act].max()) if np.any(act) else -INF
            if lim < best:
                best, best_u = lim, INF
        step = INF if best_u == 0.0 else (0.0 if best_u == INF else 1.0 / best_u)
        return best, step

    def eps_set_closed(self, x, eps):
        g = self._gaps(x)
        tol = 1e-12 * (1.0 + abs(self.evaluate(x)))
        pts = [self.slopes[i] for i in range(len(g)) if g[i] <= eps + tol]
        for i in range(len(g)):
            for j in range(len(g)):
                if g[i] < eps - tol and g[j] > eps + tol:
                    lam = (eps - g[i]) / (g[j] - g[i])
                    pts.append((1 - lam) * self.slopes[i] + lam * self.slopes[j])
        return make_polyhedron(pts, [], dim=self.dim)

    def polyhedral_parts(self):
        return [(self.slopes, self.offsets)], np.zeros((0, self.dim)), np.zeros(0)

    def to_json(self):
        return {"type": "pl_max", "pieces": [{"a": a.tolist(), "b": float(b)}
                                             for a, b in zip(self.slopes, self.offsets)]}


@dataclass(frozen=True, eq=False)
class Quadratic(ConvexFunction):
    """x -> x'Qx + c'x + d with Q symmetric positive semidefinite."""

    Q: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        Q = np.asarray(self.Q, dtype=float).reshape(len(c), len(c))
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        w = np.linalg.eigvalsh(Q)
        if w.min() < -1e-12 * max(1.0, abs(w).max()):
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", float(self.d))

    @property
    def dim(self):
        return len(self.c)

    def gradient(self, x):
        return 2.0 * self.Q @ x + self.c

    def evaluate(self, x):
        x = _vec(x, self.dim)
        return float(x @ self.Q @ x + self.c @ x + self.d)

    def conjugate(self, s):
        w, U = np.linalg.eigh(self.Q)
        z = U.T @ (s - self.c)
        big = w > 1e-12 * max(1.0, abs(w).max())
        if np.any(np.abs(z[~big]) > 1e-10 * (1.0 + np.abs(s).max())):
            return INF
        return float(0.25 * np.sum(z[big] ** 2 / w[big]) - self.d)

    def support_closed(self, x, v, eps):
        gv = float(self.gradient(x) @ v)
        q = float(v @ self.Q @ v)
        if eps == 0.0:
            return gv, 0.0
        if q <= 1e-15:
            return gv, INF
        return gv + 2.0 * math.sqrt(q * eps), math.sqrt(eps / q)

    def eps_set_closed(self, x, eps):
        if eps == 0.0 or self.dim == 1:
            if self.dim == 1:
                lo = -self.support_closed(x, np.array([-1.0]), eps)[0]
                hi = self.support_closed(x, np.array([1.0]), eps)[0]
                return interval(lo, hi)
            return point(self.gradient(x))
        return None  # ellipse: sampled on the direction grid

    def to_json(self):
        return {"type": "quadratic", "Q": self.Q.tolist(), "c": self.c.tolist(), "d": self.d}


@dataclass(frozen=True, eq=False)
class IndicatorOf(ConvexFunction):
    P: Polyhedron

    @property
    def dim(self):
        return self.P.dim

    def evaluate(self, x):
        return 0.0 if contains(self.P, _vec(x, self.dim)) else INF

    def conjugate(self, s):
        if not np.any(s):
            return 0.0 if not self.P.empty else -INF
        return support(self.P, s)

    def support_closed(self, x, v, eps):
        return _indicator_support(self.P, x, v, eps)

    def eps_set_closed(self, x, eps):
        return normal_cone_eps(self.P, x, eps)

    def domain(self):
        return self.P

    def polyhedral_parts(self):
        if self.P.empty:
            return None
        A, b = halfspaces(self.P)
        return [], A, b

    def to_json(self):
        return {"type": "indicator", "set": self.P.to_json()}


@dataclass(frozen=True, eq=False)
class AffinePlusBoxIndicator(ConvexFunction):
    """x -> a.x + b + indicator of ``box``."""

    a: np.ndarray
    b: float
    box: Polyhedron

    def __post_init__(self):
        object.__setattr__(self, "a", np.atleast_1d(np.asarray(self.a, dtype=float)))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self):
        return len(self.a)

    def evaluate(self, x):
        x = _vec(x, self.dim)
        return float(self.a @ x + self.b) if contains(self.box, x) else INF

    def conjugate(self, s):
        z = s - self.a
        if not np.any(z):
            return -self.b
        return support(self.box, z) - self.b

    def support_closed(self, x, v, eps):
        val, step = _indicator_support(self.box, x, v, eps)
        return ext_add(float(self.a @ v), val), step

    def eps_set_closed(self, x, eps):
        return translate(normal_cone_eps(self.box, x, eps), self.a)

    def domain(self):
        return self.box

    def polyhedral_parts(self):
        A, b = halfspaces(self.box)
        return [(self.a[None, :], np.array([self.b]))], A, b

    def to_json(self):
        return {"type": "affine_box", "a": self.a.tolist(), "b": self.b, "box": self.box.to_json()}


# --------------------------------------------------------------- Custom1D


@dataclass(frozen=True)
class CustomEntry:
    evaluator: Callable[..., float]
    domain: tuple[float, float]
    support: Callable[..., tuple[float, float] | None] | None = None
    open_ends: tuple[bool, bool] = (False, False)


def _neg_sqrt(x):
    return -math.sqrt(x) if x >= 0 else INF


def _neg_sqrt_support(x, v, eps):
    if x != 0.0:
        return None
    if v < 0:
        return INF, 0.0
    if eps == 0.0:
        return -INF, 0.0
    # (eps - sqrt(r)) / r is minimised at r = 4 eps^2
    return -v / (4.0 * eps), 4.0 * eps * eps / v


def _neg_log(x):
    return -math.log(x) if x > 0 else INF


def _abs_pow(x, p=2.0):
    return abs(x) ** p


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return INF


CUSTOM_REGISTRY: dict[str, CustomEntry] = {
    "neg_sqrt": CustomEntry(_neg_sqrt, (0.0, INF), _neg_sqrt_support),
    "neg_log": CustomEntry(_neg_log, (0.0, INF), open_ends=(True, False)),
    "abs_pow": CustomEntry(_abs_pow, (-INF, INF)),
    "exp": CustomEntry(_exp, (-INF, INF)),
}


def check_midpoint_convexity(fn: Callable[[float], float], lo: float, hi: float,
                             n: int = 1000, seed: int = 0) -> bool:
    """Sampled check f((a+b)/2) <= (f(a)+f(b))/2 on n random pairs."""
    rng = np.random.default_rng(seed)
    a_lo = lo if math.isfinite(lo) else -10.0
    a_hi = hi if math.isfinite(hi) else 10.0
    if math.isfinite(lo) and not math.isfinite(hi):
        a_hi = lo + 10.0
    if math.isfinite(hi) and not math.isfinite(lo):
        a_lo = hi - 10.0
    pts = rng.uniform(a_lo, a_hi, size=(n, 2))
    for a, b in pts:
        fa, fb, fm = fn(a), fn(b), fn(0.5 * (a + b))
        if not (math.isfinite(fa) and math.isfinite(fb)):
            continue
        if fm > 0.5 * (fa + fb) + 1e-9 * (1.0 + abs(fa) + abs(fb)):
            return False
    return True


@dataclass(frozen=True, eq=False)
class Custom1D(ConvexFunction):
    """Registry-backed convex function of one variable on [lo, hi]."""

    name: str
    lo: float = -INF
    hi: float = INF
    params: dict = field(default_factory=dict)
    convexity_asserted: bool = True

    def __post_init__(self):
        if self.name not in CUSTOM_REGISTRY:
            raise ValueError(f"unknown custom function {self.name!r}")
        if not self.convexity_asserted:
            raise ValueError("Custom1D requires an explicit convexity assertion")
        if not check_midpoint_convexity(self._raw_eval, self.lo, self.hi):
            raise ValueError(f"custom function {self.name!r} failed the midpoint convexity check")

    dim = 1

    def _raw_eval(self, x: float) -> float:
        if x < self.lo or x > self.hi:
            return INF
        return float(CUSTOM_REGISTRY[self.name].evaluator(x, **self.params))

    def evaluate(self, x):
        return self._raw_eval(float(_vec(x, 1)[0]))

    def support_closed(self, x, v, eps):
        hook = CUSTOM_REGISTRY[self.name].support
        entry_dom = CUSTOM_REGISTRY[self.name].domain
        if hook is None or (self.lo, self.hi) != entry_dom or self.params:
            return None
        return hook(float(x[0]), float(v[0]), eps)

    def domain(self):
        entry = CUSTOM_REGISTRY[self.name]
        return interval(max(self.lo, entry.domain[0]), min(self.hi, entry.domain[1]))

    @property
    def domain_exact(self):
        return False

    def to_json(self):
        out = {"type": "custom1d", "name": self.name,
               "domain": [None if self.lo == -INF else self.lo, None if self.hi == INF else self.hi]}
        if self.params:
            out["params"] = dict(self.params)
        return out


# --------------------------------------------------------------- combinators


@dataclass(frozen=True, eq=False)
class Sum(ConvexFunction):
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("Sum needs at least one term")
        if len({t.dim for t in terms}) != 1:
            raise ValueError("Sum terms must share a dimension")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self):
        return self.terms[0].dim

    def evaluate(self, x):
        total = 0.0
        for t in self.terms:
            total = ext_add(total, t.evaluate(x))
            if total == INF:
                return INF
        return total

    def domain(self):
        out = self.terms[0].domain()
        for t in self.terms[1:]:
            out = intersect(out, t.domain())
        return out

    @property
    def domain_exact(self):
        return all(t.domain_exact for t in self.terms)

    def polyhedral_parts(self):
        pieces, As, bs = [], [], []
        for t in self.terms:
            part = t.polyhedral_parts()
            if part is None:
                return None
            pieces += part[0]
            As.append(part[1]); bs.append(part[2])
        return pieces, np.vstack(As), np.concatenate(bs)

    def to_json(self):
        return {"type": "sum", "terms": [t.to_json() for t in self.terms]}


@dataclass(frozen=True, eq=False)
class Scale(ConvexFunction):
    lam: float
    f: ConvexFunction

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("Scale factor must be nonnegative")
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self):
        return self.f.dim

    def evaluate(self, x):
        return ext_mul(self.lam, self.f.evaluate(x))

    def conjugate(self, s):
        if self.lam == 0.0:
            return 0.0 if not np.any(s) else INF
        inner = conjugate_value(self.f, s / self.lam)
        return ext_mul(self.lam, inner)

    def support_closed(self, x, v, eps):
        if self.lam == 0.0:
            return 0.0, INF
        inner = self.f.support_closed(x, v, eps / self.lam)
        if inner is None:
            return None
        return ext_mul(self.lam, inner[0]), inner[1]

    def eps_set_closed(self, x, eps):
        if self.lam == 0.0:
            return point(np.zeros(self.dim))
        inner = self.f.eps_set_closed(x, eps / self.lam)
        return None if inner is None else scale(inner, self.lam)

    def domain(self):
        return whole_space(self.dim) if self.lam == 0.0 else self.f.domain()

    @property
    def domain_exact(self):
        return self.lam == 0.0 or self.f.domain_exact

    def polyhedral_parts(self):
        if self.lam == 0.0:
            return [], np.zeros((0, self.dim)), np.zeros(0)
        part = self.f.polyhedral_parts()
        if part is None:
            return None
        pieces = [(self.lam * s, self.lam * o) for s, o in part[0]]
        return pieces, part[1], part[2]

    def to_json(self):
        return {"type": "scale", "lambda": self.lam, "f": self.f.to_json()}


@dataclass(frozen=True, eq=False)
class RestrictTo(ConvexFunction):
    """f + indicator of P."""

    f: ConvexFunction
    P: Polyhedron

    @property
    def dim(self):
        return self.f.dim

    def evaluate(self, x):
        x = _vec(x, self.dim)
        return self.f.evaluate(x) if contains(self.P, x) else INF

    def support_closed(self, x, v, eps):
        inner = self.f.support_closed(x, v, eps)
        if inner is None:
            return None
        smax = _max_step(self.P, x, v)
        if smax <= 1e-15:
            return INF, 0.0
        value, step = inner
        if step <= smax:
            return value, step
        # quasiconvexity in s: the restricted infimum sits at the boundary
        fx = self.f.evaluate(x)
        return (self.f.evaluate(x + smax * v) - fx + eps) / smax, smax

    def domain(self):
        return intersect(self.f.domain(), self.P)

    @property
    def domain_exact(self):
        return self.f.domain_exact

    def polyhedral_parts(self):
        part = self.f.polyhedral_parts()
        if part is None or self.P.empty:
            return None
        A, b = halfspaces(self.P)
        return part[0], np.vstack([part[1], A]), np.concatenate([part[2], b])

    def to_json(self):
        return {"type": "restrict", "f": self.f.to_json(), "set": self.P.to_json()}


# --------------------------------------------------------------- operations


def evaluate(f: ConvexFunction, x) -> float:
    return f.evaluate(x)


def domain(f: ConvexFunction) -> Polyhedron:
    return f.domain()


def _golden_max(phi: Callable[[float], float], lo: float, hi: float, iters: int = GOLDEN_ITERS):
    """Maximise a concave phi on [lo, hi]; returns (value, argmax)."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = phi(c), phi(d)
    for _ in range(iters):
        if b - a <= 1e-15 * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = phi(d)
    best = max(((fc, c), (fd, d), (phi(lo), lo), (phi(hi), hi)), key=lambda p: p[0])
    return best


def _conjugate_1d(f: ConvexFunction, s: float) -> float:
    dom = f.domain()
    if dom.empty:
        return -INF
    lo, hi = float(-support(dom, [-1.0])), float(support(dom, [1.0]))

    def phi(x):
        fx = f.evaluate(x)
        return -INF if fx == INF else s * x - fx

    x0 = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (
        lo + 1.0 if math.isfinite(lo) else (hi - 1.0 if math.isfinite(hi) else 0.0))
    a, b = lo, hi
    # expand unbounded sides until phi turns down; +inf if it never does
    for side in (-1.0, 1.0):
        end = a if side < 0 else b
        if math.isfinite(end):
            continue
        step, prev = 1.0, phi(x0)
        while True:
            nxt = x0 + side * step
            val = phi(nxt)
            if val < prev:
                end = nxt
                break
            prev = val
            step *= 2.0
            if step > KERNEL_S_MAX:
                return INF
        if side < 0:
            a = end
        else:
            b = end
    return float(_golden_max(phi, a, b)[0])


def _conjugate_lp(f: ConvexFunction, s: np.ndarray) -> float | None:
    parts = f.polyhedral_parts()
    if parts is None:
        return None
    pieces, A, b = parts
    n, J = f.dim, len(pieces)
    c = np.concatenate([-s, np.ones(J)])
    rows, rhs = [], []
    for j, (sl, off) in enumerate(pieces):
        for a_i, b_i in zip(sl, off):
            r = np.zeros(n + J)
            r[:n] = a_i
            r[n + j] = -1.0
            rows.append(r); rhs.append(-b_i)
    for a_i, b_i in zip(A, b):
        r = np.zeros(n + J)
        r[:n] = a_i
        rows.append(r); rhs.append(b_i)
    res = linprog(c, A_ub=np.array(rows) if rows else None, b_ub=np.array(rhs) if rows else None,
                  bounds=[(None, None)] * (n + J), method="highs")
    if res.status == 3:
        return INF
    if res.status == 2:
        return -INF
    if res.status != 0:
        raise RuntimeError(f"conjugate LP failed: {res.message}")
    return float(-res.fun)


def conjugate_value(f: ConvexFunction, xstar) -> float:
    s = _vec(xstar, f.dim)
    val = f.conjugate(s)
    if val is not None:
        return val
    if f.dim == 1:
        return _conjugate_1d(f, float(s[0]))
    val = _conjugate_lp(f, s)
    if val is None:
        raise NotImplementedError("conjugate of non-polyhedral 2D composites is not supported")
    return val


def fenchel_young_gap(f: ConvexFunction, x, xstar) -> float:
    x = _vec(x, f.dim)
    s = _vec(xstar, f.dim)
    fx = f.evaluate(x)
    if not math.isfinite(fx):
        raise ValueError("Fenchel-Young gap needs f(x) finite")
    return ext_add(fx + float(-(s @ x)), conjugate_value(f, s))


ROUNDING_SLACK = 8.0 * np.finfo(float).eps


def kernel_support(f: ConvexFunction, x, v, eps: float) -> float:
    """inf_{s>0} (f(x+sv) - f(x) + eps)/s by ternary search over log s."""
    x = _vec(x, f.dim)
    v = _vec(v, f.dim)
    fx = f.evaluate(x)
    if not math.isfinite(fx):
        raise ValueError("directional support needs f(x) finite")

    def h(logs):
        s = math.exp(logs)
        fy = f.evaluate(x + s * v)
        if fy == INF:
            return INF
        # rounding bound of the difference keeps the result an upper bound
        slack = ROUNDING_SLACK * (abs(fy) + abs(fx) + eps)
        return (fy - fx + eps + slack) / s

    lo, hi = math.log(KERNEL_S_MIN), math.log(KERNEL_S_MAX)
    for _ in range(KERNEL_ITERS):
        if hi - lo < 1e-12:
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        h1, h2 = h(m1), h(m2)
        # +inf only appears beyond the end of dom f along the ray
        if h1 <= h2:
            hi = m2
        else:
            lo = m1
    return float(min(h(0.5 * (lo + hi)), h(math.log(KERNEL_S_MIN)), h(math.log(KERNEL_S_MAX))))


def directional_support(f: ConvexFunction, x, v, eps: float) -> float:
    """Support of the eps-subdifferential of f at x in direction v."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    xv = _vec(x, f.dim)
    vv = _vec(v, f.dim)
    if not np.any(vv):
        raise ValueError("direction must be nonzero")
    fx = f.evaluate(xv)
    if not math.isfinite(fx):
        raise ValueError("directional support needs f(x) finite")
    closed = f.support_closed(xv, vv, float(eps))
    if closed is not None:
        return float(closed[0])
    poly = polyhedral_support(f, xv, vv, float(eps))
    if poly is not None:
        return poly
    return kernel_support(f, xv, vv, float(eps))


@dataclass(frozen=True)
class SupportCurve:
    """e -> support of the e-subdifferential in a fixed direction, with an optional
    closed-form argmax of sigma(e) - lam * e over [0, cap]."""

    sigma: Callable[[float], float]
    argmax: Callable[[float, float], float] | None = None


def _const_curve(value: float) -> SupportCurve:
    return SupportCurve(lambda e: value, lambda lam, cap: 0.0)


def _linear_curve(base: float, smax: float) -> SupportCurve:
    if smax == INF:
        return _const_curve(base)
    if smax <= 1e-15:
        return _const_curve(INF)
    return SupportCurve(lambda e: base + e / smax, lambda lam, cap: cap if lam < 1.0 / smax else 0.0)


def _ray_lines(parts, x: np.ndarray, v: np.ndarray):
    """Lines (slope, intercept) in e whose lower envelope, capped by ``const``, is
    sigma(e) = inf_s (g(s) + e) / s for a polyhedral f along x + s v.

    The infimum sits at a kink of g, at the step limit of the linear constraints, or
    as s -> inf, so finitely many candidates suffice.
    """
    pieces, A, b = parts
    smax = INF
    if len(A):
        av = A @ v
        mask = av > 1e-15
        if np.any(mask):
            smax = float(np.min(np.maximum(b - A @ x, 0.0)[mask] / av[mask]))
    if smax <= 1e-15:
        return [], INF, True
    fx = sum(float(np.max(P @ x + q)) for P, q in pieces)
    cand = set()
    for P, q in pieces:
        pv, px = P @ v, P @ x + q
        for i in range(len(pv)):
            for j in range(i + 1, len(pv)):
                d = pv[j] - pv[i]
                if abs(d) > 1e-15:
                    s = (px[i] - px[j]) / d
                    if 1e-15 < s < smax:
                        cand.add(float(s))
    if math.isfinite(smax):
        cand.add(smax)

    def g(s):
        return sum(float(np.max(P @ (x + s * v) + q)) for P, q in pieces) - fx
    lines = [(1.0 / s, g(s) / s) for s in sorted(cand)]
    const = INF if math.isfinite(smax) else sum(float(np.max(P @ v)) for P, _ in pieces)
    return lines, const, False


def polyhedral_support(f: ConvexFunction, x, v, eps: float) -> float | None:
    """Exact support of the eps-subdifferential for functions with polyhedral parts."""
    parts = f.polyhedral_parts()
    if parts is None:
        return None
    lines, const, blocked = _ray_lines(parts, _vec(x, f.dim), _vec(v, f.dim))
    if blocked:
        return INF
    return float(min([b + k * eps for k, b in lines] + [const]))


def _poly_curve(parts, x: np.ndarray, v: np.ndarray) -> SupportCurve:
    lines, const, blocked = _ray_lines(parts, x, v)
    if blocked:
        return _const_curve(INF)

    def sigma(e):
        return float(min([b + k * e for k, b in lines] + [const]))

    def am(lam, cap):
        # the maximiser of a concave piecewise-linear function sits at a breakpoint
        es = {0.0, cap}
        allk = lines + ([(0.0, const)] if math.isfinite(const) else [])
        for i in range(len(allk)):
            for j in range(i + 1, len(allk)):
                dk = allk[i][0] - allk[j][0]
                if abs(dk) > 1e-18:
                    e = (allk[j][1] - allk[i][1]) / dk
                    if 0.0 < e < cap:
                        es.add(e)
        return max(sorted(es), key=lambda e: sigma(e) - lam * e)
    return SupportCurve(sigma, am)


def support_curve(f: ConvexFunction, x, v) -> SupportCurve:
    x = _vec(x, f.dim)
    v = _vec(v, f.dim)
    if isinstance(f, Affine):
        return _const_curve(float(f.a @ v))
    if isinstance(f, Quadratic):
        gv = float(f.gradient(x) @ v)
        q = float(v @ f.Q @ v)
        if q <= 1e-15:
            return _const_curve(gv)

        def am(lam, cap):
            return cap if lam <= 0 else min(cap, q / lam ** 2)
        return SupportCurve(lambda e: gv + 2.0 * math.sqrt(q * e), am)
    if isinstance(f, IndicatorOf) and contains(f.P, x):
        return _linear_curve(0.0, _max_step(f.P, x, v))
    if isinstance(f, AffinePlusBoxIndicator) and contains(f.box, x):
        return _linear_curve(float(f.a @ v), _max_step(f.box, x, v))
    if isinstance(f, Scale):
        if f.lam == 0.0:
            return _const_curve(0.0)
        inner = support_curve(f.f, x, v)
        lam0 = f.lam
        am = None
        if inner.argmax is not None:
            am = lambda lam, cap: lam0 * inner.argmax(lam, cap / lam0)  # noqa: E731
        return SupportCurve(lambda e: ext_mul(lam0, inner.sigma(e / lam0)), am)
    parts = f.polyhedral_parts()
    if parts is not None and math.isfinite(f.evaluate(x)):
        return _poly_curve(parts, x, v)
    return SupportCurve(lambda e: directional_support(f, x, v, e))


def has_closed_support(f: ConvexFunction, x, v, eps: float) -> bool:
    return f.support_closed(_vec(x, f.dim), _vec(v, f.dim), float(eps)) is not None


@dataclass(frozen=True)
class EpsSubdiffResult:
    set: Polyhedron
    exactness: str  # "closed-form" | "kernel-sampled"
    direction_count: int | None = None

    def to_json(self):
        return {"set": self.set.to_json(), "exactness": self.exactness,
                "direction_count": self.direction_count}


def direction_fan(count: int) -> np.ndarray:
    th = 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(th), np.sin(th)])


def set_from_supports(dirs: np.ndarray, values, dim: int) -> Polyhedron:
    """Outer polyhedron {y : <d_k, y> <= values_k} over finite values."""
    values = np.asarray(values, dtype=float)
    if np.any(values == -INF):
        return empty_set(dim)
    fin = np.isfinite(values)
    return from_halfspaces(dirs[fin], values[fin], dim)


def eps_subdifferential(f: ConvexFunction, x, eps: float,
                        directions: int = DEFAULT_DIRECTIONS_2D) -> EpsSubdiffResult:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    xv = _vec(x, f.dim)
    fx = f.evaluate(xv)
    if not math.isfinite(fx):
        return EpsSubdiffResult(empty_set(f.dim), "closed-form")
    exact = f.eps_set_closed(xv, float(eps))
    if exact is not None:
        return EpsSubdiffResult(exact, "closed-form")
    if f.dim == 1:
        ends = []
        for d in (np.array([1.0]), np.array([-1.0])):
            c = f.support_closed(xv, d, float(eps))
            ends.append(c[0] if c is not None else polyhedral_support(f, xv, d, float(eps)))
        closed = all(e is not None for e in ends)
        hi = ends[0] if ends[0] is not None else kernel_support(f, xv, [1.0], eps)
        lo = -(ends[1] if ends[1] is not None else kernel_support(f, xv, [-1.0], eps))
        return EpsSubdiffResult(interval(lo, hi), "closed-form" if closed else "kernel-sampled",
                                None if closed else 2)
    dirs = direction_fan(directions)
    vals = [directional_support(f, xv, d, eps) for d in dirs]
    return EpsSubdiffResult(set_from_supports(dirs, vals, 2), "kernel-sampled", directions)


def _lower_envelope_at(xs: np.ndarray, ys: np.ndarray, x: float) -> float:
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            cross = (xs[i2] - xs[i1]) * (ys[i] - ys[i1]) - (ys[i2] - ys[i1]) * (xs[i] - xs[i1])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return float(np.interp(x, xs[hull], ys[hull]))


def convexity_modulus(g: Callable[[float], float], x: float, window: tuple[float, float],
                      samples: int = 10001) -> float:
    """g(x) minus the lower convex envelope of g sampled on ``window``, at x."""
    lo, hi = window
    if not lo <= x <= hi:
        raise ValueError("x must lie in the window")
    xs = np.union1d(np.linspace(lo, hi, samples), [x])
    ys = np.array([g(t) for t in xs], dtype=float)
    if not np.all(np.isfinite(ys)):
        raise ValueError("g must be finite on the window")
    return max(0.0, float(g(x)) - _lower_envelope_at(xs, ys, x))


# --------------------------------------------------------------- JSON


def poly_from_json(data, dim, env):
    if "interval" in data:
        lo, hi = expr.evaluate_tree(data["interval"], env)
        return interval(-INF if lo is None else lo, INF if hi is None else hi)
    if data.get("empty"):
        return empty_set(dim)
    return make_polyhedron(expr.evaluate_tree(data.get("vertices", []), env),
                           expr.evaluate_tree(data.get("rays", []), env), dim=dim)


def _as_vec(value, env):
    v = expr.evaluate_tree(value, env)
    return np.atleast_1d(np.asarray(v, dtype=float))


def from_json(data: dict, env: dict | None = None, dim: int | None = None) -> ConvexFunction:
    """Build a function tree; numeric leaves may be expressions in ``env`` names (e.g. t)."""
    env = env or {}
    kind = data["type"]
    if kind == "affine":
        a = _as_vec(data["a"], env)
        return Affine(a, expr.evaluate(data.get("b", 0.0), env))
    if kind == "pl_max":
        sl = [_as_vec(p["a"], env) for p in data["pieces"]]
        off = [expr.evaluate(p.get("b", 0.0), env) for p in data["pieces"]]
        return PiecewiseLinearMax(np.array(sl), np.array(off))
    if kind == "abs":
        # |w.x - c| shorthand
        w = _as_vec(data.get("a", [1.0]), env)
        c = expr.evaluate(data.get("center", 0.0), env)
        k = expr.evaluate(data.get("weight", 1.0), env)
        return PiecewiseLinearMax(np.array([k * w, -k * w]), np.array([-k * c, k * c]))
    if kind == "quadratic":
        c = _as_vec(data.get("c", [0.0] * (dim or 1)), env)
        Q = np.asarray(expr.evaluate_tree(data["Q"], env), dtype=float).reshape(len(c), len(c))
        return Quadratic(Q, c, expr.evaluate(data.get("d", 0.0), env))
    if kind == "indicator":
        a_dim = dim or 1
        return IndicatorOf(poly_from_json(data["set"], a_dim, env))
    if kind == "affine_box":
        a = _as_vec(data["a"], env)
        return AffinePlusBoxIndicator(a, expr.evaluate(data.get("b", 0.0), env),
                                      poly_from_json(data["box"], len(a), env))
    if kind == "custom1d":
        lo, hi = expr.evaluate_tree(data.get("domain", [None, None]), env)
        params = {k: expr.evaluate(v, env) for k, v in data.get("params", {}).items()}
        return Custom1D(data["name"], -INF if lo is None else lo, INF if hi is None else hi, params)
    if kind == "sum":
        return Sum(tuple(from_json(t, env, dim) for t in data["terms"]))
    if kind == "scale":
        return Scale(expr.evaluate(data["lambda"], env), from_json(data["f"], env, dim))
    if kind == "restrict":
        inner = from_json(data["f"], env, dim)
        return RestrictTo(inner, poly_from_json(data["set"], inner.dim, env))
    raise ValueError(f"unknown function type {kind!r}")


def to_json(f: ConvexFunction) -> dict:
    return f.to_json()
