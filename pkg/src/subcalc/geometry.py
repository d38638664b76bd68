"""Polyhedral convex sets in R^1 and R^2.

Every set is stored in V-representation (``vertices`` plus recession
``rays``) and kept canonical: vertices are extreme points, rays are unit
vectors deduplicated up to positive scaling.  Sets with a lineality space
(lines, strips, half-planes, the whole plane) keep their lineality as
pairs of opposite rays and store vertices projected onto its orthogonal
complement.

Extended reals are plain floats with ``math.inf``; ``ext_add`` and
``ext_mul`` implement the conventions ``inf + (-inf) = inf`` and
``0 * inf = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9
ANG_TOL = 1e-9
INF = math.inf

__all__ = [
    "TOL", "INF", "Polyhedron", "HausdorffResult", "ext_add", "ext_mul",
    "make_polyhedron", "empty_set", "point", "interval", "whole_space",
    "box", "subspace", "from_halfspaces", "halfspaces", "support",
    "minkowski_sum", "intersect", "normal_cone_eps", "recession_cone",
    "hausdorff_distance", "relative_interior_contains", "contains",
    "scale", "translate", "negate", "affine_hull", "orthogonal_complement",
    "ri_point", "cone_contains", "subset_of",
]


def ext_add(a: float, b: float) -> float:
    if a == INF or b == INF:
        return INF
    return a + b


def ext_mul(lam: float, a: float) -> float:
    if lam == 0.0 or a == 0.0:
        return 0.0
    return lam * a


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """conv(vertices) + cone(rays); build through :func:`make_polyhedron`."""

    dim: int
    vertices: np.ndarray
    rays: np.ndarray
    empty: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_bounded(self) -> bool:
        return self.empty or len(self.rays) == 0

    @property
    def is_singleton(self) -> bool:
        return not self.empty and len(self.rays) == 0 and len(self.vertices) == 1

    def to_json(self) -> dict:
        return {
            "vertices": [[float(c) for c in v] for v in self.vertices],
            "rays": [[float(c) for c in r] for r in self.rays],
            "empty": bool(self.empty),
        }

    @classmethod
    def from_json(cls, data: dict, dim: int | None = None) -> "Polyhedron":
        if "interval" in data:
            lo, hi = data["interval"]
            return interval(-INF if lo is None else float(lo), INF if hi is None else float(hi))
        if data.get("empty"):
            if dim is None:
                raise ValueError("empty set needs an explicit dimension")
            return empty_set(dim)
        verts = data.get("vertices", [])
        d = dim if dim is not None else (len(verts[0]) if verts else None)
        if d is None:
            raise ValueError("cannot infer dimension of polyhedron")
        return make_polyhedron(verts, data.get("rays", []), dim=d)

    def __repr__(self) -> str:
        if self.empty:
            return f"Polyhedron(dim={self.dim}, empty)"
        if self.dim == 1:
            lo, hi = _interval(self)
            return f"Polyhedron([{lo:g}, {hi:g}])"
        return f"Polyhedron(vertices={self.vertices.tolist()}, rays={self.rays.tolist()})"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _raw(dim: int, vertices, rays, empty=False) -> Polyhedron:
    # "+ 0.0" folds negative zeros so serialized output is stable
    v = np.asarray(vertices, dtype=float).reshape(-1, dim) + 0.0
    r = np.asarray(rays, dtype=float).reshape(-1, dim) + 0.0
    return Polyhedron(dim, _frozen(v), _frozen(r), empty)


def empty_set(dim: int) -> Polyhedron:
    return _raw(dim, np.zeros((0, dim)), np.zeros((0, dim)), empty=True)


def point(x: Sequence[float] | float) -> Polyhedron:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _raw(len(x), [x], [])


def interval(lo: float, hi: float) -> Polyhedron:
    """The closed interval [lo, hi] of R (endpoints may be infinite)."""
    if lo > hi + TOL * max(1.0, abs(lo) if math.isfinite(lo) else 1.0):
        return empty_set(1)
    if lo == INF or hi == -INF:
        return empty_set(1)
    rays = []
    if lo == -INF:
        rays.append([-1.0])
    if hi == INF:
        rays.append([1.0])
    if lo == -INF and hi == INF:
        verts = [[0.0]]
    elif lo == -INF:
        verts = [[hi]]
    elif hi == INF:
        verts = [[lo]]
    elif hi - lo <= TOL * max(1.0, abs(lo)):
        verts = [[lo]]
    else:
        verts = [[lo], [hi]]
    return _raw(1, verts, rays)


def whole_space(dim: int) -> Polyhedron:
    return make_polyhedron([np.zeros(dim)], np.vstack([np.eye(dim), -np.eye(dim)]), dim=dim)


def box(radius: float, dim: int) -> Polyhedron:
    if dim == 1:
        return interval(-radius, radius)
    c = [[-radius, -radius], [radius, -radius], [radius, radius], [-radius, radius]]
    return make_polyhedron(c, [], dim=2)


def subspace(basis: Iterable[Sequence[float]], dim: int, origin=None) -> Polyhedron:
    """Affine set origin + span(basis)."""
    basis = [np.asarray(b, dtype=float) for b in basis]
    o = np.zeros(dim) if origin is None else np.asarray(origin, dtype=float)
    rays = [b for b in basis] + [-b for b in basis]
    return make_polyhedron([o], rays, dim=dim)


def _interval(P: Polyhedron) -> tuple[float, float]:
    if P.empty:
        return INF, -INF
    lo = -INF if np.any(P.rays[:, 0] < 0) else float(P.vertices[:, 0].min())
    hi = INF if np.any(P.rays[:, 0] > 0) else float(P.vertices[:, 0].max())
    return lo, hi


def _perp(d: np.ndarray) -> np.ndarray:
    return np.array([-d[1], d[0]])


def _unit_rays(rays: np.ndarray) -> np.ndarray:
    if len(rays) == 0:
        return rays
    norms = np.linalg.norm(rays, axis=1)
    keep = norms > 1e-12
    rays = rays[keep] / norms[keep, None]
    out: list[np.ndarray] = []
    for r in rays:
        if not any(np.linalg.norm(r - q) <= ANG_TOL for q in out):
            out.append(r)
    return np.array(out).reshape(-1, rays.shape[1])


def _dedupe_points(pts: np.ndarray) -> np.ndarray:
    keep: list[int] = []
    for i, p in enumerate(pts):
        scale = max(1.0, float(np.abs(p).max()))
        if keep and np.any(np.abs(pts[keep] - p).max(axis=1) <= TOL * scale):
            continue
        keep.append(i)
    return pts[keep].reshape(-1, pts.shape[1])


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_indices(pts: np.ndarray) -> list[int]:
    """Monotone-chain hull; CCW indices without collinear points."""
    n = len(pts)
    if n <= 1:
        return list(range(n))
    # collinear within tolerance: x-order need not follow the line, so project
    D = pts - pts.mean(axis=0)
    _, s, vt = np.linalg.svd(D, full_matrices=False)
    if s[-1] <= TOL * max(1.0, float(np.abs(pts).max())):
        t = D @ vt[0]
        i, j = int(np.argmin(t)), int(np.argmax(t))
        return [i] if t[j] - t[i] <= TOL * max(1.0, float(np.abs(pts).max())) else [i, j]
    # orientation tests run on a tolerance grid so sub-TOL offsets cannot reorder the chain
    h = TOL * max(1.0, float(np.abs(pts).max()))
    pts = np.round(pts / h) * h
    order = sorted(range(n), key=lambda i: (pts[i][0], pts[i][1]))

    def build(seq):
        chain: list[int] = []
        for i in seq:
            while len(chain) >= 2:
                o, a = pts[chain[-2]], pts[chain[-1]]
                base = float(np.hypot(*(a - o)))
                if _cross(o, a, pts[i]) <= TOL * max(1.0, base):
                    chain.pop()
                else:
                    break
            chain.append(i)
        return chain

    lower = build(order)
    upper = build(reversed(order))
    hull = lower[:-1] + upper[:-1]
    if not hull:
        hull = [order[0]]
    # a fully degenerate input collapses to its two extremes
    out: list[int] = []
    for i in hull:
        if i not in out:
            out.append(i)
    return out


def _classify_cone(rays: np.ndarray):
    """Return (kind, generators) for cone(rays) in R^2.

    kind is one of 'pointed', 'line', 'halfplane', 'plane'.  For 'line'
    and 'halfplane' generators are (d, -d[, n]) with n the inward normal.
    """
    m = len(rays)
    if m <= 1:
        return "pointed", rays
    ang = np.arctan2(rays[:, 1], rays[:, 0])
    order = np.argsort(ang)
    ang = ang[order]
    rs = rays[order]
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    j = int(np.argmax(gaps))
    gmax = gaps[j]
    if gmax > math.pi + ANG_TOL:
        a, b = rs[j], rs[(j + 1) % m]
        gens = np.array([b, a]) if np.linalg.norm(a - b) > ANG_TOL else np.array([a])
        return "pointed", gens
    if gmax >= math.pi - ANG_TOL:
        d = rs[j]
        n = _perp(d)
        # rays strictly on one side give the half-plane's inward normal
        side = rs @ n
        if np.any(np.abs(side) > ANG_TOL):
            sgn = 1.0 if side[np.argmax(np.abs(side))] > 0 else -1.0
            return "halfplane", np.array([d, -d, sgn * n])
        return "line", np.array([d, -d])
    return "plane", np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])


def make_polyhedron(vertices, rays, dim: int | None = None) -> Polyhedron:
    """Canonical polyhedron conv(vertices) + cone(rays).

    No vertices means the empty set, whatever the rays.
    """
    V = np.asarray(vertices, dtype=float)
    R = np.asarray(rays, dtype=float)
    if dim is None:
        if V.size:
            dim = V.shape[-1] if V.ndim > 1 else 1
        elif R.size:
            dim = R.shape[-1] if R.ndim > 1 else 1
        else:
            raise ValueError("cannot infer dimension of an empty vertex list")
    if dim not in (1, 2):
        raise ValueError(f"dimension {dim} not supported (1 or 2 only)")
    V = V.reshape(-1, dim)
    R = R.reshape(-1, dim)
    if len(V) == 0:
        return empty_set(dim)
    if not np.all(np.isfinite(V)) or not np.all(np.isfinite(R)):
        raise ValueError("vertices and rays must be finite")
    if dim == 1:
        has_pos = bool(np.any(R[:, 0] > 1e-12))
        has_neg = bool(np.any(R[:, 0] < -1e-12))
        lo = -INF if has_neg else float(V[:, 0].min())
        hi = INF if has_pos else float(V[:, 0].max())
        return interval(lo, hi)

    R = _unit_rays(R)
    kind, gens = _classify_cone(R)
    if kind == "plane":
        return _raw(2, [[0.0, 0.0]], gens)
    if kind in ("line", "halfplane"):
        d = gens[0]
        n = _perp(d) if kind == "line" else gens[2]
        s = V @ n
        lo, hi = float(s.min()), float(s.max())
        if kind == "halfplane":
            return _raw(2, [lo * n], gens)
        if hi - lo <= TOL * max(1.0, abs(lo), abs(hi)):
            verts = [lo * n]
        else:
            verts = [lo * n, hi * n]
        return _raw(2, verts, gens)

    V = _dedupe_points(V)
    k = len(V)
    W = np.vstack([V] + [V + g for g in gens]) if len(gens) else V
    hull = _hull_indices(W)
    verts = [V[i] for i in hull if i < k]
    if not verts:
        # every extreme candidate coincided with a shifted copy; fall back
        verts = [V[hull[0] % k]]
    return _raw(2, verts, gens)


# ---------------------------------------------------------------- H <-> V


def _affine_frame(P: Polyhedron) -> tuple[np.ndarray, np.ndarray]:
    """Base point and orthonormal basis (rows) of the direction space of aff(P)."""
    W = np.vstack([P.vertices] + [P.vertices[:1] + r for r in P.rays])
    base = P.vertices[0]
    D = W - base
    if len(D) <= 1 or np.abs(D).max() == 0.0:
        return base, np.zeros((0, P.dim))
    scale = max(1.0, float(np.abs(D).max()))
    _, s, vt = np.linalg.svd(D, full_matrices=False)
    rank = int(np.sum(s > TOL * scale))
    return base, vt[:rank]


def halfspaces(P: Polyhedron) -> tuple[np.ndarray, np.ndarray]:
    """Unit-normal inequalities A x <= b describing a nonempty P."""
    if P.empty:
        raise ValueError("empty set has no H-representation here")
    if "H" not in P._cache:
        P._cache["H"] = _halfspaces(P)
    return P._cache["H"]


def _halfspaces(P: Polyhedron) -> tuple[np.ndarray, np.ndarray]:
    n = P.dim
    if n == 1:
        lo, hi = _interval(P)
        A, b = [], []
        if hi < INF:
            A.append([1.0]); b.append(hi)
        if lo > -INF:
            A.append([-1.0]); b.append(-lo)
        return np.array(A).reshape(-1, 1), np.array(b, dtype=float)
    base, basis = _affine_frame(P)
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    if len(basis) == 0:
        for e in np.vstack([np.eye(2), -np.eye(2)]):
            rows.append(e); rhs.append(float(e @ base))
    elif len(basis) == 1:
        d = basis[0]
        nrm = _perp(d)
        for e in (nrm, -nrm):
            rows.append(e); rhs.append(float(e @ base))
        for e in (d, -d):
            s = support(P, e)
            if s < INF:
                rows.append(e); rhs.append(s)
    else:
        W = np.vstack([P.vertices] + [P.vertices + r for r in P.rays])
        hull = _hull_indices(W)
        for i in range(len(hull)):
            p, q = W[hull[i]], W[hull[(i + 1) % len(hull)]]
            e = q - p
            L = float(np.hypot(*e))
            if L == 0.0:
                continue
            nrm = np.array([e[1], -e[0]]) / L
            s = support(P, nrm)
            if s < INF:
                rows.append(nrm); rhs.append(s)
    return np.array(rows).reshape(-1, n), np.array(rhs, dtype=float)


def _feasible(A, b, x, tol=TOL) -> bool:
    if len(A) == 0:
        return True
    slack = A @ x - b
    return bool(np.all(slack <= tol * (1.0 + np.abs(b) + np.abs(A) @ np.abs(x))))


def _clip_active_rows(A: np.ndarray, b: np.ndarray, radius: float) -> list[int] | None:
    """Rows supporting edges of {Ax<=b} clipped to a large box; None if empty."""
    P = np.array([[-radius, -radius], [radius, -radius], [radius, radius], [-radius, radius]], dtype=float)
    lab = np.full(4, -1)
    for i, (a, bi) in enumerate(zip(A, b)):
        f = P @ a - bi
        inside = f <= TOL * (1.0 + abs(bi) + np.abs(P) @ np.abs(a))
        if inside.all():
            continue
        if not inside.any():
            return None
        Q, fq, q_in = np.roll(P, -1, axis=0), np.roll(f, -1), np.roll(inside, -1)
        cross = inside != q_in
        with np.errstate(divide="ignore", invalid="ignore"):
            X = P + (Q - P) * (f / (f - fq))[:, None]
        # each edge p->q emits p when p is inside, then the crossing point if any
        pts = np.stack([P, X], axis=1)
        labs = np.stack([lab, np.where(inside, i, lab)], axis=1)
        mask = np.stack([inside, cross], axis=1)
        P, lab = pts[mask], labs[mask]
    return sorted({int(v) for v in lab if v >= 0})


def from_halfspaces(A, b, dim: int) -> Polyhedron:
    """Exact V-representation of {x : A x <= b}."""
    A = np.asarray(A, dtype=float).reshape(-1, dim)
    b = np.asarray(b, dtype=float).reshape(-1)
    norms = np.linalg.norm(A, axis=1)
    zero = norms <= 1e-14
    if np.any(b[zero] < -TOL * (1.0 + np.abs(b[zero]))):
        return empty_set(dim)
    A = A[~zero] / norms[~zero, None]
    b = b[~zero] / norms[~zero]
    finite = np.isfinite(b)
    if np.any(b == -INF):
        return empty_set(dim)
    A, b = A[finite], b[finite]
    if len(A) == 0:
        return whole_space(dim)
    if dim == 1:
        lo, hi = -INF, INF
        for a, bi in zip(A[:, 0], b):
            if a > 0:
                hi = min(hi, bi / a)
            else:
                lo = max(lo, bi / a)
        return interval(lo, hi)

    m = len(A)
    rows = np.arange(m)
    if m > 48:
        active = _clip_active_rows(A, b, radius=1e7 * (1.0 + float(np.abs(b).max())))
        if active is None:
            return empty_set(2)
        rows = np.array(active, dtype=int)

    Ar, br = A[rows], b[rows]
    k = len(rows)
    if k > 12:
        # vertices of a planar polygon join constraints adjacent in normal angle
        order = np.argsort(np.arctan2(Ar[:, 1], Ar[:, 0]))
        pairs = np.array([(order[i], order[(i + d) % k]) for i in range(k) for d in (1, 2, 3)])
    else:
        pairs = np.array([(i, j) for i in range(k) for j in range(i + 1, k)]).reshape(-1, 2)
    verts = []
    if len(pairs):
        a1, a2 = Ar[pairs[:, 0]], Ar[pairs[:, 1]]
        det = a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]
        ok = np.abs(det) > 1e-12
        b1, b2 = br[pairs[ok, 0]], br[pairs[ok, 1]]
        a1, a2, det = a1[ok], a2[ok], det[ok]
        X = np.column_stack([(b1 * a2[:, 1] - b2 * a1[:, 1]) / det, (a1[:, 0] * b2 - a2[:, 0] * b1) / det])
        if len(X):
            slack = X @ A.T - b
            lim = TOL * (1.0 + np.abs(b)[None, :] + np.abs(X) @ np.abs(A).T)
            verts = list(X[np.all(slack <= lim, axis=1)])
    cands = np.vstack([np.array([_perp(a), -_perp(a), -a]) for a in A])
    ok = np.all(cands @ A.T <= 1e-12, axis=1)
    rays = cands[ok]
    if not verts:
        for a, bi in zip(Ar, br):
            foot = a * bi
            if _feasible(A, b, foot):
                verts.append(foot)
    if not verts:
        return empty_set(2)
    return make_polyhedron(verts, rays, dim=2)


# ---------------------------------------------------------------- set calculus


def support(S: Polyhedron, v) -> float:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if not np.any(v):
        raise ValueError("support direction must be nonzero")
    if S.empty:
        return -INF
    if len(S.rays) and np.any(S.rays @ v > 1e-12 * float(np.linalg.norm(v))):
        return INF
    return float((S.vertices @ v).max())


def minkowski_sum(A: Polyhedron, B: Polyhedron) -> Polyhedron:
    if A.dim != B.dim:
        raise ValueError("dimension mismatch")
    if A.empty or B.empty:
        return empty_set(A.dim)
    V = (A.vertices[:, None, :] + B.vertices[None, :, :]).reshape(-1, A.dim)
    R = np.vstack([A.rays, B.rays])
    return make_polyhedron(V, R, dim=A.dim)


def intersect(A: Polyhedron, B: Polyhedron) -> Polyhedron:
    if A.dim != B.dim:
        raise ValueError("dimension mismatch")
    if A.empty or B.empty:
        return empty_set(A.dim)
    if A.dim == 1:
        la, ha = _interval(A)
        lb, hb = _interval(B)
        return interval(max(la, lb), min(ha, hb))
    Aa, ba = halfspaces(A)
    Ab, bb = halfspaces(B)
    return from_halfspaces(np.vstack([Aa, Ab]), np.concatenate([ba, bb]), 2)


def scale(P: Polyhedron, lam: float) -> Polyhedron:
    """lam * P for lam >= 0 (0 * P = {0} for nonempty P)."""
    if lam < 0:
        raise ValueError("scale factor must be nonnegative")
    if P.empty:
        return P
    if lam == 0.0:
        return point(np.zeros(P.dim))
    return make_polyhedron(P.vertices * lam, P.rays, dim=P.dim)


def translate(P: Polyhedron, x) -> Polyhedron:
    if P.empty:
        return P
    return make_polyhedron(P.vertices + np.asarray(x, dtype=float), P.rays, dim=P.dim)


def negate(P: Polyhedron) -> Polyhedron:
    if P.empty:
        return P
    return make_polyhedron(-P.vertices, -P.rays, dim=P.dim)


def contains(A: Polyhedron, x, tol: float = TOL) -> bool:
    if A.empty:
        return False
    x = np.atleast_1d(np.asarray(x, dtype=float))
    H, h = halfspaces(A)
    if len(H) == 0:
        return True
    return bool(np.all(H @ x - h <= tol * (1.0 + np.abs(h))))


def normal_cone_eps(A: Polyhedron, x, eps: float) -> Polyhedron:
    """{x* : <x*, y - x> <= eps for all y in A}; empty when x is not in A."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not contains(A, x):
        return empty_set(len(x))
    rows = np.vstack([A.vertices - x, A.rays])
    rhs = np.concatenate([np.full(len(A.vertices), float(eps)), np.zeros(len(A.rays))])
    return from_halfspaces(rows, rhs, A.dim)


def recession_cone(A: Polyhedron) -> Polyhedron:
    if A.empty:
        raise ValueError("recession cone of the empty set is undefined")
    return make_polyhedron([np.zeros(A.dim)], A.rays, dim=A.dim)


def cone_contains(C: Polyhedron, d, tol: float = 1e-7) -> bool:
    """Membership of a direction in a cone given by its generators."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if not np.any(d):
        return True
    return contains(C, d / np.linalg.norm(d), tol)


def subset_of(A: Polyhedron, B: Polyhedron, tol: float = 1e-7) -> bool:
    """A subseteq B, decided from generators of A."""
    if A.empty:
        return True
    if B.empty:
        return False
    recB = recession_cone(B)
    return (all(contains(B, v, tol) for v in A.vertices)
            and all(cone_contains(recB, r, tol) for r in A.rays))


@dataclass(frozen=True)
class HausdorffResult:
    distance: float
    cones_equal: bool
    status: str  # "ok" | "empty-operand" | "outside-box" | "both-outside-box"

    def __float__(self) -> float:
        return self.distance


def _points_set_distance(pts: np.ndarray, P: Polyhedron) -> np.ndarray:
    """Distances from each row of ``pts`` to the bounded polyhedron P."""
    pts = np.asarray(pts, dtype=float).reshape(-1, P.dim)
    if P.dim == 1:
        lo, hi = _interval(P)
        return np.maximum(np.maximum(lo - pts[:, 0], pts[:, 0] - hi), 0.0)
    V = P.vertices
    if len(V) == 1:
        return np.linalg.norm(pts - V[0], axis=1)
    A, b = halfspaces(P)
    inside = np.all(pts @ A.T - b <= 1e-12 * (1.0 + np.abs(b)), axis=1) if len(A) else np.ones(len(pts), bool)
    a = V
    e = np.roll(V, -1, axis=0) - V
    L2 = np.einsum("ij,ij->i", e, e)
    rel = pts[:, None, :] - a[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(L2 > 0, np.einsum("nij,ij->ni", rel, e) / L2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    d = np.linalg.norm(rel - t[:, :, None] * e[None, :, :], axis=2).min(axis=1)
    return np.where(inside, 0.0, d)


def hausdorff_distance(A: Polyhedron, B: Polyhedron, box_radius: float = 1e3) -> HausdorffResult:
    """Hausdorff distance between truncations to [-R, R]^n, plus cone equality."""
    if A.empty or B.empty:
        return HausdorffResult(INF, False, "empty-operand")
    ca, cb = recession_cone(A), recession_cone(B)
    cones_equal = subset_of(ca, cb) and subset_of(cb, ca)
    bx = box(box_radius, A.dim)
    At, Bt = intersect(A, bx), intersect(B, bx)
    if At.empty and Bt.empty:
        return HausdorffResult(0.0, cones_equal, "both-outside-box")
    if At.empty or Bt.empty:
        return HausdorffResult(INF, cones_equal, "outside-box")
    d1 = float(_points_set_distance(At.vertices, Bt).max())
    d2 = float(_points_set_distance(Bt.vertices, At).max())
    return HausdorffResult(max(d1, d2), cones_equal, "ok")


def affine_hull(P: Polyhedron) -> Polyhedron:
    if P.empty:
        return P
    base, basis = _affine_frame(P)
    return subspace(basis, P.dim, origin=base)


def orthogonal_complement(basis: np.ndarray, dim: int) -> Polyhedron:
    """The linear subspace orthogonal to span(basis), as a polyhedron."""
    basis = np.asarray(basis, dtype=float).reshape(-1, dim)
    if len(basis) == 0:
        return whole_space(dim)
    _, s, vt = np.linalg.svd(basis)
    rank = int(np.sum(s > TOL))
    return subspace(vt[rank:], dim)


def ri_point(P: Polyhedron) -> np.ndarray:
    """A point of the relative interior of a nonempty P."""
    if P.empty:
        raise ValueError("empty set has no relative interior point")
    return P.vertices.mean(axis=0) + (P.rays.sum(axis=0) if len(P.rays) else 0.0)


def relative_interior_contains(A: Polyhedron, x) -> bool:
    if A.empty:
        return False
    x = np.atleast_1d(np.asarray(x, dtype=float))
    base, basis = _affine_frame(A)
    scale_ = max(1.0, float(np.abs(x).max()))
    if len(basis) == 0:
        return bool(np.abs(x - base).max() <= TOL * scale_)
    if A.dim == 1:
        lo, hi = _interval(A)
        return bool(x[0] - lo > TOL * scale_ and hi - x[0] > TOL * scale_)
    if len(basis) == 1:
        d = basis[0]
        if abs(float(_perp(d) @ (x - base))) > TOL * scale_:
            return False
        hi, lo = support(A, d), -support(A, -d)
        s = float(d @ x)
        return bool(s - lo > TOL * scale_ and hi - s > TOL * scale_)
    H, h = halfspaces(A)
    return bool(np.all(H @ x < h - TOL * (1.0 + np.abs(h))))
