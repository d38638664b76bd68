import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subcalc.geometry import (
    INF, Polyhedron, contains, empty_set, ext_add, ext_mul, from_halfspaces, halfspaces,
    hausdorff_distance, intersect, interval, make_polyhedron, minkowski_sum, normal_cone_eps, point,
    recession_cone, relative_interior_contains, ri_point, scale, subset_of, support, whole_space,
)
from oracles import hull_vertices


def same_set(A, B, tol=1e-9):
    return subset_of(A, B, tol) and subset_of(B, A, tol)


class TestExtReal:
    def test_conventions(self):
        assert ext_add(INF, -INF) == INF
        assert ext_mul(0.0, INF) == 0.0
        assert ext_mul(-2.0, INF) == -INF


class TestMakePolyhedron:
    def test_point(self):
        P = make_polyhedron([[0.0]], [], dim=1)
        assert P.is_singleton

    def test_line_in_plane(self):
        P = make_polyhedron([[0.0, 0.0]], [[1, 0], [-1, 0]], dim=2)
        assert contains(P, [123.0, 0.0]) and not contains(P, [0.0, 1e-3])

    def test_interior_point_pruned(self):
        P = make_polyhedron([[0, 0], [1, 0], [0, 1], [0.5, 0.25]], [])
        assert len(P.vertices) == 3
        ref = hull_vertices([[0, 0], [1, 0], [0, 1], [0.5, 0.25]])
        assert {tuple(v) for v in P.vertices} == {tuple(v) for v in ref}

    def test_empty_vertex_list(self):
        assert make_polyhedron([], [], dim=2).empty

    def test_rejects_dim3(self):
        with pytest.raises(ValueError):
            make_polyhedron([[0, 0, 0]], [])

    def test_json_roundtrip(self):
        P = make_polyhedron([[0, 0], [1, 0]], [[0, 1]])
        Q = Polyhedron.from_json(P.to_json())
        assert same_set(P, Q)
        assert Polyhedron.from_json({"interval": [None, 2.0]}).vertices.tolist() == [[2.0]]


class TestSupport:
    def test_interval(self):
        assert support(interval(-1, 1), [1.0]) == 1.0

    def test_half_line(self):
        H = interval(-INF, 0.0)
        assert support(H, [1.0]) == 0.0
        assert support(H, [-1.0]) == INF

    def test_triangle(self):
        T = make_polyhedron([[0, 0], [1, 0], [0, 1]], [])
        assert support(T, [1, 1]) == pytest.approx(1.0)

    def test_empty_is_minus_inf(self):
        assert support(empty_set(1), [1.0]) == -INF

    def test_zero_direction_rejected(self):
        with pytest.raises(ValueError):
            support(interval(0, 1), [0.0])


class TestSetCalculus:
    def test_interval_sum(self):
        S = minkowski_sum(interval(0, 1), interval(2, 3))
        assert S.vertices.ravel().tolist() == [2.0, 4.0]

    def test_point_plus_cone(self):
        C = make_polyhedron([[0, 0]], [[1, 0], [0, 1]])
        S = minkowski_sum(point([1.0, 2.0]), C)
        assert same_set(S, make_polyhedron([[1, 2]], [[1, 0], [0, 1]]))

    def test_square_sum(self):
        sq = make_polyhedron([[0, 0], [1, 0], [1, 1], [0, 1]], [])
        S = minkowski_sum(sq, sq)
        assert same_set(S, make_polyhedron([[0, 0], [2, 0], [2, 2], [0, 2]], []))

    def test_intersections(self):
        assert intersect(interval(0, 2), interval(1, 3)).vertices.ravel().tolist() == [1.0, 2.0]
        assert intersect(interval(0, 1), interval(2, 3)).empty

    def test_wedge(self):
        A = from_halfspaces([[-1.0, 0.0]], [0.0], 2)
        B = from_halfspaces([[0.0, -1.0]], [0.0], 2)
        W = intersect(A, B)
        assert len(W.vertices) == 1 and len(W.rays) == 2
        for p in [(1, 1), (5, 0), (0, 3)]:
            assert contains(W, p)
        for p in [(-1, 1), (1, -0.01)]:
            assert not contains(W, p)

    def test_scale_and_whole(self):
        assert scale(interval(1, 2), 2).vertices.ravel().tolist() == [2.0, 4.0]
        assert scale(interval(1, 2), 0).vertices.ravel().tolist() == [0.0]
        with pytest.raises(ValueError):
            scale(interval(1, 2), -1)
        assert support(whole_space(2), [0.3, 0.4]) == INF


class TestNormalCone:
    def test_half_line(self):
        N = normal_cone_eps(interval(0, INF), [0.0], 0.0)
        assert same_set(N, interval(-INF, 0.0))

    @pytest.mark.parametrize("eta,eps", [(0.5, 0.1), (1.0, 0.9), (0.01, 0.3)])
    def test_box_eps(self, eta, eps):
        N = normal_cone_eps(interval(-eta, eta), [0.0], eps)
        lo, hi = N.vertices.ravel()
        assert lo == pytest.approx(-eps / eta, abs=1e-12) and hi == pytest.approx(eps / eta, abs=1e-12)

    def test_square_corner(self):
        sq = make_polyhedron([[0, 0], [1, 0], [1, 1], [0, 1]], [])
        N = normal_cone_eps(sq, [1.0, 1.0], 0.0)
        assert same_set(N, make_polyhedron([[0, 0]], [[1, 0], [0, 1]]))

    def test_outside_is_empty(self):
        assert normal_cone_eps(interval(0, 1), [2.0], 0.5).empty


class TestRecessionAndDistance:
    def test_recession(self):
        assert same_set(recession_cone(interval(-1, 4)), point([0.0]))
        assert same_set(recession_cone(interval(0, INF)), interval(0, INF))
        V = make_polyhedron([[0, 0]], [[1, 1], [-1, 1]])
        assert same_set(recession_cone(V), V)

    def test_empty_recession_rejected(self):
        with pytest.raises(ValueError):
            recession_cone(empty_set(1))

    def test_hausdorff_examples(self):
        assert hausdorff_distance(interval(0, 1), interval(0, 1)).distance == 0.0
        assert hausdorff_distance(interval(0, 1), interval(0, 2), 10).distance == pytest.approx(1.0)
        h = hausdorff_distance(interval(-INF, 0), interval(-INF, 1), 10)
        assert h.distance == pytest.approx(1.0) and h.cones_equal
        assert hausdorff_distance(empty_set(1), interval(0, 1)).status == "empty-operand"

    def test_relative_interior(self):
        assert relative_interior_contains(interval(0, 1), [0.5])
        assert not relative_interior_contains(interval(0, 1), [0.0])
        assert relative_interior_contains(point([0.0]), [0.0])
        seg = make_polyhedron([[0, 0], [1, 1]], [])
        assert relative_interior_contains(seg, [0.5, 0.5])
        tri = make_polyhedron([[0, 0], [3, 0], [0, 3]], [])
        assert contains(tri, [1.0, 1.0]) and not contains(empty_set(1), [0.0])
        assert contains(tri, ri_point(tri))


# ---------------------------------------------------------------- properties

coord = st.floats(-5, 5, allow_nan=False)
pts2 = st.lists(st.tuples(coord, coord), min_size=1, max_size=6)
dirs2 = st.lists(st.sampled_from([(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 2)]), max_size=2, unique=True)


@st.composite
def polys(draw):
    return make_polyhedron(draw(pts2), draw(dirs2), dim=2)


unit = st.floats(0, 2 * math.pi).map(lambda a: np.array([math.cos(a), math.sin(a)]))


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), unit)
def test_minkowski_support_additive(A, B, v):
    lhs = support(minkowski_sum(A, B), v)
    rhs = ext_add(support(A, v), support(B, v))
    if math.isinf(rhs):
        assert lhs == rhs
    else:
        assert lhs == pytest.approx(rhs, abs=1e-7 * (1 + abs(rhs)))


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), st.integers(0, 2**31 - 1))
def test_intersection_is_subset(A, B, seed):
    C = intersect(A, B)
    if C.empty:
        return
    rng = np.random.default_rng(seed)
    V = C.vertices
    for _ in range(100):
        lam = rng.dirichlet(np.ones(len(V)))
        p = lam @ V
        if len(C.rays):
            p = p + rng.uniform(0, 3, len(C.rays)) @ C.rays
        assert contains(A, p, 1e-6) and contains(B, p, 1e-6)


@settings(max_examples=40, deadline=None)
@given(polys())
def test_canonical_idempotent(P):
    Q = make_polyhedron(P.vertices, P.rays, dim=2)
    assert np.allclose(Q.vertices, P.vertices) and np.allclose(Q.rays, P.rays)


@settings(max_examples=40, deadline=None)
@given(polys())
def test_h_v_roundtrip(P):
    A, b = halfspaces(P)
    assert same_set(from_halfspaces(A, b, 2), P, 1e-6)


@settings(max_examples=40, deadline=None)
@given(polys(), polys())
def test_recession_of_sum(A, B):
    lhs = recession_cone(minkowski_sum(A, B))
    rhs = minkowski_sum(recession_cone(A), recession_cone(B))
    assert same_set(lhs, rhs, 1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 3), st.floats(0, 2), st.floats(0, 2))
def test_normal_cone_monotone(c, r, e1, e2):
    x = [c]
    small, big = interval(c - r, c + r), interval(c - 2 * r, c + 2 * r)
    lo, hi = sorted((e1, e2))
    assert subset_of(normal_cone_eps(big, x, lo), normal_cone_eps(small, x, lo))
    assert subset_of(normal_cone_eps(small, x, lo), normal_cone_eps(small, x, hi))


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), polys())
def test_hausdorff_pseudometric(A, B, C):
    R = 50.0
    dab = hausdorff_distance(A, B, R)
    dba = hausdorff_distance(B, A, R)
    assert dab.distance == pytest.approx(dba.distance, abs=1e-9)
    if all(h.status == "ok" for h in (dab, hausdorff_distance(B, C, R), hausdorff_distance(A, C, R))):
        assert hausdorff_distance(A, C, R).distance <= dab.distance + hausdorff_distance(B, C, R).distance + 1e-9


def test_large_halfspace_system_fast():
    import time
    th = 2 * np.pi * np.arange(720) / 720
    D = np.column_stack([np.cos(th), np.sin(th)])
    t0 = time.perf_counter()
    P = from_halfspaces(D, np.ones(720), 2)
    assert time.perf_counter() - t0 < 1.0
    assert len(P.vertices) == 720
    seg = from_halfspaces(D, D @ np.array([2.0, 0.0]) + np.abs(D[:, 1]), 2)
    assert same_set(seg, make_polyhedron([[2, -1], [2, 1]], []), 1e-9)
