import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subcalc import measure as ms
from subcalc.functions import (
    AffinePlusBoxIndicator, PiecewiseLinearMax, Quadratic, eps_subdifferential,
)
from subcalc.geometry import (
    INF, contains, interval, make_polyhedron, minkowski_sum, normal_cone_eps, point, subset_of, support,
)
from subcalc.integral import (
    OracleGrid, SetWithStatus, aumann_integral, aumann_of_subdifferentials, domain_of_integral,
    eps_certificate_decomposition, integral_value, oracle_eps_subdiff, restricted_family,
)
from families import abs_family, discrete, affine_box_family, quad_over_t
from oracles import quad


def ends(P):
    return -support(P, [-1.0]), support(P, [1.0])


class TestIntegralValue:
    def test_example(self):
        F = affine_box_family()
        assert integral_value(F, [0.0]) == pytest.approx(3.0, abs=1e-9)
        assert integral_value(F, [0.2]) == INF

    def test_quadratic_over_t(self):
        F = quad_over_t()
        assert integral_value(F, [0.0]) == 0.0
        assert integral_value(F, [0.1]) == INF

    @pytest.mark.parametrize("x", [0.0, 0.3, 0.5, 1.0])
    def test_abs_family(self, x):
        ref = quad(lambda t: abs(x - t), 0, x) + quad(lambda t: abs(x - t), x, 1) if 0 < x < 1 else \
            quad(lambda t: abs(x - t), 0, 1)
        assert integral_value(abs_family().at([x]), [x]) == pytest.approx(ref, abs=1e-9)


class TestDomain:
    def test_declared(self):
        d = domain_of_integral(affine_box_family())
        assert d.source == "declared" and d.set.is_singleton

    def test_probed_point(self):
        d = domain_of_integral(quad_over_t())
        assert d.set.is_singleton and float(d.set.vertices[0, 0]) == pytest.approx(0.0, abs=1e-9)

    def test_whole_line(self):
        d = domain_of_integral(abs_family())
        assert ends(d.set) == (-INF, INF)

    def test_discrete_intersection(self):
        F = discrete([AffinePlusBoxIndicator([0.0], 0.0, interval(-1, 2)),
                      AffinePlusBoxIndicator([0.0], 0.0, interval(0, 3))], [1.0, 1.0])
        d = domain_of_integral(F)
        assert d.exact and ends(d.set) == (0.0, 2.0)

    def test_empty(self):
        F = discrete([AffinePlusBoxIndicator([0.0], 0.0, interval(-1, 0)),
                      AffinePlusBoxIndicator([0.0], 0.0, interval(1, 3))], [1.0, 1.0])
        assert domain_of_integral(F).set.empty


class TestOracle:
    def test_indicator_of_point_gives_line(self):
        for F in (affine_box_family(256), quad_over_t()):
            assert ends(oracle_eps_subdiff(F, [0.0], 0.0)) == (-INF, INF)
            assert ends(oracle_eps_subdiff(F, [0.0], 0.7)) == (-INF, INF)

    @pytest.mark.parametrize("x", [0.25, 0.5, 0.8])
    def test_abs_family_median(self, x):
        F = abs_family()
        lo, hi = ends(oracle_eps_subdiff(F, [x], 0.0))
        # probes are 0.025 apart and I_f has curvature 2 on [0, 1]
        assert lo <= 2 * x - 1 + 1e-9 <= hi + 2e-9 and hi - lo <= 0.051

    def test_smooth_singleton_within_grid(self):
        F = discrete([Quadratic([[1.0]], [0.0])], [1.0])
        lo, hi = ends(oracle_eps_subdiff(F, [0.5], 0.0, OracleGrid(points_1d=20001)))
        assert lo == pytest.approx(1.0, abs=1e-3) and hi == pytest.approx(1.0, abs=1e-3)

    def test_infinite_value_empty(self):
        assert oracle_eps_subdiff(quad_over_t(), [0.5], 0.1).empty

    @settings(max_examples=15, deadline=None)
    @given(st.floats(-1, 2), st.floats(0, 1), st.floats(0, 1))
    def test_monotone_in_eps(self, x, e1, e2):
        F = discrete([PiecewiseLinearMax([[1.0], [-1.0]], [0.0, 0.0]), Quadratic([[0.5]], [0.3])], [1.0, 2.0])
        lo, hi = sorted((e1, e2))
        assert subset_of(oracle_eps_subdiff(F, [x], lo), oracle_eps_subdiff(F, [x], hi), 1e-9)

    def test_refinement_shrinks(self):
        F = discrete([Quadratic([[1.0]], [0.0])], [1.0])
        coarse = oracle_eps_subdiff(F, [0.3], 0.01, OracleGrid(points_1d=11))
        fine = oracle_eps_subdiff(F, [0.3], 0.01, OracleGrid(points_1d=101))
        assert subset_of(fine, coarse, 1e-9)


class TestAumann:
    @pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
    def test_example_empty(self, eps):
        F = affine_box_family()
        res = aumann_of_subdifferentials(F, [0.0], eps)
        assert res.status == "empty-no-integrable-selection" and res.empty

    def test_shrinking_eps_stays_empty(self):
        F = affine_box_family(512)
        flags = [aumann_of_subdifferentials(F, [0.0], e).empty for e in (0.9, 0.5, 0.1, 0.01)]
        assert all(flags)

    @pytest.mark.parametrize("eps", [0.01, 0.25, 1.0])
    def test_root_family(self, eps):
        mu = ms.interval(0, 1, singularity={"at": "a", "exponent": 0.5})
        G = lambda t: interval(-2 * math.sqrt(eps / t), 2 * math.sqrt(eps / t))  # noqa: E731
        res = aumann_integral(G, mu)
        r = 4 * math.sqrt(eps)
        assert quad(lambda t: 2 * math.sqrt(eps / t), 0, 1) == pytest.approx(r, rel=1e-9)
        lo, hi = ends(res.set)
        assert res.status == "nonempty-exact"
        assert lo == pytest.approx(-r, rel=1e-8) and hi == pytest.approx(r, rel=1e-8)

    def test_quadratic_over_t_subdiffs(self):
        res = aumann_of_subdifferentials(quad_over_t(), [0.0], 0.25)
        lo, hi = ends(res.set)
        assert lo == pytest.approx(-2.0, rel=1e-8) and hi == pytest.approx(2.0, rel=1e-8)

    def test_singletons(self):
        mu = ms.interval(0, 1, node_count=128)
        res = aumann_integral(lambda t: point([t * t]), mu)
        assert ends(res.set)[0] == pytest.approx(1 / 3, abs=1e-12) and res.set.is_singleton

    def test_one_sided_unbounded(self):
        mu = ms.finite_discrete([0, 1], [1.0, 1.0])
        res = aumann_integral([interval(0, INF), interval(1, 2)], mu)
        assert ends(res.set) == (1.0, INF) and res.unbounded_directions

    def test_empty_node(self):
        mu = ms.finite_discrete([0, 1], [1.0, 1.0])
        assert aumann_integral([interval(0, 1), interval(2, 1)], mu).empty
        # a null node does not matter
        mu0 = ms.finite_discrete([0, 1], [1.0, 0.0])
        assert not aumann_integral([interval(0, 1), interval(2, 1)], mu0).empty

    def test_discrete_2d_minkowski(self):
        mu = ms.finite_discrete([0, 1], [1.0, 0.5])
        sq = make_polyhedron([[0, 0], [1, 0], [1, 1], [0, 1]], [])
        tri = make_polyhedron([[0, 0], [2, 0], [0, 2]], [])
        res = aumann_integral([sq, tri], mu)
        for v in ([1, 0], [0.6, 0.8], [-1, -1]):
            assert support(res.set, v) == pytest.approx(support(sq, v) + 0.5 * support(tri, v))

    def test_status_invariant(self):
        with pytest.raises(ValueError):
            SetWithStatus(interval(0, 1), "empty-no-integrable-selection")

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0, 2)), min_size=1, max_size=5))
    def test_support_identity(self, pieces):
        mu = ms.finite_discrete(list(range(len(pieces))), [1.0 + i for i in range(len(pieces))])
        sets = [interval(a, a + w) for a, w in pieces]
        res = aumann_integral(sets, mu)
        for d in ([1.0], [-1.0]):
            expected = sum(wt * support(S, d) for S, wt in zip(sets, mu.weights))
            assert support(res.set, d) == pytest.approx(expected, abs=1e-9)


class TestSupersetSanity:
    @pytest.mark.parametrize("x,eps", [(0.25, 0.0), (0.5, 0.04), (0.8, 0.2)])
    def test_abs_family(self, x, eps):
        F = abs_family().at([x])
        D = domain_of_integral(F).set
        fam = restricted_family(F, D)
        orc = oracle_eps_subdiff(F, [x], eps)
        for k in range(5):
            eps2 = eps * k / 4
            ell = ms.uniform_allocation(eps - eps2, F.measure).values
            A = aumann_of_subdifferentials(fam, [x], ell).set
            S = minkowski_sum(A, normal_cone_eps(D, [x], eps2))
            assert subset_of(S, orc, 1e-3)

    def test_example_at_zero(self):
        F = affine_box_family(256)
        orc = oracle_eps_subdiff(F, [0.0], 0.3)
        D = domain_of_integral(F).set
        S = minkowski_sum(aumann_of_subdifferentials(restricted_family(F, D), [0.0], 0.0).set,
                          normal_cone_eps(D, [0.0], 0.3))
        assert subset_of(S, orc, 1e-3)


class TestCertificates:
    def test_smooth_pair(self):
        F = discrete([Quadratic([[1.0]], [0.0]), Quadratic([[0.5]], [1.0])], [1.0, 1.0])
        x = 0.4
        xstar = 2 * x + (x + 1.0)
        c = eps_certificate_decomposition(F, [x], [xstar], 0.0)
        assert c.found and np.allclose(c.eps1, 0.0, atol=1e-9) and c.eps2 == 0.0
        assert c.residual <= 1e-6

    def test_abs_and_square(self):
        F = discrete([PiecewiseLinearMax([[1.0], [-1.0]], [0.0, 0.0]), Quadratic([[1.0]], [0.0])], [1.0, 1.0])
        c = eps_certificate_decomposition(F, [0.0], [0.5], 0.0)
        assert c.found
        assert c.selection[:, 0] == pytest.approx([0.5, 0.0], abs=1e-9)

    @pytest.mark.parametrize("xstar", [0.0, 5.0])
    def test_example_normal_cone(self, xstar):
        F = affine_box_family(256)
        c = eps_certificate_decomposition(F, [0.0], [xstar], 0.0)
        assert c.found and c.eps2 == 0.0 and c.budget_used <= 1e-6
        assert float(F.measure.weights @ c.selection[:, 0] + c.remainder[0]) == pytest.approx(xstar, abs=1e-6)

    def test_not_in_oracle(self):
        F = discrete([Quadratic([[1.0]], [0.0])], [1.0])
        assert eps_certificate_decomposition(F, [0.0], [3.0], 0.1).status == "precondition-failed"

    def test_eps_budget(self):
        F = discrete([PiecewiseLinearMax([[1.0], [-1.0]], [0.0, 0.0]), Quadratic([[1.0]], [0.0])], [1.0, 1.0])
        c = eps_certificate_decomposition(F, [1.0], [2.5], 0.3)
        assert c.found and c.budget_used <= 0.3 + 1e-6
        assert contains(eps_subdifferential(F.members[1], [1.0], float(c.eps1[1]) + 1e-9).set,
                        c.selection[1], 1e-6)
