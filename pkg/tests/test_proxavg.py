#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
NC 近端平均单元测试
"""

import math
import unittest

import numpy as np

from src.discontinuity_example import EXAMPLE_GRID, envelope_g_closed, example_problem, make_g
from src.exceptions import DimensionMismatchError, GridTooSmallError, InputError, ProxParameterError, SimplexError
from src.funcspace import GridSpec, MaxQuadFunction, QuadraticPiece, SimplexWeight
from src.proxavg import (
    DeltaSpec, ProxAverageProblem, argmin_equivalence, argmin_of, delta_eval, inner_function,
    pa_curve, pa_eval, pa_values, weighted_envelope,
)

SQRT3 = math.sqrt(3.0)
X1 = (2.0 - SQRT3) / 2.0
X3 = (2.0 + SQRT3) / 2.0


def parabola(dimension=1):
    """(1/2)|x|²"""
    return MaxQuadFunction(dimension, (QuadraticPiece(1.0, (0.0,) * dimension, 0.0),))


class TestDeltaSpec(unittest.TestCase):
    """测试扰动函数 δ(λ)"""

    def test_symmetric_quadratic(self):
        spec = DeltaSpec()
        self.assertAlmostEqual(delta_eval(spec, (0.5, 0.5)), 0.25)
        self.assertAlmostEqual(delta_eval(spec, SimplexWeight.centroid(3)), 1.0 / 3.0)
        self.assertEqual(delta_eval(spec, (0.0, 1.0)), 0.0)

    def test_off_simplex(self):
        with self.assertRaises(SimplexError):
            delta_eval(DeltaSpec(), (0.7, 0.7))

    def test_custom_polynomial_validation(self):
        product = DeltaSpec('custom_polynomial', (((1, 1), 1.0),))
        self.assertEqual(product.validate(2), [])
        self.assertAlmostEqual(delta_eval(product, (0.5, 0.5)), 0.25)
        bad = DeltaSpec('custom_polynomial', (((1, 0), 1.0),))
        self.assertTrue(any("e_1" in error for error in bad.validate(2)))

    def test_dict_round_trip(self):
        spec = DeltaSpec.from_dict({'kind': 'custom_polynomial', 'terms': [{'powers': [1, 1], 'coef': 2.0}]})
        self.assertEqual(DeltaSpec.from_dict(spec.to_dict()), spec)

    def test_unknown_kind(self):
        with self.assertRaises(InputError):
            DeltaSpec('cubic')


class TestProblem(unittest.TestCase):
    """测试问题对象的构建"""

    def test_default_grids(self):
        problem = example_problem()
        self.assertEqual(problem.m, 2)
        self.assertEqual(problem.inner_grid, EXAMPLE_GRID)
        self.assertAlmostEqual(problem.outer_grid.lower[0], -2.0)
        self.assertTrue(problem.all_exact)
        self.assertEqual(problem.interpolation_slack, 0.0)

    def test_empty_function_list(self):
        with self.assertRaises(InputError):
            ProxAverageProblem.create([], 1.0)

    def test_threshold_violation(self):
        concave = MaxQuadFunction(1, (QuadraticPiece(-3.0, (0.0,), 0.0),))
        with self.assertRaises(ProxParameterError):
            ProxAverageProblem.create([concave], 2.0)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            ProxAverageProblem.create([parabola(1), parabola(2)], 1.0)

    def test_wrong_lambda_length(self):
        with self.assertRaises(DimensionMismatchError):
            weighted_envelope(example_problem(), 0.0, (1.0,))

    def test_to_dict(self):
        data = example_problem().to_dict()
        self.assertEqual(data['dimension'], 1)
        self.assertEqual(len(data['functions']), 2)
        self.assertEqual(data['delta'], {'kind': 'symmetric_quadratic'})


class TestInnerFunction(unittest.TestCase):
    """测试 F_λ = -Σλ_i e_r f_i"""

    def setUp(self):
        self.problem = example_problem()

    def test_midpoint_weights(self):
        F = inner_function(self.problem, (0.5, 0.5))
        self.assertAlmostEqual(F(0.0), -0.5 * (5.5 - 3.0 * SQRT3), places=12)

    def test_vertex_weights(self):
        F = inner_function(self.problem, (1.0, 0.0))
        self.assertAlmostEqual(F(3.0), -1.25, places=12)

    def test_single_function(self):
        problem = ProxAverageProblem.create([make_g(0)], 2.0, inner_grid=EXAMPLE_GRID)
        xs = np.linspace(-1.0, 3.0, 9)
        np.testing.assert_allclose(inner_function(problem, (1.0,))(xs), -envelope_g_closed(0, 2.0, xs),
                                   atol=1e-12)

    def test_weighted_envelope_is_negated_inner_function(self):
        xs = np.linspace(-1.0, 3.0, 17)
        lam = (0.3, 0.7)
        np.testing.assert_allclose(weighted_envelope(self.problem, xs, lam),
                                   -inner_function(self.problem, lam)(xs))


class TestProxAverage(unittest.TestCase):
    """测试 PA(x, λ)"""

    @classmethod
    def setUpClass(cls):
        cls.problem = example_problem()
        cls.xs = np.linspace(-1.0, 3.0, 501)

    def test_vertex_recovers_functions(self):
        for index in (0, 1):
            lam = SimplexWeight.vertex(2, index)
            values = pa_values(self.problem, self.xs, lam)
            np.testing.assert_allclose(values, make_g(index).evaluate(self.xs), atol=1e-5)

    def test_regression_value_at_one(self):
        self.assertAlmostEqual(pa_eval(self.problem, 1.0, (0.5, 0.5)), 0.5, delta=1e-8)

    def test_lower_bound_by_weighted_envelope(self):
        for lam in ((0.5, 0.5), (0.2, 0.8)):
            pa = pa_values(self.problem, self.xs, lam)
            weighted = weighted_envelope(self.problem, self.xs, lam)
            self.assertTrue(np.all(pa >= weighted - 1e-9))

    def test_pa_curve_on_grid(self):
        grid = GridSpec((-1.0,), (3.0,), (41,))
        curve = pa_curve(self.problem, (0.0, 1.0), grid)
        np.testing.assert_allclose(curve.values, make_g(1).evaluate(grid.axes[0]), atol=1e-5)

    def test_single_convex_function(self):
        problem = ProxAverageProblem.create([parabola()], 4.0, inner_grid=GridSpec((-1.0,), (1.0,), (201,)))
        xs = np.array([-1.0, 0.0, 0.5, 1.0])
        np.testing.assert_allclose(pa_values(problem, xs, (1.0,)), 0.5 * xs ** 2, atol=1e-8)

    def test_two_dimensional_vertex_recovery(self):
        """二维顶点：PA(x, e_1) = (1/2)|x|²，包括内层网格角点（外层 sup 在 y = 2x 处）"""
        grid = GridSpec((-1.0, -1.0), (1.0, 1.0), (21, 21))
        problem = ProxAverageProblem.create([parabola(2)], 1.0, inner_grid=grid)
        self.assertFalse(problem.all_exact)
        xs = np.array([[0.2, 0.1], [0.9, 0.9], [1.0, 1.0], [-1.0, 1.0], [-1.0, -0.5], [0.0, 0.0]])
        expected = 0.5 * np.sum(xs * xs, axis=1)
        # 双线性插值高估凸的内层包络 (1/4)|y|²，PA 偏大不超过 h²/8
        np.testing.assert_allclose(pa_values(problem, xs, (1.0,)), expected, atol=2e-3)
        self.assertAlmostEqual(pa_eval(problem, xs[1], (1.0,)), 0.81, delta=2e-3)

    def test_two_dimensional_grid_too_small(self):
        """sup 点在扩张一倍后的外层网格之外时报 grid too small"""
        grid = GridSpec((-1.0, -1.0), (1.0, 1.0), (21, 21))
        problem = ProxAverageProblem.create([parabola(2)], 1.0, inner_grid=grid)
        with self.assertRaises(GridTooSmallError):
            pa_values(problem, np.array([[2.0, 2.0]]), (1.0,))


class TestArgmin(unittest.TestCase):
    """测试极小点集合与等价性"""

    @classmethod
    def setUpClass(cls):
        cls.problem = example_problem()

    def test_two_minimizers_at_half(self):
        report = argmin_equivalence(self.problem, (0.5, 0.5))
        self.assertTrue(report.agree)
        np.testing.assert_allclose(np.sort(report.argmin_weighted[:, 0]), [X1, X3], atol=1e-4)
        np.testing.assert_allclose(np.sort(report.argmin_pa[:, 0]), [X1, X3], atol=1e-4)

    def test_vertex_argmin(self):
        report = argmin_equivalence(self.problem, (1.0, 0.0))
        self.assertTrue(report.agree)
        np.testing.assert_allclose(report.argmin_weighted[:, 0], [0.0], atol=1e-4)

    def test_weighted_minimum_value(self):
        found = argmin_of(self.problem, (0.0, 1.0))
        np.testing.assert_allclose(found.points[:, 0], [2.0], atol=1e-6)
        self.assertAlmostEqual(found.value, 0.0, places=9)

    def test_convex_parabola(self):
        problem = ProxAverageProblem.create([parabola()], 4.0, inner_grid=GridSpec((-1.0,), (1.0,), (201,)))
        report = argmin_equivalence(problem, (1.0,))
        self.assertTrue(report.agree)
        np.testing.assert_allclose(report.argmin_pa[:, 0], [0.0], atol=1e-4)

    def test_unknown_objective(self):
        with self.assertRaises(InputError):
            argmin_of(self.problem, (0.5, 0.5), objective='other')


if __name__ == '__main__':
    unittest.main()
