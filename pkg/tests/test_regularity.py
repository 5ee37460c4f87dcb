#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
正则性检查单元测试
"""

import math
import unittest

from src.discontinuity_example import example_problem, make_g
from src.exceptions import InputError
from src.funcspace import GridSpec, MaxQuadFunction, QuadraticPiece
from src.proxavg import ProxAverageProblem
from src.regularity import (
    CheckReport, MAX_REPORTED_VIOLATIONS, check_gradient_identity, check_gradient_lambda_lipschitz,
    check_majorization, check_para_prox_inequality, check_prox_inequality, check_r_monotonicity,
    check_shifted_convexity, check_vertex_recovery, edge_weights, estimate_prox_map_lipschitz,
    interior_weights, run_verification_suite,
)

X3 = (2.0 + math.sqrt(3.0)) / 2.0
SMALL_GRID = GridSpec((-1.0,), (3.0,), (401,))
PARABOLA_GRID = GridSpec((-1.0,), (1.0,), (201,))
PARABOLA_R = 4.0


def parabola():
    return MaxQuadFunction(1, (QuadraticPiece(1.0, (0.0,), 0.0),))


def deep_hump():
    """max{-2x², x - 3, -x - 3}：r 略大于 4 时近端映射在驼峰上斜率为 11"""
    return MaxQuadFunction(1, (
        QuadraticPiece(-4.0, (0.0,), 0.0),
        QuadraticPiece(0.0, (1.0,), -3.0),
        QuadraticPiece(0.0, (-1.0,), -3.0),
    ))


class TestCheckReport(unittest.TestCase):

    def test_violation_list_is_capped(self):
        report = CheckReport("demo")
        for k in range(MAX_REPORTED_VIOLATIONS + 10):
            report.add_violation(-float(k), index=k)
        self.assertFalse(report.passed)
        self.assertEqual(report.violation_count, MAX_REPORTED_VIOLATIONS + 10)
        self.assertEqual(len(report.violations), MAX_REPORTED_VIOLATIONS)
        self.assertEqual(report.to_dict()['violations'][0]['margin'], -float(MAX_REPORTED_VIOLATIONS + 9))

    def test_empty_report_passes(self):
        data = CheckReport("demo", samples_tested=3, seed=7).to_dict()
        self.assertTrue(data['passed'])
        self.assertEqual(data['seed'], 7)
        self.assertNotIn('estimate', data)


class TestProxInequality(unittest.TestCase):
    """测试近端正则性不等式"""

    def test_hump_curvature_bounded(self):
        self.assertTrue(check_prox_inequality(make_g(0), 1.0, 0.2, 1.0).passed)

    def test_hump_curvature_too_large(self):
        report = check_prox_inequality(make_g(0), 1.0, 0.2, 0.5)
        self.assertFalse(report.passed)
        self.assertGreater(report.violation_count, 0)

    def test_convex_piece(self):
        self.assertTrue(check_prox_inequality(parabola(), 0.3, 0.5, 0.01).passed)

    def test_two_dimensional_samples(self):
        f = MaxQuadFunction(2, (QuadraticPiece(-1.0, (0.0, 0.0), 0.0), QuadraticPiece(0.0, (1.0, 0.0), -1.0)))
        self.assertTrue(check_prox_inequality(f, (0.0, 0.0), 0.3, 1.0, sample_count=50, seed=3).passed)
        self.assertFalse(check_prox_inequality(f, (0.0, 0.0), 0.3, 0.2, sample_count=50, seed=3).passed)


class TestParaProxInequality(unittest.TestCase):
    """测试参数化近端正则性"""

    @classmethod
    def setUpClass(cls):
        cls.problem = example_problem()

    def test_example_passes(self):
        report = check_para_prox_inequality(self.problem, 1.0, (0.5, 0.5), 0.2, 2.5)
        self.assertTrue(report.passed)
        self.assertEqual(report.seed, 0)

    def test_tiny_r_fails_on_convex_branch(self):
        report = check_para_prox_inequality(self.problem, X3, (0.5, 0.5), 0.2, 0.01)
        self.assertFalse(report.passed)

    def test_single_convex_function(self):
        problem = ProxAverageProblem.create([parabola()], PARABOLA_R, inner_grid=PARABOLA_GRID)
        self.assertTrue(check_para_prox_inequality(problem, 0.5, (1.0,), 0.3, PARABOLA_R).passed)
        self.assertFalse(check_para_prox_inequality(problem, 0.5, (1.0,), 0.3, 0.01).passed)


class TestShiftedConvexity(unittest.TestCase):

    def test_example_midpoint_weights(self):
        problem = example_problem()
        report = check_shifted_convexity(problem, (0.5, 0.5), 1.0)
        self.assertTrue(report.passed)
        self.assertEqual(report.samples_tested, problem.inner_grid.size)

    def test_single_convex_function(self):
        problem = ProxAverageProblem.create([parabola()], PARABOLA_R, inner_grid=PARABOLA_GRID)
        report = check_shifted_convexity(problem, (1.0,), 0.0)
        self.assertTrue(report.passed)
        self.assertIn("vertex", report.note)


class TestLipschitzEstimates(unittest.TestCase):
    """测试 Lipschitz 估计"""

    def test_example_prox_map(self):
        report = estimate_prox_map_lipschitz(example_problem(), (0.5, 0.5))
        self.assertTrue(report.passed)
        self.assertLessEqual(report.estimate, 1.0 + 1e-6)

    def test_convex_prox_map(self):
        problem = ProxAverageProblem.create([parabola()], PARABOLA_R, inner_grid=PARABOLA_GRID)
        self.assertLessEqual(estimate_prox_map_lipschitz(problem, (1.0,)).estimate, 1.0 + 1e-9)

    def test_deep_hump_fails(self):
        problem = ProxAverageProblem.create([deep_hump()], 4.4)
        report = estimate_prox_map_lipschitz(problem, (1.0,))
        self.assertFalse(report.passed)
        self.assertGreater(report.estimate, 5.0)

    def test_gradient_in_lambda(self):
        report = check_gradient_lambda_lipschitz(example_problem(), 1.0, (0.5, 0.5))
        self.assertTrue(math.isfinite(report.estimate))
        self.assertEqual(report.samples_tested, 16)

    def test_gradient_in_lambda_single_function(self):
        problem = ProxAverageProblem.create([parabola()], PARABOLA_R, inner_grid=PARABOLA_GRID)
        report = check_gradient_lambda_lipschitz(problem, 0.5, (1.0,))
        self.assertEqual(report.estimate, 0.0)
        self.assertTrue(report.passed)

    def test_gradient_in_lambda_requires_interior(self):
        with self.assertRaises(InputError):
            check_gradient_lambda_lipschitz(example_problem(), 1.0, (1.0, 0.0))


class TestEnvelopeProperties(unittest.TestCase):
    """测试包络性质检查"""

    @classmethod
    def setUpClass(cls):
        cls.problem = example_problem(grid=SMALL_GRID)

    def test_majorization(self):
        self.assertTrue(check_majorization(self.problem).passed)

    def test_r_monotonicity(self):
        self.assertTrue(check_r_monotonicity(self.problem).passed)

    def test_gradient_identity(self):
        report = check_gradient_identity(self.problem, samples=100, seed=0)
        self.assertTrue(report.passed)
        self.assertGreater(report.samples_tested, 150)

    def test_vertex_recovery(self):
        report = check_vertex_recovery(self.problem)
        self.assertTrue(report.passed)
        self.assertLessEqual(report.estimate, 1e-5)


class TestVerificationSuite(unittest.TestCase):
    """测试验证套件"""

    def test_weights(self):
        weights = interior_weights(2)
        self.assertEqual(len(weights), 9)
        self.assertAlmostEqual(weights[0].weights[1], 0.1)
        self.assertEqual(len(edge_weights(2)), 21)
        self.assertEqual(len(interior_weights(3, count=4, seed=1)), 4)

    def test_example_suite_passes(self):
        suite = run_verification_suite(example_problem(grid=SMALL_GRID), seed=0)
        self.assertEqual(suite.failed_checks, [])
        names = [check.name for check in suite.checks]
        self.assertEqual(names, ['prox_threshold', 'majorization', 'r_monotonicity', 'gradient_identity',
                                 'vertex_recovery', 'shifted_convexity', 'prox_map_lipschitz',
                                 'argmin_equivalence', 'para_prox_inequality'])

    def test_convex_single_function_suite(self):
        problem = ProxAverageProblem.create([parabola()], PARABOLA_R, inner_grid=PARABOLA_GRID)
        self.assertTrue(run_verification_suite(problem).passed)

    def test_threshold_failure_stops_suite(self):
        concave = MaxQuadFunction(1, (QuadraticPiece(-3.0, (0.0,), 0.0),))
        problem = ProxAverageProblem.create([concave], 2.0, inner_grid=SMALL_GRID, check_thresholds=False)
        suite = run_verification_suite(problem)
        self.assertFalse(suite.passed)
        self.assertEqual(suite.failed_checks, ['prox_threshold'])
        self.assertEqual(len(suite.checks), 1)


if __name__ == '__main__':
    unittest.main()
