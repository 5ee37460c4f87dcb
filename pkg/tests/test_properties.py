#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
随机 max-of-quadratics 问题集上的性质测试
"""

import unittest

import numpy as np

from src.funcspace import GridSpec, MaxQuadFunction, QuadraticPiece, SimplexWeight, prox_threshold
from src.moreau import double_envelope, envelope_exact_1d
from src.oracle import minimize_on_grid
from src.proxavg import DeltaSpec, ProxAverageProblem, delta_eval, inner_function
from src.regularity import check_prox_inequality

CORPUS_SIZE = 50
CORPUS_SEED = 20240601
WIDE_GRID = GridSpec((-6.0,), (6.0,), (1201,))
XS = np.linspace(-3.0, 3.0, 241)


def random_function(rng):
    """一个凸片 (alpha ∈ [1, 2]) 加上 0-2 个曲率 >= -1 的片"""
    pieces = [QuadraticPiece(float(rng.uniform(1.0, 2.0)), (float(rng.uniform(-1.0, 1.0)),),
                             float(rng.uniform(-0.5, 0.5)))]
    for _ in range(int(rng.integers(0, 3))):
        pieces.append(QuadraticPiece(float(rng.uniform(-1.0, 1.0)), (float(rng.uniform(-1.0, 1.0)),),
                                     float(rng.uniform(-0.5, 0.5))))
    rng.shuffle(pieces)
    return MaxQuadFunction(1, tuple(pieces))


def random_problem(rng):
    functions = [random_function(rng) for _ in range(int(rng.integers(2, 4)))]
    bound = max(prox_threshold(f) for f in functions)
    r = bound + 1.0 + float(rng.uniform(0.0, 2.0))
    return ProxAverageProblem.create(functions, r, inner_grid=GridSpec((-3.0,), (3.0,), (241,)))


class TestRandomCorpus(unittest.TestCase):
    """50 个随机问题上的包络与近端平均性质"""

    @classmethod
    def setUpClass(cls):
        rng = np.random.default_rng(CORPUS_SEED)
        cls.problems = [random_problem(rng) for _ in range(CORPUS_SIZE)]

    def functions(self):
        for problem in self.problems:
            for f in problem.functions:
                yield problem, f

    def test_corpus_uses_exact_path(self):
        self.assertEqual(len(self.problems), CORPUS_SIZE)
        self.assertTrue(all(problem.all_exact for problem in self.problems))

    def test_envelope_majorized_by_function(self):
        for problem, f in self.functions():
            self.assertTrue(np.all(envelope_exact_1d(f, problem.r, XS) <= f.evaluate(XS) + 1e-12))

    def test_envelope_monotone_in_r(self):
        for problem, f in self.functions():
            lower = envelope_exact_1d(f, problem.r, XS)
            upper = envelope_exact_1d(f, 1.5 * problem.r, XS)
            self.assertTrue(np.all(lower <= upper + 1e-12))

    def test_infimum_preserved(self):
        for problem, f in self.functions():
            inf_f = minimize_on_grid(lambda p: f.evaluate(p[:, 0]), WIDE_GRID).value
            inf_e = minimize_on_grid(lambda p: envelope_exact_1d(f, problem.r, p[:, 0]), WIDE_GRID).value
            self.assertAlmostEqual(inf_e, inf_f, delta=1e-7)

    def test_proximal_hull_recovers_function(self):
        rng = np.random.default_rng(CORPUS_SEED + 1)
        for problem in self.problems[:10]:
            f = problem.functions[0]
            for x in rng.uniform(-1.0, 1.0, 2):
                hull = double_envelope(f, problem.r, float(x))
                self.assertLessEqual(hull, f.evaluate(float(x)) + 1e-6)
                self.assertAlmostEqual(hull, f.evaluate(float(x)), delta=1e-6)

    def test_inner_function_affine_in_lambda(self):
        rng = np.random.default_rng(CORPUS_SEED + 2)
        for problem in self.problems:
            lam = rng.dirichlet(np.ones(problem.m))
            mu = rng.dirichlet(np.ones(problem.m))
            mid = 0.5 * (lam + mu)
            combined = 0.5 * (inner_function(problem, tuple(lam))(XS) + inner_function(problem, tuple(mu))(XS))
            np.testing.assert_allclose(inner_function(problem, tuple(mid / mid.sum()))(XS), combined, atol=1e-10)

    def test_delta_vanishes_at_vertices_and_positive_inside(self):
        rng = np.random.default_rng(CORPUS_SEED + 3)
        product = DeltaSpec('custom_polynomial', (((1, 1, 1), 1.0),))
        for m in (2, 3):
            for i in range(m):
                self.assertEqual(delta_eval(DeltaSpec(), SimplexWeight.vertex(m, i)), 0.0)
            for _ in range(20):
                lam = SimplexWeight(tuple(float(w) for w in rng.dirichlet(np.ones(m))))
                self.assertGreater(delta_eval(DeltaSpec(), lam), 0.0)
        self.assertEqual(product.validate(3), [])
        self.assertEqual(delta_eval(product, SimplexWeight.vertex(3, 1)), 0.0)

    def test_checks_deterministic_under_seed(self):
        for problem in self.problems[:5]:
            f = problem.functions[0]
            first = check_prox_inequality(f, 0.2, 0.5, problem.r, seed=11).to_dict()
            second = check_prox_inequality(f, 0.2, 0.5, problem.r, seed=11).to_dict()
            self.assertEqual(first, second)
            self.assertTrue(first['passed'])


if __name__ == '__main__':
    unittest.main()
