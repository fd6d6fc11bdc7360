import unittest

import numpy as np
from scipy.optimize import minimize

from mklbci.classifiers.kernels import linear_kernel, normalize_avg_diag
from mklbci.classifiers.svm import dual_objective, svm_dual_solve
from mklbci.exception import (DegenerateInputError, DegenerateKernelError,
                              ParameterError)


def random_problem(rng, n=8, d=3):
    x = rng.standard_normal((n, d))
    y = rng.permutation(np.repeat([1, -1], n // 2))
    x[y == 1] += 0.5
    return normalize_avg_diag(linear_kernel(x)).data, y


def slsqp_dual(k, y, C):
    q = (y[:, None] * y[None, :]) * k

    def negative(alpha):
        return 0.5 * alpha @ q @ alpha - alpha.sum()

    def gradient(alpha):
        return q @ alpha - 1

    result = minimize(
        negative,
        np.zeros(len(y)),
        jac=gradient,
        method='SLSQP',
        bounds=[(0, C)] * len(y),
        constraints=[{'type': 'eq', 'fun': lambda a: a @ y, 'jac': lambda a: y.astype(float)}],
        options={'ftol': 1e-14, 'maxiter': 1000},
    )
    return -result.fun


class SvmDualTest(unittest.TestCase):
    def assertFeasible(self, solution, y, C):
        self.assertTrue(np.all(solution.alphas >= -1e-9))
        self.assertTrue(np.all(solution.alphas <= C + 1e-9))
        self.assertAlmostEqual(float(solution.alphas @ y), 0, delta=1e-8)
        self.assertTrue(np.isfinite(solution.objective))

    def test_analytic_toy(self):
        k = np.array([[1.0, -1.0], [-1.0, 1.0]])
        y = np.array([1, -1])
        solution = svm_dual_solve(k, y, 10)

        np.testing.assert_allclose(solution.alphas, [0.5, 0.5], rtol=0, atol=1e-8)
        self.assertAlmostEqual(solution.bias, 0, delta=1e-8)
        self.assertTrue(solution.converged)
        np.testing.assert_allclose(solution.decision([[1.0, -1.0], [-1.0, 1.0]]), [1, -1], rtol=0, atol=1e-8)
        np.testing.assert_array_equal(solution.support, [0, 1])

    def test_feasible(self):
        rng = np.random.default_rng(90)
        for C in (0.01, 1, 100):
            k, y = random_problem(rng, n=20)
            solution = svm_dual_solve(k, y, C)
            self.assertFeasible(solution, y, C)
            self.assertLessEqual(solution.kkt_gap, 1e-5)

    def test_against_slsqp(self):
        rng = np.random.default_rng(91)
        for _ in range(20):
            k, y = random_problem(rng)
            C = float(10 ** rng.uniform(-1, 1))
            solution = svm_dual_solve(k, y, C)
            self.assertAlmostEqual(solution.objective, slsqp_dual(k, y, C), delta=1e-4)

    def test_objective(self):
        rng = np.random.default_rng(92)
        k, y = random_problem(rng)
        solution = svm_dual_solve(k, y, 1.0)
        self.assertAlmostEqual(solution.objective, dual_objective(k, y, np.array(solution.alphas)), delta=1e-12)

    def test_warm_start(self):
        rng = np.random.default_rng(93)
        k, y = random_problem(rng, n=16)
        cold = svm_dual_solve(k, y, 1.0)
        warm = svm_dual_solve(k, y, 1.0, alpha0=np.array(cold.alphas))
        self.assertAlmostEqual(warm.objective, cold.objective, delta=1e-8)
        self.assertLessEqual(warm.iterations, cold.iterations)

    def test_label_flip(self):
        rng = np.random.default_rng(94)
        k, y = random_problem(rng, n=16)
        cross = k[:5]
        a = svm_dual_solve(k, y, 1.0).decision(cross)
        b = svm_dual_solve(k, -y, 1.0).decision(cross)
        np.testing.assert_allclose(b, -a, rtol=0, atol=1e-6)

    def test_errors(self):
        k = np.eye(4)
        with self.assertRaises(DegenerateInputError):
            svm_dual_solve(k, [1, 1, 1, 1], 1.0)
        with self.assertRaises(ParameterError):
            svm_dual_solve(k, [1, 2, -1, -1], 1.0)
        with self.assertRaises(ParameterError):
            svm_dual_solve(k, [1, 1, -1, -1], 0.0)
        with self.assertRaises(DegenerateKernelError):
            svm_dual_solve(np.full((4, 4), np.inf), [1, 1, -1, -1], 1.0)
        with self.assertRaises(ParameterError):
            svm_dual_solve(k, [1, 1, -1, -1], 1.0, alpha0=np.array([1.0, 0, 0, 0]))
