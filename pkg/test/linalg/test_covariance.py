import unittest

import numpy as np

from mklbci.exception import (DegenerateInputError, ParameterError,
                              ShapeMismatchError)
from mklbci.linalg.covariance import (CovMatrix, average_covariance,
                                      class_covariance, regularize_spd,
                                      trial_covariance)
from mklbci.signal.recording import Trial


def covariance_oracle(x):
    channels, samples = x.shape
    cov = np.zeros((channels, channels))
    for i in range(channels):
        for j in range(channels):
            for t in range(samples):
                cov[i, j] += x[i, t] * x[j, t]
    trace = sum(cov[i, i] for i in range(channels))
    return cov / trace


class CovMatrixTest(unittest.TestCase):
    def test_readonly(self):
        src = np.eye(3)
        cov = CovMatrix(src)
        self.assertEqual(cov.channels, 3)
        self.assertIsNot(cov.data, src)
        with self.assertRaises(ValueError):
            cov.data[0, 0] = 2

    def test_invalid(self):
        with self.assertRaises(ShapeMismatchError):
            CovMatrix(np.ones((2, 3)))
        with self.assertRaises(ShapeMismatchError):
            CovMatrix([[1, 2], [0, 1]])
        with self.assertRaises(DegenerateInputError):
            CovMatrix([[1, np.nan], [np.nan, 1]])

    def test_of(self):
        cov = CovMatrix(np.eye(2))
        self.assertIs(CovMatrix.of(cov), cov)
        self.assertIsInstance(CovMatrix.of(np.eye(2)), CovMatrix)


class TrialCovarianceTest(unittest.TestCase):
    def test_hand_computed(self):
        cov = trial_covariance(np.array([[1, -1], [1, -1]]))
        np.testing.assert_allclose(cov.data, [[.5, .5], [.5, .5]], rtol=0, atol=1e-15)

        cov = trial_covariance(np.eye(2))
        np.testing.assert_allclose(cov.data, [[.5, 0], [0, .5]], rtol=0, atol=1e-15)

    def test_oracle(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((3, 200))

        cov = trial_covariance(Trial(x, 1))
        np.testing.assert_allclose(cov.data, covariance_oracle(x), rtol=0, atol=1e-12)
        self.assertAlmostEqual(np.trace(cov.data), 1, delta=1e-12)
        self.assertTrue(np.array_equal(cov.data, cov.data.T))

    def test_unit_trace(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.standard_normal((5, 40)) * rng.uniform(0.01, 100)
            self.assertAlmostEqual(np.trace(trial_covariance(x).data), 1, delta=1e-12)

    def test_degenerate(self):
        with self.assertRaises(DegenerateInputError):
            trial_covariance(np.zeros((3, 10)))
        with self.assertRaises(DegenerateInputError):
            trial_covariance(np.ones((3, 1)))
        with self.assertRaises(ShapeMismatchError):
            trial_covariance(np.ones(10))


class ClassCovarianceTest(unittest.TestCase):
    def test_singleton(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((4, 50))
        np.testing.assert_array_equal(class_covariance([x]).data, trial_covariance(x).data)

    def test_identical_trials(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((4, 50))
        np.testing.assert_allclose(
            class_covariance([x, x.copy()]).data,
            trial_covariance(x).data,
            rtol=0, atol=1e-15
        )

    def test_mean(self):
        rng = np.random.default_rng(5)
        trials = [rng.standard_normal((4, 30)) for _ in range(10)]

        expected = np.zeros((4, 4))
        for x in trials:
            expected += covariance_oracle(x)
        expected /= len(trials)

        np.testing.assert_allclose(class_covariance(trials).data, expected, rtol=0, atol=1e-12)

    def test_errors(self):
        with self.assertRaises(DegenerateInputError):
            class_covariance([])
        rng = np.random.default_rng(6)
        with self.assertRaises(ShapeMismatchError):
            class_covariance([rng.standard_normal((3, 20)), rng.standard_normal((4, 20))])


class RegularizeTest(unittest.TestCase):
    def test_zero_eps(self):
        cov = CovMatrix(np.diag([1.0, 2.0]))
        self.assertIs(regularize_spd(cov, 0), cov)

    def test_identity(self):
        np.testing.assert_allclose(regularize_spd(np.eye(3), 0.1).data, 1.1 * np.eye(3), rtol=0, atol=1e-15)

    def test_rank_deficient(self):
        rng = np.random.default_rng(7)
        v = rng.standard_normal((6, 2))
        cov = CovMatrix(v @ v.T)
        eps = 1e-3

        reg = regularize_spd(cov, eps)
        floor = eps * np.mean(np.diag(cov.data))
        self.assertGreaterEqual(np.linalg.eigvalsh(reg.data).min(), floor - 1e-12)

    def test_negative_eps(self):
        with self.assertRaises(ParameterError):
            regularize_spd(np.eye(2), -1e-3)

    def test_average(self):
        avg = average_covariance(CovMatrix(np.eye(2)), CovMatrix(3 * np.eye(2)))
        np.testing.assert_array_equal(avg.data, 2 * np.eye(2))
