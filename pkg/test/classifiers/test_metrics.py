import unittest

import numpy as np

from mklbci.classifiers.metrics import error_rate, predict_labels
from mklbci.exception import DegenerateInputError, ShapeMismatchError


class MetricsTest(unittest.TestCase):
    def test_error_rate(self):
        truth = np.array([1, -1] * 5)
        self.assertEqual(error_rate(truth, truth), 0)
        self.assertEqual(error_rate(-truth, truth), 1)

        predicted = truth.copy()
        predicted[3] *= -1
        self.assertAlmostEqual(error_rate(predicted, truth), 0.1, delta=1e-15)
        self.assertEqual(error_rate(predicted, truth), error_rate(truth, predicted))

    def test_errors(self):
        with self.assertRaises(DegenerateInputError):
            error_rate([], [])
        with self.assertRaises(ShapeMismatchError):
            error_rate([1, 1], [1])

    def test_predict_labels(self):
        np.testing.assert_array_equal(predict_labels([0.3, -2, 0.0, -0.0, -1e-300]), [1, -1, 1, 1, -1])
