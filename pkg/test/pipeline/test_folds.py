import unittest

import numpy as np

from mklbci.exception import FoldError, ParameterError
from mklbci.pipeline.folds import stratified_folds, train_indices


class StratifiedFoldsTest(unittest.TestCase):
    def assertPartition(self, folds, n):
        joined = np.concatenate(folds)
        self.assertEqual(len(joined), n)
        np.testing.assert_array_equal(np.sort(joined), np.arange(n))

    def test_balanced(self):
        labels = np.repeat([1, -1], 75)
        folds = stratified_folds(labels, 5, seed=1)
        self.assertEqual(len(folds), 5)
        self.assertPartition(folds, 150)
        for fold in folds:
            self.assertEqual(len(fold), 30)
            self.assertEqual(np.count_nonzero(labels[fold] == 1), 15)
            np.testing.assert_array_equal(fold, np.sort(fold))

    def test_imbalanced(self):
        labels = np.array([1] * 23 + [-1] * 12)
        folds = stratified_folds(labels, 4)
        self.assertPartition(folds, 35)
        for fold in folds:
            positives = np.count_nonzero(labels[fold] == 1)
            self.assertLessEqual(abs(positives - 23 / 4), 1)

    def test_leave_one_out(self):
        labels = np.array([1, -1, 1, -1, 1])
        folds = stratified_folds(labels, 5, seed=2)
        self.assertTrue(all(len(f) == 1 for f in folds))
        self.assertPartition(folds, 5)

    def test_deterministic(self):
        labels = np.tile([1, -1], 20)
        a = stratified_folds(labels, 5, seed=7)
        b = stratified_folds(labels, 5, seed=7)
        c = stratified_folds(labels, 5, seed=8)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
        self.assertFalse(all(np.array_equal(x, y) for x, y in zip(a, c)))

    def test_errors(self):
        with self.assertRaises(ParameterError):
            stratified_folds([1, -1, 1, -1], 1)
        with self.assertRaises(FoldError):
            stratified_folds([1, -1, 1], 4)
        with self.assertRaises(FoldError):
            stratified_folds([1, 1, 1, 1, -1, -1], 3)

    def test_train_indices(self):
        folds = [np.array([0, 3]), np.array([1, 2]), np.array([4, 5])]
        np.testing.assert_array_equal(train_indices(folds, 1, 6), [0, 3, 4, 5])
