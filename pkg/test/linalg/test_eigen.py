import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mklbci.exception import DefinitenessError, ShapeMismatchError
from mklbci.linalg.eigen import cholesky_lower, gen_eig_sym, log_det_spd


def random_pencil(rng, dim):
    a = rng.standard_normal((dim, dim + 3))
    b = rng.standard_normal((dim, dim + 3))
    c1 = a @ a.T / dim
    c2 = b @ b.T / dim + np.eye(dim)
    return (c1 + c1.T) / 2, (c2 + c2.T) / 2


class GenEigTest(unittest.TestCase):
    def test_diagonal_pencil(self):
        result = gen_eig_sym(np.diag([2.0, 1.0]), np.eye(2))
        np.testing.assert_allclose(result.eigenvalues, [2, 1], rtol=1e-7)
        np.testing.assert_allclose(np.abs(result.eigenvectors), np.eye(2), rtol=0, atol=1e-8)

    def test_reciprocal_diagonal(self):
        result = gen_eig_sym(np.eye(2), np.diag([2.0, 4.0]))
        np.testing.assert_allclose(result.eigenvalues, [1 / 2, 1 / 4], rtol=1e-7)

    def test_random_residual(self):
        rng = np.random.default_rng(10)
        c1, c2 = random_pencil(rng, 8)
        result = gen_eig_sym(c1, c2, eps=0)
        w, lam = result.eigenvectors, result.eigenvalues

        residual = np.linalg.norm(c1 @ w - c2 @ w @ np.diag(lam))
        self.assertLessEqual(residual, 1e-8 * np.linalg.norm(c1))
        np.testing.assert_allclose(w.T @ c2 @ w, np.eye(8), rtol=0, atol=1e-8)

    def test_many_pencils(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            dim = int(rng.integers(4, 33))
            c1, c2 = random_pencil(rng, dim)
            result = gen_eig_sym(c1, c2, eps=0)
            w, lam = result.eigenvectors, result.eigenvalues

            self.assertEqual(len(result), dim)
            self.assertTrue(np.all(np.diff(lam) <= 0))
            self.assertLessEqual(np.linalg.norm(c1 @ w - c2 @ w * lam), 1e-8 * np.linalg.norm(c1))
            self.assertLessEqual(np.linalg.norm(w.T @ c2 @ w - np.eye(dim)), 1e-8)

    def test_default_regularization_is_small(self):
        rng = np.random.default_rng(12)
        c1, c2 = random_pencil(rng, 6)
        exact = gen_eig_sym(c1, c2, eps=0).eigenvalues
        default = gen_eig_sym(c1, c2).eigenvalues
        np.testing.assert_allclose(default, exact, rtol=1e-7)

    def test_sign_convention(self):
        rng = np.random.default_rng(13)
        c1, c2 = random_pencil(rng, 5)
        w = gen_eig_sym(c1, c2).eigenvectors
        for col in w.T:
            self.assertGreater(col[np.argmax(np.abs(col))], 0)

    def test_readonly(self):
        result = gen_eig_sym(np.eye(2), np.eye(2))
        with self.assertRaises(ValueError):
            result.eigenvalues[0] = 0

    def test_not_definite(self):
        with self.assertRaises(DefinitenessError) as cm:
            gen_eig_sym(np.eye(2), np.diag([1.0, -1.0]))
        self.assertEqual(cm.exception.pivot, 2)

    def test_dimension_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            gen_eig_sym(np.eye(2), np.eye(3))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 8))
    def test_congruence(self, seed, dim):
        rng = np.random.default_rng(seed)
        c1, c2 = random_pencil(rng, dim)
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        t = q * rng.uniform(0.5, 2.0, dim)

        original = gen_eig_sym(c1, c2, eps=0).eigenvalues
        transformed = gen_eig_sym(t.T @ c1 @ t, t.T @ c2 @ t, eps=0).eigenvalues
        scale = max(1.0, np.abs(original).max())
        np.testing.assert_allclose(transformed, original, rtol=0, atol=1e-8 * scale)


class CholeskyTest(unittest.TestCase):
    def test_factor(self):
        rng = np.random.default_rng(14)
        _, c2 = random_pencil(rng, 4)
        lower = cholesky_lower(c2)
        np.testing.assert_allclose(lower @ lower.T, c2, rtol=0, atol=1e-12)
        self.assertTrue(np.allclose(np.triu(lower, 1), 0))

    def test_log_det(self):
        self.assertAlmostEqual(log_det_spd(np.diag([2.0, 3.0])), np.log(6), delta=1e-12)

    def test_pivot(self):
        with self.assertRaises(DefinitenessError) as cm:
            cholesky_lower(np.diag([1.0, 1.0, 0.0]))
        self.assertEqual(cm.exception.pivot, 3)
