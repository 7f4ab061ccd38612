import math
import unittest

import numpy as np

from elliptrack.errors import ContractViolation
from elliptrack.metrics import Ellipse, extent_matrix, gw_distance, sqrtm_spd_2x2
from tests.test_utils import random_spd


def random_ellipse(rng):
    return Ellipse(
        rng.normal(scale=50.0, size=2),
        random_spd(rng, 2, scale=float(rng.uniform(0.5, 500.0))),
    )


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


class TestExtentMatrix(unittest.TestCase):
    def test_axis_aligned(self):
        np.testing.assert_allclose(extent_matrix((0.0, 2.0, 1.0)), np.diag([4.0, 1.0]))

    def test_quarter_turn_swaps_axes(self):
        np.testing.assert_allclose(
            extent_matrix((math.pi / 2, 2.0, 1.0)), np.diag([1.0, 4.0]), atol=1e-15
        )

    def test_eigenvalues_are_squared_semi_axes(self):
        eigvals = np.linalg.eigvalsh(extent_matrix((0.7, 170.0, 40.0)))
        np.testing.assert_allclose(eigvals, [1600.0, 28900.0], rtol=1e-12)


class TestSqrtm(unittest.TestCase):
    def test_squares_back(self):
        rng = np.random.default_rng(41)
        for _ in range(100):
            A = random_spd(rng, 2, scale=float(rng.uniform(1e-3, 1e4)))
            root = sqrtm_spd_2x2(A)
            np.testing.assert_allclose(root @ root, A, rtol=1e-10, atol=1e-12 * A.max())
            self.assertGreater(np.linalg.eigvalsh(root).min(), 0.0)

    def test_diagonal(self):
        np.testing.assert_allclose(sqrtm_spd_2x2(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


class TestGaussianWasserstein(unittest.TestCase):
    def test_identical_ellipses(self):
        a = Ellipse([1.0, 2.0], [[4.0, 1.0], [1.0, 3.0]])
        self.assertEqual(gw_distance(a, a), 0.0)

    def test_translation_only(self):
        a = Ellipse([0.0, 0.0], np.eye(2))
        b = Ellipse([3.0, 0.0], np.eye(2))
        self.assertEqual(gw_distance(a, b), 3.0)

    def test_swapped_axes(self):
        a = Ellipse([0.0, 0.0], np.diag([4.0, 1.0]))
        b = Ellipse([0.0, 0.0], np.diag([1.0, 4.0]))
        self.assertAlmostEqual(gw_distance(a, b), math.sqrt(2.0), places=12)

    def test_commuting_closed_form(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            R = rotation(rng.uniform(0, math.pi))
            la = rng.uniform(0.5, 100.0, size=2)
            lb = rng.uniform(0.5, 100.0, size=2)
            offset = rng.normal(size=2)
            a = Ellipse([0.0, 0.0], R @ np.diag(la) @ R.T)
            b = Ellipse(offset, R @ np.diag(lb) @ R.T)
            expected = math.sqrt(
                offset @ offset + np.sum((np.sqrt(la) - np.sqrt(lb)) ** 2)
            )
            self.assertAlmostEqual(
                gw_distance(a, b), expected, delta=1e-10 * (1 + expected)
            )

    def test_metric_axioms(self):
        rng = np.random.default_rng(43)
        for _ in range(1000):
            a, b, c = (random_ellipse(rng) for _ in range(3))
            ab, ba = gw_distance(a, b), gw_distance(b, a)
            self.assertGreaterEqual(ab, 0.0)
            self.assertAlmostEqual(ab, ba, delta=1e-10 * (1 + ab))
            self.assertLessEqual(
                ab, gw_distance(a, c) + gw_distance(c, b) + 1e-9 * (1 + ab)
            )

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(44)
        for _ in range(100):
            a, b = random_ellipse(rng), random_ellipse(rng)
            R = rotation(rng.uniform(-math.pi, math.pi))
            rotated = gw_distance(
                Ellipse(R @ a.center, R @ a.Sigma @ R.T),
                Ellipse(R @ b.center, R @ b.Sigma @ R.T),
            )
            base = gw_distance(a, b)
            self.assertAlmostEqual(rotated, base, delta=1e-10 * (1 + base))

    def test_rejects_non_spd(self):
        good = Ellipse([0.0, 0.0], np.eye(2))
        with self.assertRaises(ContractViolation):
            gw_distance(good, Ellipse([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]))
        with self.assertRaises(ContractViolation):
            gw_distance(Ellipse([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]]), good)
        with self.assertRaises(ContractViolation):
            gw_distance(good, Ellipse([0.0, 0.0], -np.eye(2)))

    def test_rejects_bad_shapes(self):
        with self.assertRaises(ContractViolation):
            Ellipse([0.0, 0.0, 0.0], np.eye(2))
        with self.assertRaises(ContractViolation):
            Ellipse([0.0, 0.0], np.eye(3))


if __name__ == "__main__":
    unittest.main()
