import math
import unittest

import numpy as np

from elliptrack.errors import ContractViolation
from elliptrack.mem_model import (
    MemNoiseConfig,
    ShapeParams,
    linearize,
    moment_matrix,
    pseudo_covariance,
    pseudo_expectation,
    pseudo_outcome,
    pseudo_outcomes,
    shape_jacobians,
    shape_matrix,
    spread_covariances,
)
from tests.test_utils import assert_within_sigma, family_sigmas, random_spd

QUARTER = 0.25 * np.eye(2)


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


class TestShapeMatrix(unittest.TestCase):
    def test_unit_circle(self):
        np.testing.assert_allclose(shape_matrix(ShapeParams(0.0, 1.0, 1.0)), np.eye(2))

    def test_quarter_turn(self):
        np.testing.assert_allclose(
            shape_matrix((math.pi / 2, 170.0, 40.0)),
            [[0.0, -40.0], [170.0, 0.0]],
            atol=1e-12,
        )

    def test_eighth_turn(self):
        r = math.sqrt(2.0)
        np.testing.assert_allclose(
            shape_matrix((math.pi / 4, 2.0, 1.0)),
            [[r, -r / 2], [r, r / 2]],
            atol=1e-12,
        )

    def test_determinant_is_area_factor(self):
        self.assertAlmostEqual(
            np.linalg.det(shape_matrix((0.7, 3.0, 2.0))), 6.0, places=12
        )

    def test_invalid_semi_axes(self):
        with self.assertRaises(ContractViolation):
            ShapeParams(0.0, 0.0, 1.0)
        with self.assertRaises(ContractViolation):
            ShapeParams.from_vector([0.0, 1.0, -2.0])


class TestShapeJacobians(unittest.TestCase):
    def test_zero_orientation(self):
        J1, J2 = shape_jacobians((0.0, 3.0, 2.0))
        np.testing.assert_allclose(J1, [[0, 1, 0], [-2, 0, 0]])
        np.testing.assert_allclose(J2, [[3, 0, 0], [0, 0, 1]])

    def test_quarter_turn(self):
        J1, J2 = shape_jacobians((math.pi / 2, 1.0, 1.0))
        np.testing.assert_allclose(J1, [[-1, 0, 0], [0, 0, -1]], atol=1e-15)
        np.testing.assert_allclose(J2, [[0, 1, 0], [-1, 0, 0]], atol=1e-15)

    def test_finite_differences(self):
        rng = np.random.default_rng(11)
        eps = 1e-5
        worst = 0.0
        for _ in range(100):
            p = np.array(
                [rng.uniform(-math.pi, math.pi), *rng.uniform(0.1, 500.0, size=2)]
            )
            J1, J2 = shape_jacobians(p)
            for k in range(3):
                step = np.zeros(3)
                step[k] = eps
                dS = (shape_matrix(p + step) - shape_matrix(p - step)) / (2 * eps)
                worst = max(
                    worst,
                    np.max(np.abs(dS[0] - J1[:, k])),
                    np.max(np.abs(dS[1] - J2[:, k])),
                )
        self.assertLess(worst, 1e-6)


class TestMomentMatrix(unittest.TestCase):
    def test_hand_evaluated(self):
        np.testing.assert_allclose(
            moment_matrix((0.0, 2.0, 1.0), QUARTER),
            [[0.0, 1.0, 0.0], [0.0, 0.0, 0.5], [0.75, 0.0, 0.0]],
            atol=1e-15,
        )

    def test_circle_has_no_orientation_row(self):
        np.testing.assert_allclose(
            moment_matrix((0.0, 1.0, 1.0), QUARTER),
            [[0.0, 0.5, 0.0], [0.0, 0.0, 0.5], [0.0, 0.0, 0.0]],
            atol=1e-15,
        )

    def test_linear_in_multiplicative_noise(self):
        rng = np.random.default_rng(12)
        p = (0.4, 5.0, 2.0)
        C_h = random_spd(rng, 2)
        np.testing.assert_allclose(
            moment_matrix(p, 3.5 * C_h), 3.5 * moment_matrix(p, C_h), rtol=1e-12
        )


class TestSpreadCovariances(unittest.TestCase):
    def test_zero_shape_uncertainty(self):
        _, C_II = spread_covariances((0.3, 4.0, 1.0), np.zeros((3, 3)), QUARTER)
        np.testing.assert_array_equal(C_II, np.zeros((2, 2)))

    def test_extent_term(self):
        C_I, _ = spread_covariances((0.0, 2.0, 1.0), np.eye(3), QUARTER)
        np.testing.assert_allclose(C_I, np.diag([1.0, 0.25]), atol=1e-15)

    def test_symmetry_and_linearity(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            p = (rng.uniform(-3, 3), *rng.uniform(1.0, 200.0, size=2))
            C_p = random_spd(rng, 3)
            C_h = random_spd(rng, 2)
            _, C_II = spread_covariances(p, C_p, C_h)
            self.assertAlmostEqual(C_II[0, 1], C_II[1, 0], delta=1e-12 * abs(C_II).max())
            self.assertGreaterEqual(np.linalg.eigvalsh(C_II).min(), -1e-9 * abs(C_II).max())
            _, doubled = spread_covariances(p, 2.0 * C_p, C_h)
            np.testing.assert_allclose(doubled, 2.0 * C_II, rtol=1e-12)

    def test_rotational_covariance(self):
        for theta in (0.3, 1.1, -2.0):
            C_I, _ = spread_covariances((0.2, 170.0, 40.0), np.eye(3), QUARTER)
            rotated, _ = spread_covariances((0.2 + theta, 170.0, 40.0), np.eye(3), QUARTER)
            R = rotation(theta)
            np.testing.assert_allclose(rotated, R @ C_I @ R.T, rtol=1e-10, atol=1e-10 * 7225)

    def test_linearize_bundles_everything(self):
        p = (0.5, 30.0, 10.0)
        C_p = np.diag([0.01, 4.0, 1.0])
        lin = linearize(p, C_p, QUARTER)
        np.testing.assert_array_equal(lin.S, shape_matrix(p))
        np.testing.assert_array_equal(lin.S1, lin.S[0])
        np.testing.assert_allclose(lin.M, moment_matrix(p, QUARTER))
        C_I, C_II = spread_covariances(p, C_p, QUARTER)
        np.testing.assert_allclose(lin.spread, C_I + C_II)


class TestPseudoMeasurement(unittest.TestCase):
    def test_outcome_examples(self):
        np.testing.assert_array_equal(pseudo_outcome([3.0, 4.0], [3.0, 4.0]), np.zeros(3))
        np.testing.assert_array_equal(pseudo_outcome([1.0, 2.0], [0.0, 0.0]), [1.0, 4.0, 2.0])
        flipped = pseudo_outcome([-1.0, -2.0], [0.0, 0.0])
        np.testing.assert_array_equal(flipped, [1.0, 4.0, 2.0])
        mixed = pseudo_outcome([-1.0, 2.0], [0.0, 0.0])
        np.testing.assert_array_equal(mixed, [1.0, 4.0, -2.0])

    def test_row_wise_outcomes(self):
        ys = np.array([[1.0, 2.0], [3.0, -1.0]])
        expected = np.vstack([pseudo_outcome(y, [0.5, 0.5]) for y in ys])
        np.testing.assert_allclose(pseudo_outcomes(ys, [0.5, 0.5]), expected)
        self.assertEqual(pseudo_outcomes(np.zeros((0, 2)), [0.0, 0.0]).shape, (0, 3))

    def test_expectation_examples(self):
        np.testing.assert_array_equal(pseudo_expectation(np.eye(2)), [1.0, 1.0, 0.0])
        np.testing.assert_array_equal(
            pseudo_expectation([[4.0, 1.0], [1.0, 9.0]]), [4.0, 9.0, 1.0]
        )

    def test_covariance_examples(self):
        np.testing.assert_allclose(pseudo_covariance(np.eye(2)), np.diag([2.0, 2.0, 1.0]))
        np.testing.assert_allclose(
            pseudo_covariance(np.diag([3.0, 0.5])), np.diag([18.0, 0.5, 1.5])
        )

    def test_covariance_matches_gaussian_fourth_moments(self):
        # Isserlis: cov(z_i z_j, z_k z_l) = C_ik C_jl + C_il C_jk
        rng = np.random.default_rng(14)
        pairs = [(0, 0), (1, 1), (0, 1)]
        for _ in range(5):
            C = random_spd(rng, 2, scale=3.0)
            expected = np.array(
                [
                    [C[i, k] * C[j, l] + C[i, l] * C[j, k] for (k, l) in pairs]
                    for (i, j) in pairs
                ]
            )
            np.testing.assert_allclose(pseudo_covariance(C), expected, rtol=1e-12)

    def test_sampling_oracle(self):
        # 5 draws x (3 mean + 9 covariance entries), 3 sigma family-wise
        sigmas = family_sigmas(60)
        rng = np.random.default_rng(15)
        draws = 1_000_000
        for _ in range(5):
            C_y = random_spd(rng, 2, scale=2.0)
            z = rng.multivariate_normal(np.zeros(2), C_y, size=draws)
            Y = pseudo_outcomes(z, np.zeros(2))

            mean = Y.mean(axis=0)
            assert_within_sigma(
                mean,
                pseudo_expectation(C_y),
                Y.std(axis=0) / math.sqrt(draws),
                sigmas,
                "pseudo-measurement mean",
            )

            centered = Y - mean
            products = centered[:, :, None] * centered[:, None, :]
            assert_within_sigma(
                products.mean(axis=0),
                pseudo_covariance(C_y),
                products.std(axis=0) / math.sqrt(draws),
                sigmas,
                "pseudo-measurement covariance",
            )


class TestMemNoiseConfig(unittest.TestCase):
    def test_defaults(self):
        noise = MemNoiseConfig().validate()
        np.testing.assert_array_equal(noise.C_h, QUARTER)
        np.testing.assert_array_equal(noise.C_v, np.diag([10000.0, 1600.0]))

    def test_rejects_non_spd(self):
        with self.assertRaises(ContractViolation):
            MemNoiseConfig(C_h=[[1.0, 2.0], [2.0, 1.0]]).validate()
        with self.assertRaises(ContractViolation):
            MemNoiseConfig(C_v=np.eye(3))


if __name__ == "__main__":
    unittest.main()
