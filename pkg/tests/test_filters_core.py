import unittest

import numpy as np

from elliptrack.errors import ContractViolation, NumericalSingularityError
from elliptrack.filters_core import (
    GaussianState,
    InformationState,
    LinearMeasurementModel,
    from_information,
    information_batch_update,
    kalman_update,
    to_information,
)
from tests.test_utils import assert_rel_close, random_spd


def fold_kalman(state, model, batch):
    for y in batch:
        state = kalman_update(state, model, y)
    return state


def random_instance(rng, n, m, L):
    state = GaussianState(rng.normal(size=n), random_spd(rng, n, scale=4.0))
    model = LinearMeasurementModel(rng.normal(size=(m, n)), random_spd(rng, m))
    batch = rng.normal(size=(L, m)) * 3.0
    return state, model, batch


class TestStateInvariants(unittest.TestCase):
    """Symmetry is enforced on construction, definiteness at update time"""

    def test_asymmetric_covariance_rejected(self):
        with self.assertRaises(ContractViolation) as ctx:
            GaussianState([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
        self.assertEqual(ctx.exception.exit_code, 2)
        with self.assertRaises(ContractViolation):
            LinearMeasurementModel(np.eye(2), [[1.0, 0.0], [0.1, 1.0]])
        with self.assertRaises(ContractViolation):
            InformationState([0.0, 0.0], [[2.0, 1.0], [-1.0, 2.0]])

    def test_rounding_asymmetry_accepted(self):
        cov = np.array([[2.0, 0.3], [0.3 + 1e-14, 1.0]])
        state = GaussianState([0.0, 0.0], cov)
        np.testing.assert_array_equal(state.cov, cov)

    def test_indefinite_prior_fails_as_singularity(self):
        state = GaussianState([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])
        model = LinearMeasurementModel(np.eye(2), np.eye(2))
        with self.assertRaises(NumericalSingularityError):
            information_batch_update(state, model, np.ones((2, 2)))


class TestKalmanUpdate(unittest.TestCase):
    """Sequential Kalman update"""

    def test_scalar_closed_form(self):
        state = GaussianState([0.0], [[1.0]])
        model = LinearMeasurementModel([[1.0]], [[1.0]])
        posterior = kalman_update(state, model, [2.0])
        self.assertAlmostEqual(posterior.mean[0], 1.0, places=12)
        self.assertAlmostEqual(posterior.cov[0, 0], 0.5, places=12)

    def test_zero_observation_matrix_keeps_prior(self):
        rng = np.random.default_rng(1)
        state = GaussianState(rng.normal(size=3), random_spd(rng, 3))
        model = LinearMeasurementModel(np.zeros((2, 3)), np.eye(2))
        posterior = kalman_update(state, model, [5.0, -7.0])
        np.testing.assert_array_equal(posterior.mean, state.mean)
        np.testing.assert_allclose(posterior.cov, state.cov, rtol=1e-14)

    def test_two_updates_match_batch(self):
        rng = np.random.default_rng(2)
        state, model, batch = random_instance(rng, 4, 2, 2)
        sequential = fold_kalman(state, model, batch)
        batched = information_batch_update(state, model, batch)
        assert_rel_close(batched.mean, sequential.mean, 1e-9)
        assert_rel_close(batched.cov, sequential.cov, 1e-9)

    def test_posterior_not_larger_than_prior(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            state, model, batch = random_instance(rng, 5, 2, 1)
            posterior = kalman_update(state, model, batch[0])
            eigvals = np.linalg.eigvalsh(state.cov - posterior.cov)
            self.assertGreaterEqual(eigvals.min(), -1e-9)

    def test_posterior_is_symmetric(self):
        rng = np.random.default_rng(4)
        state, model, batch = random_instance(rng, 6, 3, 1)
        posterior = kalman_update(state, model, batch[0])
        asymmetry = np.max(np.abs(posterior.cov - posterior.cov.T))
        self.assertLess(asymmetry, 1e-12 * np.max(np.abs(posterior.cov)))

    def test_dimension_mismatch(self):
        state = GaussianState(np.zeros(3), np.eye(3))
        model = LinearMeasurementModel(np.ones((2, 4)), np.eye(2))
        with self.assertRaises(ContractViolation):
            kalman_update(state, model, [1.0, 2.0])
        model = LinearMeasurementModel(np.ones((2, 3)), np.eye(2))
        with self.assertRaises(ContractViolation):
            kalman_update(state, model, [1.0, 2.0, 3.0])

    def test_singular_innovation_names_matrix(self):
        state = GaussianState(np.zeros(2), np.zeros((2, 2)))
        model = LinearMeasurementModel(np.eye(2), np.zeros((2, 2)))
        with self.assertRaises(NumericalSingularityError) as ctx:
            kalman_update(state, model, [1.0, 1.0])
        self.assertEqual(ctx.exception.context["matrix"], "innovation covariance")
        self.assertEqual(ctx.exception.exit_code, 3)


class TestInformationForm(unittest.TestCase):
    """Conversions between moment and information form"""

    def test_identity_covariance(self):
        info = to_information(GaussianState([2.0, 0.0], np.eye(2)))
        np.testing.assert_allclose(info.info_vector, [2.0, 0.0])
        np.testing.assert_allclose(info.info_matrix, np.eye(2))

    def test_zero_mean(self):
        rng = np.random.default_rng(5)
        info = to_information(GaussianState(np.zeros(3), random_spd(rng, 3)))
        np.testing.assert_allclose(info.info_vector, np.zeros(3), atol=1e-15)

    def test_diagonal_example(self):
        info = to_information(GaussianState([1.0, 1.0], np.diag([4.0, 0.25])))
        np.testing.assert_allclose(info.info_vector, [0.25, 4.0])
        np.testing.assert_allclose(info.info_matrix, np.diag([0.25, 4.0]))

    def test_from_information_examples(self):
        state = from_information(InformationState(np.zeros(2), np.eye(2)))
        np.testing.assert_allclose(state.mean, np.zeros(2))
        np.testing.assert_allclose(state.cov, np.eye(2))

        state = from_information(
            InformationState([0.25, 4.0], np.diag([0.25, 4.0]))
        )
        np.testing.assert_allclose(state.mean, [1.0, 1.0])
        np.testing.assert_allclose(state.cov, np.diag([4.0, 0.25]))

    def test_round_trip(self):
        rng = np.random.default_rng(6)
        for n in range(1, 9):
            state = GaussianState(rng.normal(size=n), random_spd(rng, n))
            back = from_information(to_information(state))
            assert_rel_close(back.mean, state.mean, 1e-9)
            assert_rel_close(back.cov, state.cov, 1e-9)

    def test_singular_covariance(self):
        with self.assertRaises(NumericalSingularityError):
            to_information(GaussianState([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]]))
        with self.assertRaises(NumericalSingularityError):
            from_information(InformationState([0.0, 0.0], np.zeros((2, 2))))


class TestInformationBatchUpdate(unittest.TestCase):
    """Batch information update against the sequential Kalman oracle"""

    def test_empty_batch_returns_prior(self):
        state = GaussianState([1.0, 2.0], np.eye(2))
        model = LinearMeasurementModel(np.eye(2), np.eye(2))
        self.assertIs(information_batch_update(state, model, []), state)

    def test_two_identical_scalar_measurements(self):
        state = GaussianState([0.0], [[1.0]])
        model = LinearMeasurementModel([[1.0]], [[1.0]])
        posterior = information_batch_update(state, model, [[2.0], [2.0]])
        self.assertAlmostEqual(posterior.mean[0], 4.0 / 3.0, places=12)
        self.assertAlmostEqual(posterior.cov[0, 0], 1.0 / 3.0, places=12)

    def test_fifty_measurements_match_chained_updates(self):
        rng = np.random.default_rng(7)
        state, model, batch = random_instance(rng, 6, 2, 50)
        sequential = fold_kalman(state, model, batch)
        batched = information_batch_update(state, model, batch)
        assert_rel_close(batched.mean, sequential.mean, 1e-8)
        assert_rel_close(batched.cov, sequential.cov, 1e-8)

    def test_batch_sequential_equivalence_property(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            m = int(rng.integers(1, 4))
            L = int(rng.integers(0, 101))
            state, model, batch = random_instance(rng, n, m, L)
            sequential = fold_kalman(state, model, batch)
            batched = information_batch_update(state, model, batch)
            assert_rel_close(batched.mean, sequential.mean, 1e-8, "mean")
            assert_rel_close(batched.cov, sequential.cov, 1e-8, "cov")

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        state, model, batch = random_instance(rng, 6, 2, 100)
        reference = information_batch_update(state, model, batch)
        for _ in range(10):
            shuffled = information_batch_update(
                state, model, batch[rng.permutation(len(batch))]
            )
            assert_rel_close(shuffled.mean, reference.mean, 1e-10)
            assert_rel_close(shuffled.cov, reference.cov, 1e-10)

    def test_ill_conditioned_prior_is_accepted(self):
        # prior pivot ratio 1e-13, below the guard applied to R
        c, s = np.cos(0.3), np.sin(0.3)
        rotation = np.array([[c, -s], [s, c]])
        state = GaussianState(
            [1.0, 2.0], rotation @ np.diag([1.0, 1e-13]) @ rotation.T
        )
        model = LinearMeasurementModel(np.eye(2), np.eye(2))
        batch = np.array([[1.5, 2.5], [0.5, 1.0], [2.0, 2.0]])
        sequential = fold_kalman(state, model, batch)
        batched = information_batch_update(state, model, batch)
        assert_rel_close(batched.mean, sequential.mean, 1e-6)
        assert_rel_close(batched.cov, sequential.cov, 1e-6)

    def test_wrong_measurement_length(self):
        state = GaussianState(np.zeros(2), np.eye(2))
        model = LinearMeasurementModel(np.eye(2), np.eye(2))
        with self.assertRaises(ContractViolation):
            information_batch_update(state, model, np.ones((3, 3)))

    def test_singular_noise(self):
        state = GaussianState(np.zeros(2), np.eye(2))
        model = LinearMeasurementModel(np.eye(2), np.zeros((2, 2)))
        with self.assertRaises(NumericalSingularityError) as ctx:
            information_batch_update(state, model, np.ones((3, 2)))
        self.assertEqual(ctx.exception.context["matrix"], "R")


if __name__ == "__main__":
    unittest.main()
