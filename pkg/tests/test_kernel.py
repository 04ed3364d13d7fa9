"""Kernel evaluation, gram assembly, and log-space gradient tests."""

import math

import numpy as np
import pytest

from gpgrade import Hyperparams, InputError, kernel_matrix, pairwise_sq_dists, rbf_eval
from gpgrade.kernel import NOISE_VARIANCE_FLOOR, kernel_matrix_gradients


def hp_of(length_scale=1.0, signal_variance=1.0, noise_variance=1.0):
    return Hyperparams(
        math.log(length_scale), math.log(signal_variance), math.log(noise_variance)
    )


class TestHyperparams:
    def test_log_roundtrip(self):
        hp = Hyperparams(0.3, -1.2, -5.0)
        again = Hyperparams.from_log_array(hp.to_log_array())
        assert again == hp

    def test_exponentiated_values(self):
        hp = hp_of(2.0, 3.0, 0.5)
        assert hp.length_scale == pytest.approx(2.0)
        assert hp.signal_variance == pytest.approx(3.0)
        assert hp.noise_variance == pytest.approx(0.5)

    def test_noise_floor(self):
        hp = Hyperparams(0.0, 0.0, math.log(1e-12))
        assert hp.noise_variance == NOISE_VARIANCE_FLOOR

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            Hyperparams(float("nan"), 0.0, 0.0)
        with pytest.raises(InputError):
            Hyperparams(0.0, float("inf"), 0.0)


class TestRbfEval:
    def test_zero_distance_is_signal_variance(self):
        x = np.array([1.0, -2.0, 0.5])
        assert rbf_eval(x, x, hp_of()) == 1.0
        assert rbf_eval(x, x, hp_of(signal_variance=3.0)) == pytest.approx(3.0)

    def test_unit_hyperparams_at_distance_two(self):
        value = rbf_eval(np.array([0.0]), np.array([2.0]), hp_of())
        assert value == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_scaled_hyperparams(self):
        value = rbf_eval(
            np.array([0.0]), np.array([2.0]), hp_of(length_scale=2.0, signal_variance=3.0)
        )
        assert value == pytest.approx(3.0 * math.exp(-0.5), rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            rbf_eval(np.array([0.0, 1.0]), np.array([0.0]), hp_of())

    def test_bounded_by_signal_variance(self):
        rng = np.random.default_rng(0)
        hp = hp_of(signal_variance=2.5)
        for _ in range(50):
            v = rbf_eval(rng.normal(size=4), rng.normal(size=4), hp)
            assert 0.0 < v <= 2.5


class TestPairwiseSqDists:
    def test_matches_direct_loop(self):
        rng = np.random.default_rng(42)
        A = rng.normal(size=(5, 3))
        B = rng.normal(size=(4, 3))
        S = pairwise_sq_dists(A, B)
        for i in range(5):
            for j in range(4):
                expect = float(np.sum((A[i] - B[j]) ** 2))
                np.testing.assert_allclose(S[i, j], expect, rtol=1e-12, atol=1e-12)

    def test_self_distances_exactly_symmetric(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(30, 6))
        S = pairwise_sq_dists(A)
        assert np.array_equal(S, S.T)
        assert np.array_equal(np.diag(S), np.zeros(30))

    def test_never_negative(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(20, 4)) * 1e-8
        S = pairwise_sq_dists(A, A + 1e-12)
        assert (S >= 0.0).all()


class TestKernelMatrix:
    def test_single_row(self):
        A = np.array([[1.0, 2.0]])
        K = kernel_matrix(A, A, hp_of(signal_variance=2.0))
        np.testing.assert_allclose(K, [[2.0]])

    def test_identical_rows(self):
        A = np.array([[1.0, 2.0], [1.0, 2.0]])
        K = kernel_matrix(A, A, hp_of(signal_variance=3.0))
        np.testing.assert_allclose(K, np.full((2, 2), 3.0))

    def test_matches_scalar_evaluation(self):
        rng = np.random.default_rng(42)
        A = rng.normal(size=(5, 3))
        B = rng.normal(size=(4, 3))
        hp = hp_of(length_scale=1.3, signal_variance=0.7)
        K = kernel_matrix(A, B, hp)
        for i in range(5):
            for j in range(4):
                np.testing.assert_allclose(
                    K[i, j], rbf_eval(A[i], B[j], hp), rtol=1e-12, atol=1e-12
                )

    def test_exact_symmetry_and_diagonal(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(25, 5))
        hp = hp_of(signal_variance=1.7)
        K = kernel_matrix(A, A, hp)
        assert np.array_equal(K, K.T)
        assert np.array_equal(np.diag(K), np.full(25, hp.signal_variance))

    def test_entries_bounded(self):
        rng = np.random.default_rng(4)
        A = rng.normal(size=(15, 3))
        hp = hp_of(signal_variance=2.0)
        K = kernel_matrix(A, A, hp)
        assert (K > 0.0).all()
        assert (K <= 2.0).all()

    def test_positive_semidefinite_with_tiny_jitter(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(12, 4))
        hp = hp_of(signal_variance=1.5)
        K = kernel_matrix(A, A, hp) + 1e-10 * hp.signal_variance * np.eye(12)
        np.linalg.cholesky(K)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            kernel_matrix(np.zeros((2, 3)), np.zeros((2, 4)), hp_of())


class TestKernelGradients:
    def test_length_scale_gradient_zero_on_diagonal(self):
        rng = np.random.default_rng(6)
        A = rng.normal(size=(8, 3))
        d_len, _ = kernel_matrix_gradients(A, hp_of(length_scale=1.7))
        np.testing.assert_array_equal(np.diag(d_len), np.zeros(8))

    def test_signal_gradient_diagonal_is_signal_variance(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(8, 3))
        _, d_sig = kernel_matrix_gradients(A, hp_of(signal_variance=2.4))
        np.testing.assert_allclose(np.diag(d_sig), np.full(8, 2.4))

    def test_gradients_symmetric(self):
        rng = np.random.default_rng(8)
        A = rng.normal(size=(10, 4))
        d_len, d_sig = kernel_matrix_gradients(A, hp_of(0.9, 1.4))
        assert np.array_equal(d_len, d_len.T)
        assert np.array_equal(d_sig, d_sig.T)

    def test_matches_finite_differences(self):
        """Central differences on each log-parameter, step 1e-5."""
        rng = np.random.default_rng(7)
        A = rng.normal(size=(6, 4))
        theta = np.array([0.2, 0.4, 0.0])
        d_len, d_sig = kernel_matrix_gradients(A, Hyperparams.from_log_array(theta))
        step = 1e-5
        for index, analytic in ((0, d_len), (1, d_sig)):
            plus = theta.copy()
            plus[index] += step
            minus = theta.copy()
            minus[index] -= step
            K_plus = kernel_matrix(A, A, Hyperparams.from_log_array(plus))
            K_minus = kernel_matrix(A, A, Hyperparams.from_log_array(minus))
            fd = (K_plus - K_minus) / (2.0 * step)
            rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-12)
            assert rel.max() < 1e-6
