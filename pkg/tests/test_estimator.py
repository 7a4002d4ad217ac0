"""Tests for jammer covariance, projection, and channel estimation."""

import numpy as np
import pytest

from beamslice.estimator import (
    NoJammerDetectedError,
    ProjectionMatrix,
    estimate_jammer_covariance,
    estimate_projection,
    ls_channel_estimate,
    pilot_matrix,
    project_channel,
)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


class TestPilotMatrix:
    def test_single_ue(self):
        s_p = pilot_matrix(1, es=2.0)
        np.testing.assert_allclose(s_p, [[np.sqrt(2.0)]])

    @pytest.mark.parametrize("u", [1, 2, 7, 32])
    def test_orthogonality(self, u):
        s_p = pilot_matrix(u, es=1.5)
        err = np.linalg.norm(s_p @ s_p.conj().T - u * 1.5 * np.eye(u))
        assert err <= 1e-10

    def test_constant_modulus(self):
        s_p = pilot_matrix(2, es=1.0)
        np.testing.assert_allclose(np.abs(s_p), 1.0, atol=1e-12)

    def test_rejects_zero_ues(self):
        with pytest.raises(ValueError):
            pilot_matrix(0)


class TestJammerCovariance:
    def test_rank_one_noiseless(self):
        rng = np.random.default_rng(0)
        j = crandn(rng, 6)
        s = crandn(rng, 12)
        c_hat = estimate_jammer_covariance(np.outer(j, s.conj()), 12)
        expected = np.sum(np.abs(s) ** 2) / 12 * np.outer(j, j.conj())
        np.testing.assert_allclose(c_hat, expected, atol=1e-12)
        assert np.linalg.matrix_rank(c_hat, tol=1e-10) == 1

    def test_zero_receive(self):
        c_hat = estimate_jammer_covariance(np.zeros((4, 8)), 8)
        np.testing.assert_array_equal(c_hat, 0.0)

    def test_hermitian_psd(self):
        rng = np.random.default_rng(1)
        r = crandn(rng, 8, 16)
        c_hat = estimate_jammer_covariance(r, 16)
        np.testing.assert_allclose(c_hat, c_hat.conj().T, atol=1e-12)
        eig = np.linalg.eigvalsh(c_hat)
        assert eig.min() >= -1e-10

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            estimate_jammer_covariance(np.zeros((4, 8)), 7)


class TestProjectionEstimate:
    def test_diagonal_case(self):
        c = np.zeros((4, 4), dtype=complex)
        c[0, 0] = 2.5
        p = estimate_projection(c).p
        np.testing.assert_allclose(p, np.diag([0.0, 1.0, 1.0, 1.0]), atol=1e-14)

    def test_rank_one_idempotent_and_nulling(self):
        rng = np.random.default_rng(2)
        j = crandn(rng, 8)
        c = 3.7 * np.outer(j, j.conj())
        p = estimate_projection(c).p
        np.testing.assert_allclose(p @ p, p, atol=1e-10)
        np.testing.assert_allclose(p @ j, 0.0, atol=1e-10)

    def test_trace_identity_regardless_of_rank(self):
        rng = np.random.default_rng(3)
        r = crandn(rng, 8, 16)
        c_hat = estimate_jammer_covariance(r, 16)
        p = estimate_projection(c_hat).p
        assert np.trace(p).real == pytest.approx(7.0, abs=1e-10)

    def test_below_threshold_signals_no_jammer(self):
        with pytest.raises(NoJammerDetectedError):
            estimate_projection(np.zeros((4, 4)))

    def test_projection_lemma_oracle(self):
        # Noiseless, unquantized: the estimated projector equals the exact
        # orthogonal-complement projector of the jammer channel.
        rng = np.random.default_rng(4)
        for _ in range(100):
            j = crandn(rng, 8)
            s = crandn(rng, 32)
            c_hat = estimate_jammer_covariance(np.outer(j, s.conj()), 32)
            p = estimate_projection(c_hat).p
            exact = np.eye(8) - np.outer(j, j.conj()) / np.sum(np.abs(j) ** 2)
            np.testing.assert_allclose(p, exact, atol=1e-9)
            np.testing.assert_allclose(p @ p, p, atol=1e-10)

    def test_consistency_with_training_length(self):
        # With thermal noise (no quantization), longer jammer training pulls
        # the normalized covariance toward the true rank-1 direction.
        rng = np.random.default_rng(5)
        b = 16
        dist = {n: [] for n in (8, 64, 512)}
        for _ in range(50):
            j = crandn(rng, b)
            target = np.outer(j, j.conj()) / np.sum(np.abs(j) ** 2)
            for n in dist:
                s = crandn(rng, n) * np.sqrt(10.0)  # 10 dB above the noise
                y = np.outer(j, s.conj()) + crandn(rng, b, n) / np.sqrt(2)
                c_hat = estimate_jammer_covariance(y, n)
                c_norm = c_hat / np.linalg.norm(c_hat)
                dist[n].append(np.linalg.norm(c_norm - target))
        means = [np.mean(dist[n]) for n in (8, 64, 512)]
        assert means[0] > means[1] > means[2]


class TestChannelEstimate:
    def test_noiseless_recovery(self):
        rng = np.random.default_rng(6)
        h = crandn(rng, 8, 3)
        s_p = pilot_matrix(3, es=1.0)
        h_hat = ls_channel_estimate(h @ s_p, s_p, 3, 1.0)
        np.testing.assert_allclose(h_hat, h, atol=1e-12)

    def test_zero_receive(self):
        s_p = pilot_matrix(3)
        h_hat = ls_channel_estimate(np.zeros((8, 3)), s_p, 3, 1.0)
        np.testing.assert_array_equal(h_hat, 0.0)

    def test_single_ue_scalar_pilot(self):
        rng = np.random.default_rng(7)
        r_p = crandn(rng, 8, 1)
        s_p = pilot_matrix(1, es=2.0)
        h_hat = ls_channel_estimate(r_p, s_p, 1, 2.0)
        np.testing.assert_allclose(h_hat, r_p * np.conj(s_p[0, 0]) / 2.0, atol=1e-12)

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            ls_channel_estimate(np.zeros((8, 3)), pilot_matrix(4), 4, 1.0)


class TestProjectChannel:
    def test_identity_projection(self):
        rng = np.random.default_rng(8)
        h = crandn(rng, 6, 2)
        p = ProjectionMatrix(p=np.eye(6))
        np.testing.assert_array_equal(project_channel(p, h), h)

    def test_kernel_of_projector(self):
        rng = np.random.default_rng(9)
        j = crandn(rng, 6)
        v = crandn(rng, 2)
        h = np.outer(j, v.conj())
        p = ProjectionMatrix(p=np.eye(6) - np.outer(j, j.conj()) / np.sum(np.abs(j) ** 2))
        np.testing.assert_allclose(project_channel(p, h), 0.0, atol=1e-12)

    def test_idempotence(self):
        rng = np.random.default_rng(10)
        j = crandn(rng, 6)
        h = crandn(rng, 6, 3)
        p = ProjectionMatrix(p=np.eye(6) - np.outer(j, j.conj()) / np.sum(np.abs(j) ** 2))
        once = project_channel(p, h)
        twice = project_channel(p, once)
        np.testing.assert_allclose(twice, once, atol=1e-10)
