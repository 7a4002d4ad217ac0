"""Tests for base transforms and the block-diagonal beam slicer."""

import numpy as np
import pytest

from beamslice.transforms import (
    TransformKind,
    build_base_transform,
    build_beamslicer,
    default_rotations,
    effective_beam_frequencies,
)

ALL_KINDS = list(TransformKind)


class TestBaseTransforms:
    def test_two_point_dft(self):
        expected = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        np.testing.assert_allclose(
            build_base_transform(TransformKind.DFT, 2), expected, atol=1e-15
        )

    def test_two_point_hadamard_matches_dft(self):
        np.testing.assert_allclose(
            build_base_transform(TransformKind.HADAMARD, 2),
            build_base_transform(TransformKind.DFT, 2),
            atol=1e-15,
        )

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_unitary_size_8(self, kind):
        t = build_base_transform(kind, 8)
        np.testing.assert_allclose(t.conj().T @ t, np.eye(8), atol=1e-12)

    @pytest.mark.parametrize("kind", [TransformKind.DFT, TransformKind.HARTLEY, TransformKind.DCT])
    def test_unitary_non_pow2(self, kind):
        t = build_base_transform(kind, 6)
        np.testing.assert_allclose(t.conj().T @ t, np.eye(6), atol=1e-12)

    @pytest.mark.parametrize(
        "kind", [TransformKind.HAAR, TransformKind.HADAMARD, TransformKind.NOISELET]
    )
    def test_pow2_kinds_reject_odd_sizes(self, kind):
        with pytest.raises(ValueError):
            build_base_transform(kind, 6)

    def test_rejects_nonpositive_size(self):
        with pytest.raises(ValueError):
            build_base_transform(TransformKind.DFT, 0)

    @pytest.mark.parametrize(
        "kind",
        [TransformKind.HAAR, TransformKind.HADAMARD, TransformKind.HARTLEY, TransformKind.DCT],
    )
    def test_real_transforms_are_real(self, kind):
        t = build_base_transform(kind, 8)
        assert np.all(t.imag == 0)

    def test_from_string(self):
        assert TransformKind.from_string("DFT") is TransformKind.DFT
        with pytest.raises(ValueError):
            TransformKind.from_string("wavelet")


class TestDefaultRotations:
    def test_b8_c2(self):
        np.testing.assert_allclose(default_rotations(8, 2), [0.0, np.pi / 4])

    def test_single_cluster(self):
        np.testing.assert_allclose(default_rotations(16, 1), [0.0])

    def test_b256_c32_last_angle(self):
        phis = default_rotations(256, 32)
        assert phis[-1] == pytest.approx(2 * np.pi / 256 * 31)

    def test_rejects_nondivisor(self):
        with pytest.raises(ValueError):
            default_rotations(8, 3)


class TestBuildBeamSlicer:
    def test_s1_dft_is_identity(self):
        slicer = build_beamslicer(TransformKind.DFT, 1, 8)
        np.testing.assert_array_equal(slicer.matrix(), np.eye(8))

    def test_full_cluster_is_plain_dft(self):
        b = 16
        slicer = build_beamslicer(TransformKind.DFT, b, b, phis=np.zeros(1))
        f = build_base_transform(TransformKind.DFT, b)
        np.testing.assert_allclose(slicer.matrix(), f, atol=1e-12)

    def test_rotated_block_entry(self):
        # B=8, S=4: second cluster rotates by 2*pi/8; the (1,2) entry of V_2
        # is the constant first DFT row (1/2) times e^{-i*pi/4}.
        slicer = build_beamslicer(TransformKind.DFT, 4, 8)
        v2 = slicer.blocks[1]
        assert v2[0, 1] == pytest.approx(0.5 * np.exp(-1j * np.pi / 4))

    def test_divisibility_error(self):
        with pytest.raises(ValueError):
            build_beamslicer(TransformKind.DFT, 3, 8)

    def test_rotation_count_error(self):
        with pytest.raises(ValueError):
            build_beamslicer(TransformKind.DFT, 4, 8, phis=np.zeros(3))

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("s", [1, 2, 4, 8])
    def test_unitarity_grid(self, kind, s):
        slicer = build_beamslicer(kind, s, 16)
        v = slicer.matrix()
        err = np.linalg.norm(v.conj().T @ v - np.eye(16))
        assert err <= 1e-10

    def test_block_locality(self):
        slicer = build_beamslicer(TransformKind.DFT, 4, 16)
        v = slicer.matrix()
        mask = np.zeros((16, 16), dtype=bool)
        for c in range(4):
            mask[4 * c : 4 * (c + 1), 4 * c : 4 * (c + 1)] = True
        assert np.all(v[~mask] == 0)
        assert np.count_nonzero(mask) == 4 * 16  # C * S^2


class TestApply:
    def test_identity_case(self):
        slicer = build_beamslicer(TransformKind.DFT, 1, 8)
        y = np.arange(8) + 1j * np.arange(8)
        np.testing.assert_array_equal(slicer.apply(y), y)

    def test_basis_vector_full_dft(self):
        b = 8
        slicer = build_beamslicer(TransformKind.DFT, b, b, phis=np.zeros(1))
        e1 = np.zeros(b, dtype=complex)
        e1[0] = 1.0
        f = build_base_transform(TransformKind.DFT, b)
        np.testing.assert_allclose(slicer.apply(e1), f[:, 0], atol=1e-14)

    def test_isometry_random_vectors(self):
        rng = np.random.default_rng(0)
        slicer = build_beamslicer(TransformKind.DFT, 8, 32)
        for _ in range(100):
            y = rng.normal(size=32) + 1j * rng.normal(size=32)
            assert np.linalg.norm(slicer.apply(y)) == pytest.approx(
                np.linalg.norm(y), abs=1e-12
            )

    def test_matrix_argument_matches_dense(self):
        rng = np.random.default_rng(1)
        slicer = build_beamslicer(TransformKind.HAAR, 4, 16)
        y = rng.normal(size=(16, 5)) + 1j * rng.normal(size=(16, 5))
        np.testing.assert_allclose(slicer.apply(y), slicer.matrix() @ y, atol=1e-12)

    def test_dimension_mismatch(self):
        slicer = build_beamslicer(TransformKind.DFT, 4, 16)
        with pytest.raises(ValueError):
            slicer.apply(np.ones(8))


class TestBeamFrequencies:
    def test_default_rotations_cover_all(self):
        slicer = build_beamslicer(TransformKind.DFT, 4, 8)
        freqs = np.sort(effective_beam_frequencies(slicer))
        np.testing.assert_allclose(freqs, 2 * np.pi * np.arange(8) / 8, atol=1e-12)

    def test_zero_rotations_repeat(self):
        slicer = build_beamslicer(TransformKind.DFT, 4, 8, phis=np.zeros(2))
        freqs = effective_beam_frequencies(slicer)
        uniq = np.unique(np.round(freqs, 12))
        assert len(uniq) == 4  # S distinct frequencies, each repeated C times

    def test_full_cluster_same_coverage(self):
        b = 8
        slicer = build_beamslicer(TransformKind.DFT, b, b)
        freqs = np.sort(effective_beam_frequencies(slicer))
        np.testing.assert_allclose(freqs, 2 * np.pi * np.arange(b) / b, atol=1e-12)

    def test_non_dft_unsupported(self):
        slicer = build_beamslicer(TransformKind.HAAR, 4, 8)
        with pytest.raises(ValueError):
            effective_beam_frequencies(slicer)
