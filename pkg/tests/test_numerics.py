import numpy as np
import pytest

from dstc_sim.numerics import (
    CholeskyFactor,
    DimensionMismatch,
    FactorizationFailure,
    SeededStream,
    cholesky_psd,
    haar_orthogonal,
    haar_unitary,
    quad_form,
)


class TestHaarOrthogonal:
    def test_one_dimensional_is_sign(self):
        values = {float(haar_orthogonal(1, SeededStream(s))[0, 0]) for s in range(20)}
        assert values <= {1.0, -1.0}
        assert len(values) == 2  # both signs occur

    @pytest.mark.parametrize("t", [1, 2, 3, 5, 8])
    def test_orthogonality(self, t):
        g = SeededStream(1).generator()
        for _ in range(10):
            a = haar_orthogonal(t, g)
            assert np.max(np.abs(a @ a.T - np.eye(t))) <= 1e-10

    def test_entry_variance_matches_one_over_t(self):
        # 1000 draws at t=5: per-entry sample variance should sit near 1/5
        g = SeededStream(2).generator()
        draws = np.stack([haar_orthogonal(5, g) for _ in range(1000)])
        variances = draws.var(axis=0)
        assert variances.min() >= 0.18
        assert variances.max() <= 0.22

    def test_reproducible_and_streams_independent(self):
        a = haar_orthogonal(4, SeededStream(7, stream=3))
        b = haar_orthogonal(4, SeededStream(7, stream=3))
        c = haar_orthogonal(4, SeededStream(7, stream=4))
        np.testing.assert_array_equal(a, b)
        assert np.max(np.abs(a - c)) > 1e-3

    def test_rejects_zero_dimension(self):
        with pytest.raises(ValueError):
            haar_orthogonal(0, SeededStream(0))


class TestHaarUnitary:
    def test_one_dimensional_has_unit_modulus(self):
        a = haar_unitary(1, SeededStream(5))
        assert abs(abs(a[0, 0]) - 1.0) <= 1e-12

    @pytest.mark.parametrize("t", [1, 2, 3, 6])
    def test_unitarity(self, t):
        g = SeededStream(6).generator()
        for _ in range(10):
            a = haar_unitary(t, g)
            assert np.max(np.abs(a @ a.conj().T - np.eye(t))) <= 1e-10

    def test_columns_pairwise_orthogonal(self):
        a = haar_unitary(3, SeededStream(8))
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(np.vdot(a[:, i], a[:, j])) <= 1e-10


class TestCholeskyPsd:
    def test_identity(self):
        factor = cholesky_psd(np.eye(4))
        np.testing.assert_allclose(factor.lower, np.eye(4))
        assert factor.jitter == 0.0

    def test_scalar_square_root(self):
        factor = cholesky_psd(np.array([[4.0]]))
        assert factor.lower[0, 0] == pytest.approx(2.0)

    def test_reconstruction(self):
        g = SeededStream(9).generator()
        b = g.standard_normal((3, 3)) + 1j * g.standard_normal((3, 3))
        p = b @ b.conj().T + np.eye(3)
        factor = cholesky_psd(p)
        assert np.max(np.abs(factor.lower @ factor.lower.conj().T - p)) <= 1e-9

    def test_jitter_rescues_semidefinite(self):
        v = np.array([1.0 + 1j, 2.0 - 1j, 0.5])
        p = np.outer(v, v.conj())  # rank one, exactly singular
        factor = cholesky_psd(p)
        assert factor.jitter in (0.0, 1e-12, 1e-10, 1e-8)
        recon = factor.lower @ factor.lower.conj().T
        assert np.max(np.abs(recon - p)) <= 1e-7

    def test_non_hermitian_rejected(self):
        p = np.eye(3) + 0.0j
        p[0, 1] = 1e-3
        with pytest.raises(FactorizationFailure):
            cholesky_psd(p)

    def test_indefinite_exhausts_ladder(self):
        with pytest.raises(FactorizationFailure):
            cholesky_psd(-np.eye(3))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionMismatch):
            cholesky_psd(np.ones((2, 3)))


class TestQuadForm:
    def test_identity_covariance_gives_squared_norm(self):
        factor = cholesky_psd(np.eye(2))
        assert quad_form(np.array([1.0, 1j]), np.zeros(2), factor) == pytest.approx(2.0)

    def test_scalar_case(self):
        factor = cholesky_psd(np.array([[4.0]]))
        assert quad_form(np.array([2.0]), np.array([0.0]), factor) == pytest.approx(1.0)

    def test_matches_dense_inverse_oracle(self):
        g = SeededStream(10).generator()
        for dim in (2, 4, 5, 8, 10):
            b = g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))
            p = b @ b.conj().T + np.eye(dim)
            y = g.standard_normal(dim) + 1j * g.standard_normal(dim)
            m = g.standard_normal(dim) + 1j * g.standard_normal(dim)
            oracle = float(np.real((y - m).conj() @ np.linalg.inv(p) @ (y - m)))
            value = quad_form(y, m, cholesky_psd(p))
            assert value == pytest.approx(oracle, rel=1e-8)
            assert value >= 0.0

    def test_zero_iff_equal(self):
        factor = cholesky_psd(np.eye(3))
        y = np.array([1.0, 2.0, 3.0 + 1j])
        assert quad_form(y, y.copy(), factor) <= 1e-9

    def test_accepts_bare_lower_triangle(self):
        lower = np.linalg.cholesky(np.eye(2) * 9.0)
        assert quad_form(np.array([3.0, 0.0]), np.zeros(2), lower) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        factor = cholesky_psd(np.eye(3))
        with pytest.raises(DimensionMismatch):
            quad_form(np.zeros(2), np.zeros(3), factor)
        with pytest.raises(DimensionMismatch):
            quad_form(np.zeros(2), np.zeros(2), factor)


class TestSeededStream:
    def test_bit_identical_replay(self):
        s = SeededStream(123, stream=9)
        a = s.generator().standard_normal(16)
        b = s.generator().standard_normal(16)
        np.testing.assert_array_equal(a, b)

    def test_factor_dataclass_roundtrip(self):
        factor = cholesky_psd(np.eye(2))
        assert isinstance(factor, CholeskyFactor)
        assert factor.jitter == 0.0
