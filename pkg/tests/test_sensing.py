"""
Test design matrix ensembles
"""

import pytest
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sensing import (
    DesignMatrix,
    MatrixKind,
    gen_gaussian_iid,
    gen_haar_row_orthogonal,
    gen_partial_fourier,
    generate_matrix,
    haar_unitary,
    power_iteration,
)
from utils.errors import InvalidDimensionError, InvalidParameterError


class TestRowOrthogonalEnsembles:
    """Partial Fourier and Haar matrices have orthonormal rows"""

    def setup_method(self):
        self.rng = np.random.default_rng(0)

    @pytest.mark.parametrize("N,M", [(16, 8), (64, 16), (128, 128), (33, 7)])
    def test_partial_fourier_rows_orthonormal(self, N, M):
        A = gen_partial_fourier(N, M, self.rng)
        assert A.entries.shape == (M, N)
        assert A.is_row_orthogonal(1e-12)
        assert A.kind == MatrixKind.PARTIAL_FOURIER

    def test_partial_fourier_rows_sorted_and_distinct(self):
        A = gen_partial_fourier(64, 20, self.rng)
        assert np.all(np.diff(A.rows) > 0)

    def test_partial_fourier_full_is_unitary_dft(self):
        """M = N recovers the unitary DFT, rows in natural order"""
        A = gen_partial_fourier(8, 8, self.rng)
        np.testing.assert_allclose(A.entries, np.fft.fft(np.eye(8), norm="ortho"), atol=1e-12)

    @pytest.mark.parametrize("N,M", [(16, 8), (40, 40), (50, 3)])
    def test_haar_rows_orthonormal(self, N, M):
        A = gen_haar_row_orthogonal(N, M, self.rng)
        assert A.orthogonality_residual() < 1e-12
        print("✅ Haar rows orthonormal")

    def test_haar_unitary_is_unitary(self):
        U = haar_unitary(20, self.rng)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(20), atol=1e-12)

    def test_haar_phase_distribution_uniform(self):
        """Phase of a single entry is uniform on (-pi, pi] after the diagonal correction"""
        from scipy.stats import kstest

        phases = np.array([np.angle(haar_unitary(4, self.rng)[0, 0]) for _ in range(2000)])
        assert kstest(phases, "uniform", args=(-np.pi, 2 * np.pi)).pvalue > 0.001

    def test_lipschitz_is_one(self):
        A = gen_haar_row_orthogonal(32, 16, self.rng)
        assert A.lipschitz() == 1.0

    @pytest.mark.statistical
    def test_haar_second_moments(self):
        """E|a_ij|^2 = 1/N entry-wise and E sum_i |a_ij|^2 = M/N per column"""
        N, M, draws = 16, 8, 400
        energy = np.zeros((M, N))
        for _ in range(draws):
            energy += np.abs(gen_haar_row_orthogonal(N, M, self.rng).entries) ** 2
        energy /= draws
        assert np.mean(energy[:, 0]) == pytest.approx(1.0 / N, rel=0.1)
        assert np.mean(energy[0, :]) == pytest.approx(1.0 / N, rel=1e-12)
        np.testing.assert_allclose(energy, 1.0 / N, rtol=0.35)
        np.testing.assert_allclose(energy.sum(axis=0), M / N, rtol=0.1)


class TestOperators:
    """FFT fast path agrees with dense products"""

    def setup_method(self):
        self.rng = np.random.default_rng(1)

    def test_matvec_matches_dense(self):
        A = gen_partial_fourier(64, 24, self.rng)
        x = self.rng.standard_normal(64) + 1j * self.rng.standard_normal(64)
        np.testing.assert_allclose(A.matvec(x), A.entries @ x, atol=1e-12)

    def test_rmatvec_matches_dense(self):
        A = gen_partial_fourier(64, 24, self.rng)
        r = self.rng.standard_normal(24) + 1j * self.rng.standard_normal(24)
        np.testing.assert_allclose(A.rmatvec(r), A.entries.conj().T @ r, atol=1e-12)

    def test_imported_uses_dense_path(self):
        A = DesignMatrix.from_entries(gen_partial_fourier(32, 16, self.rng).entries)
        assert A.kind == MatrixKind.IMPORTED
        assert A.rows is None
        assert A.is_row_orthogonal(1e-10)

    def test_power_iteration_matches_svd(self):
        A = gen_gaussian_iid(60, 30, self.rng)
        expected = np.linalg.norm(A.entries, 2) ** 2
        assert abs(power_iteration(A, max_iter=5000, tol=1e-14) - expected) < 1e-6 * expected
        assert abs(A.lipschitz() - expected) < 1e-4 * expected

    def test_imported_fourier_without_dc_row(self):
        """A partial Fourier matrix that skips DFT row 0 maps the all-ones vector to ~0"""
        A = gen_partial_fourier(512, 256, self.rng)
        while 0 in A.rows:
            A = gen_partial_fourier(512, 256, self.rng)
        imported = DesignMatrix.from_entries(A.entries)
        assert np.linalg.norm(imported.matvec(np.ones(512))) < 1e-9
        assert imported.lipschitz() == 1.0
        assert power_iteration(imported) == pytest.approx(1.0, rel=1e-6)

    def test_imported_non_orthogonal_uses_power_iteration(self):
        A = gen_gaussian_iid(80, 40, self.rng)
        imported = DesignMatrix.from_entries(A.entries)
        assert imported.lipschitz() == pytest.approx(np.linalg.norm(A.entries, 2) ** 2, rel=1e-4)


class TestGaussianEnsemble:

    def test_entry_variance(self):
        rng = np.random.default_rng(2)
        A = gen_gaussian_iid(400, 200, rng)
        assert abs(np.mean(np.abs(A.entries) ** 2) * 400 - 1.0) < 0.02

    def test_not_row_orthogonal(self):
        A = gen_gaussian_iid(64, 32, np.random.default_rng(3))
        assert not A.is_row_orthogonal(1e-6)


class TestValidation:

    @pytest.mark.parametrize("N,M", [(8, 9), (8, 0), (0, 0)])
    def test_bad_dimensions(self, N, M):
        with pytest.raises(InvalidDimensionError):
            gen_partial_fourier(N, M, np.random.default_rng(0))

    def test_non_2d_entries(self):
        with pytest.raises(InvalidDimensionError):
            DesignMatrix.from_entries(np.ones(5))

    def test_cannot_generate_imported(self):
        with pytest.raises(InvalidParameterError):
            generate_matrix(MatrixKind.IMPORTED, 8, 4, np.random.default_rng(0))

    @pytest.mark.parametrize("alias,kind", [
        ("fourier", MatrixKind.PARTIAL_FOURIER),
        ("haar", MatrixKind.HAAR_ROW_ORTHOGONAL),
        ("Gaussian-IID", MatrixKind.GAUSSIAN_IID),
    ])
    def test_kind_aliases(self, alias, kind):
        assert MatrixKind.parse(alias) == kind

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            MatrixKind.parse("toeplitz")


def run_sensing_tests():
    print("\n" + "=" * 60)
    print("  DESIGN MATRIX TESTS")
    print("=" * 60 + "\n")
    pytest.main([__file__, "-v", "-s"])


if __name__ == "__main__":
    run_sensing_tests()
