"""
Test the debiasing fixed point, residual variance and debiased estimates
"""

import pytest
import sys
from pathlib import Path

import numpy as np
from scipy.stats import binom, kstest

sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.debias import (
    debias,
    debias_estimate,
    fixed_point_residuals,
    residual_variance,
    rho_of_lambda,
    solve_fixed_point,
)
from tools.scene import NoiseSpec, SceneConfig, generate_scene, sigma_x2_for_snr, two_level_prior
from tools.sensing import MatrixKind, gen_partial_fourier
from tools.weight_opt import ModelKind, WeightModel
from tools.wlasso import WeightVector, solve_weighted_lasso
from utils.errors import DebiasInfeasibleError, InvalidParameterError
from utils.seeding import trial_rng


def _scene_config(N=512, gamma=0.5, snr=20.0, kind=MatrixKind.PARTIAL_FOURIER, prior=(0.01, 0.8)):
    M = int(gamma * N)
    return SceneConfig(
        N=N, M=M, sigma_x2=sigma_x2_for_snr(snr, M / N, 0.01), noise=NoiseSpec(0.01),
        prior=two_level_prior(N, *prior), matrix_kind=kind,
    )


def _solved(config, seed, index):
    scene = generate_scene(config, trial_rng(seed, index))
    weights = WeightModel(ModelKind.LINEAR, 0.1, 0.1).weights(config.prior)
    return scene, weights, solve_weighted_lasso(scene.y, scene.A, weights)


class TestFixedPoint:

    def test_zero_estimate(self):
        """x_wl = 0 gives (gamma, 0) exactly"""
        Lam, rho, it = solve_fixed_point(np.zeros(64, dtype=complex), WeightVector.uniform(64, 0.1), 0.5)
        assert Lam == 0.5
        assert rho == 0.0
        assert it == 0

    def test_full_sampling(self):
        """gamma = 1 gives Lambda = 1 whatever rho is"""
        rng = np.random.default_rng(0)
        x = rng.standard_normal(64) * (rng.random(64) < 0.3)
        Lam, rho, _ = solve_fixed_point(x.astype(complex), WeightVector.uniform(64, 0.2), 1.0)
        assert Lam == 1.0
        assert 0.0 < rho < 1.0

    def test_residuals_at_solution(self):
        config = _scene_config()
        scene, weights, x_wl = _solved(config, 11, 0)
        Lam, rho, _ = solve_fixed_point(x_wl, weights, config.gamma)
        r1, r2 = fixed_point_residuals(Lam, rho, x_wl, weights, config.gamma)
        assert abs(r1) < 1e-10
        assert abs(r2) < 1e-10
        assert 0.0 < rho < config.gamma
        assert 0.0 < Lam <= config.gamma

    def test_rho_decreases_to_floor(self):
        """rho(Lambda) falls towards count/(2N) as Lambda -> 0"""
        mag = np.array([0.5, 1.0, 2.0])
        lam = np.array([0.1, 0.1, 0.1])
        assert rho_of_lambda(0.0, mag, lam, 10) == pytest.approx(3 / 20)
        assert rho_of_lambda(1.0, mag, lam, 10) > rho_of_lambda(0.1, mag, lam, 10)

    def test_zero_weight_entries_count_fully(self):
        mag = np.array([1.0, 1.0])
        assert rho_of_lambda(0.5, mag, np.zeros(2), 4) == pytest.approx(0.5)

    def test_dense_estimate_infeasible(self):
        x = np.ones(64, dtype=complex)
        with pytest.raises(DebiasInfeasibleError) as exc:
            solve_fixed_point(x, WeightVector.uniform(64, 0.1), 0.4)
        assert exc.value.rho >= exc.value.gamma
        assert "regularization" in str(exc.value)

    def test_bad_gamma(self):
        with pytest.raises(InvalidParameterError):
            solve_fixed_point(np.zeros(4, dtype=complex), 0.1, 1.5)

    def test_lambda_increases_with_gamma(self):
        """Same estimate and weights, more measurements -> larger Lambda_CRO"""
        rng = np.random.default_rng(17)
        N = 256
        x = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) * (rng.random(N) < 0.1)
        w = WeightVector.uniform(N, 0.1)
        lams = [solve_fixed_point(x, w, g)[0] for g in (0.3, 0.5, 0.7, 0.9)]
        assert all(a < b for a, b in zip(lams, lams[1:]))
        assert all(0.0 < L <= g for L, g in zip(lams, (0.3, 0.5, 0.7, 0.9)))


class TestResidualVariance:

    def test_full_sampling_gives_noise_variance(self):
        config = _scene_config(N=128, gamma=1.0)
        scene, weights, x_wl = _solved(config, 3, 0)
        result = debias(x_wl, scene.y, scene.A, weights, scene.sigma2)
        assert result.sigma_w2 == scene.sigma2

    def test_formula(self):
        config = _scene_config(N=128)
        scene, weights, x_wl = _solved(config, 4, 0)
        Lam, rho, _ = solve_fixed_point(x_wl, weights, 0.5)
        sigma_w2, rss = residual_variance(x_wl, scene.y, scene.A, 0.5, rho, 0.01)
        r = scene.y - scene.A.matvec(x_wl)
        assert rss == pytest.approx(np.vdot(r, r).real / scene.A.M)
        assert sigma_w2 == pytest.approx(0.25 / (0.5 - rho) ** 2 * rss + 0.01)

    def test_zero_measurements(self):
        """y = 0 -> x_wl = 0, x_d = (1/gamma) A^H y = 0"""
        A = gen_partial_fourier(64, 32, np.random.default_rng(1))
        y = np.zeros(32, dtype=complex)
        w = WeightVector.uniform(64, 0.1)
        x_wl = solve_weighted_lasso(y, A, w)
        result = debias(x_wl, y, A, w, 0.01)
        assert result.lambda_cro == 0.5
        assert np.all(result.x_d == 0)
        assert result.sigma_w2 == pytest.approx(0.01)

    def test_debias_estimate_rejects_nonpositive_lambda(self):
        A = gen_partial_fourier(8, 4, np.random.default_rng(1))
        with pytest.raises(InvalidParameterError):
            debias_estimate(np.zeros(8), np.zeros(4), A, 0.0)


class TestGaussianDesign:

    def test_uses_active_density(self):
        config = _scene_config(N=256, kind=MatrixKind.GAUSSIAN_IID)
        scene, weights, x_wl = _solved(config, 5, 0)
        result = debias(x_wl, scene.y, scene.A, weights, scene.sigma2)
        rho_a = np.count_nonzero(x_wl) / 256
        assert result.rho_ca == pytest.approx(rho_a)
        assert result.lambda_cro == pytest.approx(0.5 - rho_a)
        assert result.sigma_w2 == pytest.approx(0.5 * result.rss_bar / (0.5 - rho_a) ** 2)


@pytest.mark.statistical
class TestResidualStatistics:

    def test_null_residual_variance_matches_prediction(self):
        """Empirical E|x_d - x0|^2 on null entries tracks sigma_w2"""
        config = _scene_config(N=256)
        ratios = []
        for t in range(30):
            scene, weights, x_wl = _solved(config, 21, t)
            result = debias(x_wl, scene.y, scene.A, weights, scene.sigma2)
            null = ~scene.support_mask
            ratios.append(np.mean(np.abs(result.x_d[null]) ** 2) / result.sigma_w2)
        assert np.mean(ratios) == pytest.approx(1.0, abs=0.15)


@pytest.mark.slow
@pytest.mark.statistical
class TestResidualGaussianity:

    @pytest.mark.parametrize("prior", [(0.01, 0.8), (0.05, 0.6)])
    def test_null_residuals_complex_gaussian(self, prior):
        """Normalized null residuals pass KS at the 1% level"""
        config = _scene_config(N=512, snr=15.0, prior=prior)
        parts, energies = [], []
        for t in range(100):
            scene, weights, x_wl = _solved(config, 99, t)
            result = debias(x_wl, scene.y, scene.A, weights, scene.sigma2)
            e = result.x_d[~scene.support_mask]
            parts.append(np.concatenate([e.real, e.imag]) / np.sqrt(result.sigma_w2 / 2))
            energies.append(np.abs(e) ** 2 / result.sigma_w2)
        assert kstest(np.concatenate(parts), "norm").pvalue > 0.01
        assert kstest(np.concatenate(energies), "expon").pvalue > 0.01


@pytest.mark.slow
@pytest.mark.statistical
class TestNullExceedanceRates:

    def test_exceedance_matches_target(self):
        """Pooled null P(|x_d|^2 > kappa) at kappa = -sigma_w2 ln(pfa) stays inside a binomial band"""
        config = _scene_config(N=512, snr=20.0)
        targets = (0.01, 0.05, 0.1)
        hits = np.zeros(len(targets), dtype=np.int64)
        n_null = 0
        for t in range(40):
            scene, weights, x_wl = _solved(config, 123, t)
            result = debias(x_wl, scene.y, scene.A, weights, scene.sigma2)
            energy = np.abs(result.x_d[~scene.support_mask]) ** 2
            n_null += energy.size
            for k, pfa in enumerate(targets):
                hits[k] += np.count_nonzero(energy > -result.sigma_w2 * np.log(pfa))
        assert n_null >= 10_000
        for k, pfa in enumerate(targets):
            lo, hi = binom.ppf([0.0005, 0.9995], n_null, pfa)
            assert lo <= hits[k] <= hi, f"pfa={pfa}: {hits[k]} of {n_null}, band [{lo}, {hi}]"
        print("✅ Null exceedance rates match the analytic tail")


def run_debias_tests():
    print("\n" + "=" * 60)
    print("  DEBIAS TESTS")
    print("=" * 60 + "\n")
    pytest.main([__file__, "-v", "-s"])


if __name__ == "__main__":
    run_debias_tests()
