"""
Test thresholds, detectors, metrics accumulation and the detection pipelines
"""

import pytest
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.detectors import (
    MetricsAccumulator,
    calibrate_nwld_threshold,
    dld_pipeline,
    dwld_detect,
    dwld_pipeline,
    nwld_detect,
    nwld_pipeline,
    support_mask,
    threshold_from_pfa,
)
from tools.scene import generate_scene
from tools.wlasso import WeightVector
from utils.errors import InvalidDimensionError, InvalidParameterError
from utils.seeding import trial_rng
from utils.stats import wilson_interval


class TestThresholds:

    def test_exponential_tail(self):
        """Pr(|w|^2 > kappa) = exp(-kappa/sigma_w2) for w ~ CN(0, sigma_w2)"""
        kappa = threshold_from_pfa(0.02, np.array([0.01, 0.1]))
        np.testing.assert_allclose(np.exp(-kappa / 0.02), [0.01, 0.1])

    def test_pfa_one_gives_zero(self):
        assert threshold_from_pfa(1.0, 1.0)[0] == 0.0

    @pytest.mark.parametrize("pfa", [0.0, -0.1, 1.5, np.nan])
    def test_bad_pfa(self, pfa):
        with pytest.raises(InvalidParameterError):
            threshold_from_pfa(0.1, pfa)

    def test_bad_sigma(self):
        with pytest.raises(InvalidParameterError):
            threshold_from_pfa(0.0, 0.01)

    def test_strict_comparison(self):
        x = np.array([1.0, 2.0, 0.0], dtype=complex)
        np.testing.assert_array_equal(dwld_detect(x, 1.0), [False, True, False])
        np.testing.assert_array_equal(nwld_detect(x, 0.0), [True, True, False])

    def test_infinite_threshold_rejects_nothing(self):
        assert not dwld_detect(np.array([1e6 + 0j]), np.inf).any()

    def test_threshold_length_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            dwld_detect(np.zeros(3, dtype=complex), np.zeros(4))

    def test_raising_thresholds_never_adds_detections(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            kappa = rng.exponential(1.0, 64)
            raised = kappa + rng.exponential(1.0, 64) * (rng.random(64) < 0.3)
            for detect in (dwld_detect, nwld_detect):
                before, after = detect(x, kappa), detect(x, raised)
                assert not np.any(after & ~before)


class TestMetricsAccumulator:

    def setup_method(self):
        self.acc = MetricsAccumulator.empty(4)

    def test_update_counts(self):
        self.acc.update(np.array([True, False, True, False]), np.array([0, 1]))
        np.testing.assert_array_equal(self.acc.support_occurrences, [1, 1, 0, 0])
        np.testing.assert_array_equal(self.acc.support_rejections, [1, 0, 0, 0])
        np.testing.assert_array_equal(self.acc.null_rejections, [0, 0, 1, 0])
        assert self.acc.total_pfa() == 0.5
        assert self.acc.total_pd() == 0.5

    def test_undefined_rates_are_nan(self):
        self.acc.update(np.zeros(4, dtype=bool), np.array([], dtype=int))
        assert np.isnan(self.acc.total_pd())
        assert np.all(np.isnan(self.acc.pd_per_entry()))
        assert self.acc.total_pfa() == 0.0

    def test_empty_accumulator(self):
        assert np.isnan(self.acc.total_pfa())
        assert np.isnan(self.acc.total_pd())

    def test_merge_is_order_independent(self):
        rng = np.random.default_rng(0)
        parts = []
        for _ in range(6):
            a = MetricsAccumulator.empty(4)
            a.update(rng.random(4) < 0.5, rng.random(4) < 0.3)
            parts.append(a)
        forward = parts[0]
        for p in parts[1:]:
            forward = forward.merge(p)
        backward = parts[-1]
        for p in reversed(parts[:-1]):
            backward = p.merge(backward)
        np.testing.assert_array_equal(forward.null_rejections, backward.null_rejections)
        np.testing.assert_array_equal(forward.support_occurrences, backward.support_occurrences)

    def test_merge_size_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            self.acc.merge(MetricsAccumulator.empty(5))

    def test_prior_weighted_pfa(self):
        self.acc.update(np.array([True, False, False, False]), np.array([], dtype=int))
        assert self.acc.prior_weighted_pfa([3.0, 1.0, 0.0, 0.0]) == pytest.approx(0.75)

    def test_pooled_rate_is_occurrence_weighted(self):
        """Pooled Pfa equals the null-occurrence weighted mean of per-entry rates and tracks the prior average"""
        rng = np.random.default_rng(2024)
        N, T = 20, 10_000
        p = rng.uniform(0.05, 0.6, N)
        pfa = rng.uniform(0.001, 0.2, N)
        pd = rng.uniform(0.5, 0.99, N)
        acc = MetricsAccumulator.empty(N)
        for _ in range(T):
            support = rng.random(N) < p
            u = rng.random(N)
            acc.update(np.where(support, u < pd, u < pfa), support)

        assert acc.total_pfa() == pytest.approx(acc.prior_weighted_pfa(acc.null_occurrences), rel=1e-12)
        expected = np.sum((1 - p) * pfa) / np.sum(1 - p)
        se = np.sqrt(expected * (1 - expected) / acc.null_occurrences.sum())
        assert abs(acc.total_pfa() - expected) < 5 * se
        expected_pd = np.sum(p * pd) / np.sum(p)
        se_pd = np.sqrt(expected_pd * (1 - expected_pd) / acc.support_occurrences.sum())
        assert abs(acc.total_pd() - expected_pd) < 5 * se_pd
        np.testing.assert_allclose(acc.pfa_per_entry(), pfa, atol=0.03)

    def test_support_mask_from_bool(self):
        mask = np.array([True, False])
        assert support_mask(mask, 2) is mask
        with pytest.raises(InvalidDimensionError):
            support_mask(np.array([True]), 2)


class TestWilson:

    def test_bounds_ordered(self):
        lo, hi = wilson_interval(20, 2000)
        assert 0.0 <= lo < 0.01 < hi <= 1.0

    def test_zero_successes(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert 0.0 < hi < 0.05

    def test_no_trials(self):
        assert all(np.isnan(wilson_interval(0, 0)))


class TestPipelines:

    def _scene(self, config, index=0):
        scene = generate_scene(config, trial_rng(5, index))
        w = WeightVector(np.maximum(1e-4, 0.1 - 0.1 * config.prior.p))
        return scene, w

    def test_dwld_pipeline(self, small_scene_config):
        scene, w = self._scene(small_scene_config)
        out = dwld_pipeline(scene.y, scene.A, w, 0.01, scene.sigma2)
        np.testing.assert_allclose(out.kappa, -out.debiased.sigma_w2 * np.log(0.01))
        np.testing.assert_array_equal(out.decisions, np.abs(out.debiased.x_d) ** 2 > out.kappa)

    def test_dwld_reuses_given_estimate(self, small_scene_config):
        scene, w = self._scene(small_scene_config)
        first = dwld_pipeline(scene.y, scene.A, w, 0.01, scene.sigma2)
        again = dwld_pipeline(scene.y, scene.A, w, 0.01, scene.sigma2, x_wl=first.x_wl)
        np.testing.assert_array_equal(first.decisions, again.decisions)

    def test_dld_is_uniform_dwld(self, small_scene_config):
        scene, _ = self._scene(small_scene_config)
        decisions, result = dld_pipeline(scene.y, scene.A, 0.1, 0.01, scene.sigma2)
        out = dwld_pipeline(scene.y, scene.A, WeightVector.uniform(scene.A.N, 0.1), 0.01, scene.sigma2)
        np.testing.assert_array_equal(decisions, out.decisions)
        assert result.sigma_w2 == out.debiased.sigma_w2

    def test_dld_rejects_zero_lambda(self, small_scene_config):
        scene, _ = self._scene(small_scene_config)
        with pytest.raises(InvalidParameterError):
            dld_pipeline(scene.y, scene.A, 0.0, 0.01, scene.sigma2)

    def test_nwld_zero_threshold_is_support_of_estimate(self, small_scene_config):
        scene, w = self._scene(small_scene_config)
        out = nwld_pipeline(scene.y, scene.A, w, 0.0)
        np.testing.assert_array_equal(out.decisions, out.x_wl != 0)

    def test_strong_signal_detected(self, small_scene_config):
        """At 20 dB most support entries are found"""
        found, total = 0, 0
        for t in range(10):
            scene, w = self._scene(small_scene_config, t)
            out = dwld_pipeline(scene.y, scene.A, w, 0.01, scene.sigma2)
            found += int(out.decisions[scene.support].sum())
            total += scene.support.size
        assert found / total > 0.7


class TestCalibration:

    def test_hits_target(self):
        rng = np.random.default_rng(0)
        samples = rng.exponential(1.0, 200000)
        kappa = calibrate_nwld_threshold(samples, 0.05, tol=1e-4)
        assert abs(np.mean(samples > kappa) - 0.05) <= 1e-4
        assert kappa == pytest.approx(-np.log(0.05), rel=0.02)

    def test_mostly_zero_samples(self):
        """Rate already below target at kappa = 0"""
        samples = np.zeros(1000)
        samples[:5] = 1.0
        assert calibrate_nwld_threshold(samples, 0.01) == 0.0

    def test_bad_inputs(self):
        with pytest.raises(InvalidParameterError):
            calibrate_nwld_threshold([], 0.01)
        with pytest.raises(InvalidParameterError):
            calibrate_nwld_threshold([1.0], 1.0)


def run_detector_tests():
    print("\n" + "=" * 60)
    print("  DETECTOR TESTS")
    print("=" * 60 + "\n")
    pytest.main([__file__, "-v", "-s"])


if __name__ == "__main__":
    run_detector_tests()
