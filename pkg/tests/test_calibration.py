"""Noise-feature injection and scale calibration."""

import numpy as np
import pytest

from sigtest.calibration import (
    CalibrationResult,
    DegenerateScaleError,
    add_noise_features,
    calibrated_quantile,
    estimate_scale,
)
from sigtest.data import Dataset


def base_dataset(n=100, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(
        features=rng.uniform(-1.0, 1.0, size=(n, 2)),
        targets=rng.normal(size=n),
        column_names=("x1", "x2"),
    )


class TestAddNoiseFeatures:
    def test_appends_without_touching_originals(self):
        data = base_dataset()
        out = add_noise_features(data, count=3, seed=1)
        assert out.n_features == 5
        np.testing.assert_array_equal(out.features[:, :2], data.features)
        np.testing.assert_array_equal(out.targets, data.targets)
        assert out.column_names == ("x1", "x2", "aux1_noise", "aux2_noise", "aux3_noise")

    def test_noise_is_uniform_on_unit_interval(self):
        out = add_noise_features(base_dataset(n=5000), count=1, seed=2)
        col = out.features[:, -1]
        assert col.min() >= -1.0 and col.max() <= 1.0
        assert abs(col.mean()) < 0.05
        # uniform(-1,1) variance is 1/3
        assert abs(col.var() - 1.0 / 3.0) < 0.02

    def test_deterministic_in_seed(self):
        data = base_dataset()
        a = add_noise_features(data, count=2, seed=3)
        b = add_noise_features(data, count=2, seed=3)
        c = add_noise_features(data, count=2, seed=4)
        np.testing.assert_array_equal(a.features, b.features)
        assert not np.array_equal(a.features[:, 2:], c.features[:, 2:])

    def test_name_collision_skipped(self):
        data = Dataset(
            features=np.ones((3, 1)),
            targets=np.ones(3),
            column_names=("aux1_noise",),
        )
        out = add_noise_features(data, count=2, seed=0)
        assert out.column_names == ("aux1_noise", "aux2_noise", "aux3_noise")

    def test_count_validation(self):
        with pytest.raises(ValueError, match="count"):
            add_noise_features(base_dataset(), count=0)


class TestEstimateScale:
    def test_ratio_formula(self):
        noise = np.array([0.2, 0.5, 0.1])
        samples = np.array([1.0, 3.0])  # mean 2
        result = estimate_scale(noise, samples)
        assert result.b_squared == 0.25
        assert result.unscaled_sample_mean == 2.0
        assert result.noise_feature_count == 3
        np.testing.assert_array_equal(result.noise_statistics, noise)

    def test_inputs_are_copied(self):
        noise = np.array([0.2, 0.5])
        result = estimate_scale(noise, np.array([1.0]))
        noise[0] = 99.0
        assert result.noise_statistics[0] == 0.2

    def test_zero_mean_degenerate(self):
        with pytest.raises(DegenerateScaleError, match="zero mean"):
            estimate_scale(np.array([0.1]), np.zeros(5))

    def test_negative_noise_statistic_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            estimate_scale(np.array([-0.1, 0.2]), np.array([1.0]))

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValueError):
            estimate_scale(np.array([]), np.array([1.0]))
        with pytest.raises(ValueError):
            estimate_scale(np.array([0.1]), np.array([]))


class TestCalibratedQuantile:
    def test_scales_base_quantile(self):
        calibration = CalibrationResult(
            b_squared=3.0,
            noise_statistics=np.array([0.3]),
            unscaled_sample_mean=0.1,
            noise_feature_count=1,
        )
        samples = np.array([1.0, 2.0, 3.0, 4.0])
        est = calibrated_quantile(calibration, samples, 0.5, "series")
        assert est.value == 6.0  # 2.0 * 3.0
        assert est.scale_b_squared == 3.0
        assert est.method == "series"
        assert est.level == 0.5
        assert est.sample_count == 4

    def test_level_one_scales_maximum(self):
        calibration = CalibrationResult(
            b_squared=0.5,
            noise_statistics=np.array([0.1]),
            unscaled_sample_mean=0.2,
            noise_feature_count=1,
        )
        samples = np.array([5.0, 9.0, 1.0])
        est = calibrated_quantile(calibration, samples, 1.0, "discretization")
        assert est.value == 4.5
