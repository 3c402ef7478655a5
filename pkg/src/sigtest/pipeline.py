"""End-to-end significance pipeline shared by the CLI and the simulation harness.

One call covers: inject noise features, fit the network, compute influence
statistics, draw unscaled null samples with the chosen method, calibrate the
scale, and compare each original feature's statistic against the calibrated
quantile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import (
    CalibrationResult,
    add_noise_features,
    calibrated_quantile,
    estimate_scale,
)
from .data import Dataset
from .network import FitResult, TrainConfig, train
from .null_dist import (
    QuantileEstimate,
    build_ensemble,
    fourier_weights,
    reject_null,
    sample_discretization_mixture,
    sample_series_distribution,
    SeriesSamplerConfig,
)
from .statistic import FeatureStatistics, empirical_statistic

METHODS = ("discretization", "series")


@dataclass(frozen=True)
class MethodConfig:
    """Settings for generating unscaled null samples.

    ``series_truncation`` bounds the per-coordinate Fourier order;
    ``ensemble_size`` is the number of random networks for discretization.
    ``noise_features`` columns are appended before fitting for calibration.
    """

    method: str = "discretization"
    noise_features: int = 3
    sample_count: int = 10_000
    ensemble_size: int = 500
    series_truncation: int = 2
    table_budget: int = 2**20
    full_covariance: bool = False

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.noise_features < 1:
            raise ValueError("noise_features must be >= 1")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.series_truncation < 1:
            raise ValueError("series_truncation must be >= 1")


@dataclass(frozen=True)
class SignificanceResult:
    """Everything produced while testing one dataset."""

    feature_names: tuple[str, ...]
    statistics: np.ndarray
    rejected: np.ndarray
    quantile: QuantileEstimate
    calibration: CalibrationResult
    all_statistics: FeatureStatistics
    fit: FitResult


def draw_unscaled_samples(
    method: MethodConfig,
    input_dim: int,
    reference_features: np.ndarray,
    hidden_units: int,
    seed: int | np.random.SeedSequence,
) -> np.ndarray:
    """Unit-scale null samples for a model with ``input_dim`` inputs.

    The series law is identical for every feature index (the multi-index
    grid is a full cube, so coordinates are exchangeable), which makes one
    sample set valid for all features; target_feature 0 is used.  The
    discretization analogue mixes over the ensemble's statistic columns.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    if method.method == "series":
        table = fourier_weights(
            input_dim, method.series_truncation, max_entries=method.table_budget
        )
        return sample_series_distribution(
            SeriesSamplerConfig(
                table=table,
                target_feature=0,
                scale_b_squared=1.0,
                sample_count=method.sample_count,
                seed=seq,
            )
        )
    build_seed, draw_seed = seq.spawn(2)
    ensemble = build_ensemble(
        hidden_units=hidden_units,
        size=method.ensemble_size,
        reference_features=reference_features,
        seed=build_seed,
        full_covariance=method.full_covariance,
    )
    return sample_discretization_mixture(
        ensemble,
        sample_count=method.sample_count,
        seed=draw_seed,
        full_covariance=method.full_covariance,
    )


def run_significance_test(
    train_data: Dataset,
    val_data: Dataset,
    train_config: TrainConfig,
    method: MethodConfig,
    level: float = 0.05,
    seed: int | np.random.SeedSequence = 0,
) -> SignificanceResult:
    """Test every feature of ``train_data`` at the given significance level.

    Statistics are evaluated over the training rows.  The reported quantile
    is the calibrated (1 - level) quantile of the null law; a feature is
    rejected (declared relevant) when its statistic strictly exceeds it.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    noise_train_seed, noise_val_seed, sampler_seed = seq.spawn(3)

    original_dim = train_data.n_features
    augmented_train = add_noise_features(train_data, method.noise_features, noise_train_seed)
    augmented_val = add_noise_features(val_data, method.noise_features, noise_val_seed)
    fit = train(augmented_train, augmented_val, train_config)

    stats = empirical_statistic(fit.params, augmented_train.features)
    noise_stats = stats.values[original_dim:]
    samples = draw_unscaled_samples(
        method,
        input_dim=augmented_train.n_features,
        reference_features=augmented_train.features,
        hidden_units=train_config.hidden_units,
        seed=sampler_seed,
    )
    calibration = estimate_scale(noise_stats, samples)
    quantile = calibrated_quantile(calibration, samples, 1.0 - level, method.method)
    original_stats = stats.values[:original_dim]
    rejected = np.array(
        [reject_null(float(v), quantile) for v in original_stats], dtype=bool
    )
    return SignificanceResult(
        feature_names=train_data.column_names,
        statistics=original_stats,
        rejected=rejected,
        quantile=quantile,
        calibration=calibration,
        all_statistics=stats,
        fit=fit,
    )
