"""Scale calibration of the null distribution via injected noise features.

The limiting law of the influence statistic is known only up to a constant
scale.  Appending independent Uniform(-1, 1) noise columns before fitting
gives features that are irrelevant by construction; the ratio of their
largest fitted statistic to the mean of unscaled null samples estimates the
missing scale, and calibrated quantiles follow by multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .null_dist import QuantileEstimate, empirical_quantile


class DegenerateScaleError(ArithmeticError):
    """Unscaled null samples average to zero, so no scale can be estimated."""


@dataclass(frozen=True)
class CalibrationResult:
    """Estimated scale together with the inputs that produced it."""

    b_squared: float
    noise_statistics: np.ndarray
    unscaled_sample_mean: float
    noise_feature_count: int


def add_noise_features(
    data: Dataset, count: int = 3, seed: int | np.random.SeedSequence = 0
) -> Dataset:
    """Append ``count`` Uniform(-1, 1) columns, names suffixed ``_noise``.

    Original columns are untouched; generation is deterministic in the seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-1.0, 1.0, size=(data.n_rows, count))
    names = list(data.column_names)
    label = 0
    for _ in range(count):
        label += 1
        while f"aux{label}_noise" in data.column_names:
            label += 1
        names.append(f"aux{label}_noise")
    return Dataset(
        features=np.hstack([data.features, noise]),
        targets=data.targets,
        column_names=tuple(names),
    )


def estimate_scale(
    noise_statistics: np.ndarray, unscaled_samples: np.ndarray
) -> CalibrationResult:
    """Scale estimate b^2 = max(noise statistics) / mean(unscaled samples).

    ``noise_statistics`` are the fitted influence statistics of the injected
    noise columns; ``unscaled_samples`` are null-law draws generated at unit
    scale.  A zero sample mean is degenerate and raises.
    """
    noise_statistics = np.asarray(noise_statistics, dtype=np.float64)
    unscaled_samples = np.asarray(unscaled_samples, dtype=np.float64)
    if noise_statistics.ndim != 1 or noise_statistics.shape[0] < 1:
        raise ValueError("noise_statistics must be a non-empty vector")
    if unscaled_samples.ndim != 1 or unscaled_samples.shape[0] < 1:
        raise ValueError("unscaled_samples must be a non-empty vector")
    if (noise_statistics < 0).any():
        raise ValueError("noise statistics are squared quantities, got a negative")
    sample_mean = float(unscaled_samples.mean())
    if sample_mean == 0.0:
        raise DegenerateScaleError(
            "unscaled samples have zero mean; cannot calibrate a scale"
        )
    return CalibrationResult(
        b_squared=float(noise_statistics.max()) / sample_mean,
        noise_statistics=noise_statistics.copy(),
        unscaled_sample_mean=sample_mean,
        noise_feature_count=noise_statistics.shape[0],
    )


def calibrated_quantile(
    calibration: CalibrationResult,
    unscaled_samples: np.ndarray,
    level: float,
    method: str,
) -> QuantileEstimate:
    """Quantile of the unscaled samples rescaled by the calibrated b^2."""
    base = empirical_quantile(
        unscaled_samples, level, method=method, scale_b_squared=calibration.b_squared
    )
    return replace(base, value=base.value * calibration.b_squared)
