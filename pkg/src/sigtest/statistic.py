"""Feature influence statistics: mean squared input gradients of a fitted net.

The statistic for feature j is the average of (df/dx_j)^2 over a measure on
the input space, either the empirical distribution of a sample or an explicit
uniform/indicator measure integrated by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import qmc

from .data import Dataset
from .network import NetworkParams, TrainConfig, input_gradients, predict_mse, train

# Tensor-product midpoint grids are used up to this dimension, low-discrepancy
# sampling above it (grid size would grow as points_per_dim ** dimension).
GRID_DIMENSION_LIMIT = 4

# Rows per block when averaging squared gradients.  Fixed block size keeps the
# summation order, and therefore the result, independent of worker counts.
_BLOCK_ROWS = 8192


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Tag for the empirical distribution of an observed sample."""


@dataclass(frozen=True)
class UniformHypercube:
    """Uniform measure on a bounded axis-aligned box."""

    lower: np.ndarray
    upper: np.ndarray
    grid_points_per_dim: int = 64

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        _check_box(lower, upper)
        if self.grid_points_per_dim < 2:
            raise ValueError("grid_points_per_dim must be >= 2")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class SubsetIndicator:
    """Indicator of a sub-box inside an enclosing box, normalized to mass one."""

    lower: np.ndarray
    upper: np.ndarray
    subset_lower: np.ndarray
    subset_upper: np.ndarray
    grid_points_per_dim: int = 64

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        sub_lower = np.atleast_1d(np.asarray(self.subset_lower, dtype=np.float64))
        sub_upper = np.atleast_1d(np.asarray(self.subset_upper, dtype=np.float64))
        _check_box(lower, upper)
        if sub_lower.shape != lower.shape or sub_upper.shape != upper.shape:
            raise ValueError("subset bounds must match the enclosing box dimension")
        if not (np.isfinite(sub_lower).all() and np.isfinite(sub_upper).all()):
            raise ValueError("subset bounds must be finite")
        if (sub_lower < lower).any() or (sub_upper > upper).any():
            raise ValueError("subset box must lie inside the enclosing box")
        if (sub_lower >= sub_upper).any():
            raise ValueError("subset box has zero volume")
        if self.grid_points_per_dim < 2:
            raise ValueError("grid_points_per_dim must be >= 2")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "subset_lower", sub_lower)
        object.__setattr__(self, "subset_upper", sub_upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


WeightMeasure = Union[EmpiricalMeasure, UniformHypercube, SubsetIndicator]


def _check_box(lower: np.ndarray, upper: np.ndarray) -> None:
    if lower.ndim != 1 or lower.shape != upper.shape:
        raise ValueError("lower and upper must be vectors of equal length")
    if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
        raise ValueError("integration region must be bounded (finite bounds)")
    if (lower >= upper).any():
        raise ValueError("lower bounds must be strictly below upper bounds")


@dataclass(frozen=True)
class FeatureStatistics:
    """Per-feature statistic values with the measure and sample size used."""

    values: np.ndarray
    measure: WeightMeasure
    n_used: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("values must be a vector")
        object.__setattr__(self, "values", values)


def _mean_squared_gradients(params: NetworkParams, points: np.ndarray) -> np.ndarray:
    total = np.zeros(params.input_dim)
    n = points.shape[0]
    for start in range(0, n, _BLOCK_ROWS):
        block = input_gradients(params, points[start : start + _BLOCK_ROWS])
        total += np.add.reduce(block * block, axis=0)
    return total / n


def empirical_statistic(params: NetworkParams, features: np.ndarray) -> FeatureStatistics:
    """Mean squared input gradient over the rows of an observed sample."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != params.input_dim:
        raise ValueError(
            f"features shape {features.shape} incompatible with input_dim {params.input_dim}"
        )
    if features.shape[0] < 1:
        raise ValueError("need at least one row")
    return FeatureStatistics(
        values=_mean_squared_gradients(params, features),
        measure=EmpiricalMeasure(),
        n_used=features.shape[0],
    )


def weighted_statistic(
    params: NetworkParams,
    measure: WeightMeasure,
    point_budget: int = 2**14,
) -> FeatureStatistics:
    """Squared-gradient integral against an explicit normalized measure.

    Boxes up to :data:`GRID_DIMENSION_LIMIT` dimensions use a tensor midpoint
    grid with ``grid_points_per_dim`` points per axis; higher dimensions use
    an unscrambled Sobol sequence capped at ``point_budget`` points (rounded
    down to a power of two).  For a :class:`SubsetIndicator` the normalized
    measure is uniform on the subset box, so integration runs over it alone.
    """
    if isinstance(measure, EmpiricalMeasure):
        raise ValueError("use empirical_statistic for the empirical measure")
    if not isinstance(measure, (UniformHypercube, SubsetIndicator)):
        raise TypeError(f"unsupported measure {type(measure).__name__}")
    if measure.dim != params.input_dim:
        raise ValueError(
            f"measure dimension {measure.dim} != network input_dim {params.input_dim}"
        )
    if isinstance(measure, SubsetIndicator):
        lower, upper = measure.subset_lower, measure.subset_upper
    else:
        lower, upper = measure.lower, measure.upper
    dim = measure.dim
    if dim <= GRID_DIMENSION_LIMIT:
        per_dim = measure.grid_points_per_dim
        axes = [
            lower[j] + (np.arange(per_dim) + 0.5) * (upper[j] - lower[j]) / per_dim
            for j in range(dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        if point_budget < 2:
            raise ValueError("point_budget must be >= 2")
        exponent = int(np.log2(point_budget))
        sampler = qmc.Sobol(d=dim, scramble=False)
        points = lower + sampler.random_base2(exponent) * (upper - lower)
    return FeatureStatistics(
        values=_mean_squared_gradients(params, points),
        measure=measure,
        n_used=points.shape[0],
    )


def rank_features(statistics: FeatureStatistics) -> np.ndarray:
    """Feature indices ordered by descending statistic, ties by ascending index."""
    return np.argsort(-statistics.values, kind="stable")


def leave_one_out(
    train_data: Dataset,
    val_data: Dataset,
    test_data: Dataset,
    config: TrainConfig,
) -> np.ndarray:
    """Test-MSE increase from dropping each feature and refitting.

    Entry j is mse(model without feature j) - mse(full model), both on the
    test split; a redundant feature gives an entry near zero.  Every refit
    uses the same config, so the whole vector is deterministic given the
    config seed.
    """
    dim = train_data.n_features
    if dim < 2:
        raise ValueError("leave-one-out needs at least two features")
    if val_data.n_features != dim or test_data.n_features != dim:
        raise ValueError("train/val/test feature counts differ")
    full_fit = train(train_data, val_data, config)
    full_mse = predict_mse(full_fit.params, test_data)
    deltas = np.empty(dim)
    for j in range(dim):
        fit_j = train(train_data.drop_column(j), val_data.drop_column(j), config)
        deltas[j] = predict_mse(fit_j.params, test_data.drop_column(j)) - full_mse
    return deltas
