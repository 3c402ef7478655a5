"""Significance tests for input features of sigmoid-network regressions.

Fit a single-hidden-layer network, measure each feature's influence as the
mean squared partial derivative of the fitted function, and compare against
a calibrated quantile of the statistic's limiting null distribution.  Two
interchangeable approximations of that null law are provided, plus a
synthetic benchmark for power/size studies and a CLI.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibrationResult,
    DegenerateScaleError,
    add_noise_features,
    calibrated_quantile,
    estimate_scale,
)
from .data import (
    DataError,
    Dataset,
    Standardizer,
    ingest_csv,
    train_val_test_split,
    write_csv,
)
from .network import (
    DimensionError,
    FitResult,
    NetworkParams,
    TrainConfig,
    TrainingDivergedError,
    forward,
    input_gradient,
    input_gradients,
    predict,
    predict_mse,
    random_params,
    train,
)
from .null_dist import (
    CapacityError,
    FourierWeightTable,
    QuantileEstimate,
    RandomFunctionEnsemble,
    SeriesSamplerConfig,
    build_ensemble,
    empirical_quantile,
    estimation_rate,
    fourier_weights,
    largest_feasible_truncation,
    reject_null,
    sample_discretization_distribution,
    sample_discretization_mixture,
    sample_series_distribution,
    suggested_hidden_units,
)
from .pipeline import MethodConfig, SignificanceResult, run_significance_test
from .simulation import (
    DgpConfig,
    SimulationReport,
    TTestResult,
    default_covariance,
    desk_scale_config,
    generate_correlated_features,
    generate_dgp,
    power_size_experiment,
    response_surface,
    true_lambda_oracle,
    ttest_baseline,
)
from .statistic import (
    EmpiricalMeasure,
    FeatureStatistics,
    SubsetIndicator,
    UniformHypercube,
    empirical_statistic,
    leave_one_out,
    rank_features,
    weighted_statistic,
)

__all__ = [name for name in dir() if not name.startswith("_")]
