"""Synthetic benchmark: data generator, exact statistic values, power study.

The generator draws eight features on (-1, 1) and responds through

    y = 8 + x1^2 + x2 x3 + cos(x4) + exp(x5 x6) + 0.1 x7 + eps

with Gaussian noise, so x1..x7 matter (x7 only weakly) and x8 is pure noise.
Features are independent by default or coupled through a Gaussian copula
that keeps the marginals on (-1, 1).  The power/size experiment repeats the
full significance pipeline on fresh draws and reports per-feature rejection
rates next to an OLS t-test baseline.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm, t as student_t

from .data import Dataset
from .network import TrainConfig, TrainingDivergedError
from .calibration import DegenerateScaleError
from .pipeline import MethodConfig, run_significance_test

N_DGP_FEATURES = 8


def default_covariance() -> np.ndarray:
    """Copula covariance: unit diagonal, x1-x2 at 0.1, x5-x6 at 0.5, x4-x7 at 0.3."""
    cov = np.eye(N_DGP_FEATURES)
    for a, b, rho in ((0, 1, 0.1), (4, 5, 0.5), (3, 6, 0.3)):
        cov[a, b] = cov[b, a] = rho
    return cov


@dataclass(frozen=True)
class DgpConfig:
    """Sizes and options for one synthetic draw (three disjoint splits)."""

    n_train: int = 100_000
    n_val: int = 10_000
    n_test: int = 10_000
    noise_std: float = 0.01
    correlated: bool = False
    covariance: np.ndarray | None = None
    seed: int | tuple[int, ...] = 0

    def __post_init__(self) -> None:
        if min(self.n_train, self.n_val, self.n_test) < 1:
            raise ValueError("all split sizes must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


def desk_scale_config(**overrides) -> DgpConfig:
    """Down-scaled sizes for quick runs: 20000/4000/4000."""
    base = dict(n_train=20_000, n_val=4_000, n_test=4_000)
    base.update(overrides)
    return DgpConfig(**base)


def response_surface(features: np.ndarray) -> np.ndarray:
    """Noise-free regression function of the benchmark."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != N_DGP_FEATURES:
        raise ValueError(f"expected (n, {N_DGP_FEATURES}) features, got {x.shape}")
    return (
        8.0
        + x[:, 0] ** 2
        + x[:, 1] * x[:, 2]
        + np.cos(x[:, 3])
        + np.exp(x[:, 4] * x[:, 5])
        + 0.1 * x[:, 6]
    )


def generate_correlated_features(
    n: int,
    covariance: np.ndarray,
    seed: int | np.random.SeedSequence | np.random.Generator = 0,
) -> np.ndarray:
    """Gaussian-copula features with Uniform(-1, 1) marginals.

    Draws z ~ N(0, covariance) through a Cholesky factor, maps each
    coordinate through the standard normal CDF, and rescales to (-1, 1).
    The covariance must be symmetric positive definite with unit diagonal,
    otherwise the marginals would not stay uniform.
    """
    covariance = np.asarray(covariance, dtype=np.float64)
    if covariance.shape != (N_DGP_FEATURES, N_DGP_FEATURES):
        raise ValueError(f"covariance must be {N_DGP_FEATURES}x{N_DGP_FEATURES}")
    if not np.allclose(covariance, covariance.T):
        raise ValueError("covariance must be symmetric")
    if not np.allclose(np.diag(covariance), 1.0):
        raise ValueError("covariance needs a unit diagonal to keep uniform marginals")
    chol = np.linalg.cholesky(covariance)
    rng = (
        seed
        if isinstance(seed, np.random.Generator)
        else np.random.default_rng(seed)
    )
    z = rng.standard_normal((n, N_DGP_FEATURES)) @ chol.T
    return 2.0 * norm.cdf(z) - 1.0


def _draw_split(rng: np.random.Generator, n: int, config: DgpConfig) -> Dataset:
    if config.correlated:
        cov = config.covariance if config.covariance is not None else default_covariance()
        features = generate_correlated_features(n, cov, rng)
    else:
        features = rng.uniform(-1.0, 1.0, size=(n, N_DGP_FEATURES))
    targets = response_surface(features) + rng.normal(0.0, config.noise_std, size=n)
    names = tuple(f"x{j + 1}" for j in range(N_DGP_FEATURES))
    return Dataset(features=features, targets=targets, column_names=names)


def generate_dgp(config: DgpConfig) -> tuple[Dataset, Dataset, Dataset]:
    """Independent train/val/test draws from one seeded generator."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    train = _draw_split(rng, config.n_train, config)
    val = _draw_split(rng, config.n_val, config)
    test = _draw_split(rng, config.n_test, config)
    return train, val, test


def true_lambda_oracle(feature: int) -> float:
    """Exact influence statistic of the benchmark for one feature (0-based).

    Closed forms under independent Uniform(-1, 1) inputs:
    E[(2 x1)^2] = 4/3, E[x^2] = 1/3 for the x2 x3 pair, E[sin^2 x4]
    = 1/2 - sin(2)/4, E[x6^2 exp(2 x5 x6)] = cosh(2)/4 - sinh(2)/8 and its
    mirror image, (0.1)^2 for x7, and 0 for the inert x8.
    """
    values = (
        4.0 / 3.0,
        1.0 / 3.0,
        1.0 / 3.0,
        0.5 - math.sin(2.0) / 4.0,
        math.cosh(2.0) / 4.0 - math.sinh(2.0) / 8.0,
        math.cosh(2.0) / 4.0 - math.sinh(2.0) / 8.0,
        0.01,
        0.0,
    )
    if not 0 <= feature < N_DGP_FEATURES:
        raise ValueError(f"feature must be 0..{N_DGP_FEATURES - 1}, got {feature}")
    return values[feature]


@dataclass(frozen=True)
class TTestResult:
    """OLS fit with two-sided coefficient t-tests for each feature."""

    intercept: float
    coefficients: np.ndarray
    standard_errors: np.ndarray
    p_values: np.ndarray
    rejections: np.ndarray


def ttest_baseline(data: Dataset, level: float = 0.05) -> TTestResult:
    """Linear-model baseline: reject feature j when its OLS p-value < level."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    n, dim = data.features.shape
    dof = n - dim - 1
    if dof < 1:
        raise ValueError(f"need more than {dim + 1} rows for the t-test, got {n}")
    design = np.hstack([np.ones((n, 1)), data.features])
    beta, *_ = np.linalg.lstsq(design, data.targets, rcond=None)
    residual = data.targets - design @ beta
    sigma_sq = float(residual @ residual) / dof
    design_inv = np.linalg.inv(design.T @ design)
    se = np.sqrt(sigma_sq * np.diag(design_inv))
    t_stats = beta / se
    p_values = 2.0 * student_t.sf(np.abs(t_stats), dof)
    return TTestResult(
        intercept=float(beta[0]),
        coefficients=beta[1:],
        standard_errors=se[1:],
        p_values=p_values[1:],
        rejections=p_values[1:] < level,
    )


@dataclass(frozen=True)
class SimulationReport:
    """Per-feature rejection rates for the network test and the baseline."""

    feature_names: tuple[str, ...]
    method_names: tuple[str, ...]
    rejection_rates: np.ndarray
    replications: int
    test_level: float
    failed_replications: int
    per_replication: tuple[dict, ...] | None = None


def resolve_worker_count(task_count: int) -> int:
    """Worker cap from SIGTEST_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get("SIGTEST_THREADS", "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"SIGTEST_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError(f"SIGTEST_THREADS must be >= 0, got {requested}")
    if requested == 0:
        requested = os.cpu_count() or 1
    return max(1, min(requested, task_count))


def _run_replication(
    index: int,
    dgp: DgpConfig,
    fit: TrainConfig,
    method: MethodConfig,
    level: float,
    base_seed: int,
) -> dict:
    """One seeded replication; failures are recorded, not raised."""
    dgp_rep = replace(dgp, seed=(base_seed, index, 0))
    train_data, val_data, _ = generate_dgp(dgp_rep)
    baseline = ttest_baseline(train_data, level)
    record: dict = {
        "replication": index,
        "ttest_rejections": baseline.rejections,
        "failed": False,
    }
    try:
        result = run_significance_test(
            train_data,
            val_data,
            fit,
            method,
            level=level,
            seed=np.random.SeedSequence((base_seed, index, 1)),
        )
    except (TrainingDivergedError, DegenerateScaleError, np.linalg.LinAlgError) as exc:
        record["failed"] = True
        record["error"] = f"{type(exc).__name__}: {exc}"
        return record
    record["rejections"] = result.rejected
    record["statistics"] = result.statistics
    record["quantile"] = result.quantile.value
    record["b_squared"] = result.calibration.b_squared
    return record


def power_size_experiment(
    dgp: DgpConfig,
    fit: TrainConfig,
    method: MethodConfig,
    level: float = 0.05,
    replications: int = 50,
    seed: int = 0,
    keep_per_replication: bool = False,
) -> SimulationReport:
    """Rejection rates of the pipeline and the t-test over fresh replications.

    Replication i draws its own data and randomness from (seed, i), so
    results do not depend on the worker count or completion order; failed
    replications are counted and excluded from the network-test rates.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")

    def job(index: int) -> dict:
        return _run_replication(index, dgp, fit, method, level, seed)

    workers = resolve_worker_count(replications)
    if workers == 1:
        records = [job(i) for i in range(replications)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(job, range(replications)))

    names = tuple(f"x{j + 1}" for j in range(N_DGP_FEATURES))
    ok = [r for r in records if not r["failed"]]
    failed = replications - len(ok)
    if not ok:
        raise RuntimeError("every replication failed; nothing to aggregate")
    test_rates = np.mean([r["rejections"] for r in ok], axis=0)
    ttest_rates = np.mean([r["ttest_rejections"] for r in records], axis=0)
    return SimulationReport(
        feature_names=names,
        method_names=(method.method, "t-test"),
        rejection_rates=np.column_stack([test_rates, ttest_rates]),
        replications=replications,
        test_level=level,
        failed_replications=failed,
        per_replication=tuple(records) if keep_per_replication else None,
    )
