"""Null distribution of the influence statistic, two ways.

Under the null that feature j is irrelevant, the statistic converges to a
weighted chi-square mixture.  This module provides both approximations:

* a Fourier series representation whose coefficients come from Sobolev
  weights ``d_n^2`` over a truncated multi-index grid, sampled by Monte
  Carlo, and
* a discretization that draws many random networks, picks the maximizer of a
  Gaussian surrogate, and reads off that network's statistic.

Both yield "unscaled" samples to be multiplied by a calibrated scale before
quantile comparison.  Utility rate functions for sample-size bookkeeping
live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import expit

from .network import NetworkParams, random_params

# Chi-square draws per multi-index and per sample, in elements, before the
# sampler switches to processing samples in blocks.
_SAMPLE_BLOCK_ELEMENTS = 2**23

# Jitter added to the Gram diagonal before Cholesky in full-covariance mode.
_GRAM_JITTER = 1e-10


class CapacityError(ValueError):
    """Requested Fourier table would exceed the entry budget."""


@dataclass(frozen=True)
class FourierWeightTable:
    """Sobolev weights over the truncated multi-index grid {0..N-1}^d.

    For multi-index n the weight is ``d_n^2 = sum over |alpha| <= s of
    prod_k gamma_{n_k}^alpha_k`` with ``gamma_m = m^2 pi^2``, smoothness
    ``s = floor(d/2) + 2``, and the convention 0^0 = 1.  ``indices`` holds
    the grid row-wise; ``gammas[i]`` is the per-coordinate gamma vector of
    ``indices[i]`` and ``d_squared[i]`` its weight.
    """

    dimension: int
    truncation: int
    smoothness: int
    indices: np.ndarray
    gammas: np.ndarray
    d_squared: np.ndarray

    @property
    def size(self) -> int:
        return self.indices.shape[0]

    def entries(self) -> Iterator[tuple[tuple[int, ...], float, np.ndarray]]:
        """Iterate (multi-index, d_n^2, gamma vector) rows."""
        for i in range(self.size):
            yield tuple(int(v) for v in self.indices[i]), float(self.d_squared[i]), self.gammas[i]


def fourier_weights(
    dimension: int, truncation: int, max_entries: int = 2**20
) -> FourierWeightTable:
    """Tabulate d_n^2 for every multi-index in {0..truncation-1}^dimension.

    The degree-bounded monomial sum is evaluated by dynamic programming over
    coordinates, one degree layer at a time, so cost grows linearly in the
    table size rather than with the number of alpha multi-indices.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    if max_entries < 1:
        raise ValueError("max_entries must be >= 1")
    size = truncation**dimension
    if size > max_entries:
        raise CapacityError(
            f"table of {truncation}^{dimension} = {size} entries exceeds the "
            f"budget of {max_entries}; lower the truncation or raise max_entries"
        )
    smoothness = dimension // 2 + 2
    grids = np.meshgrid(*([np.arange(truncation)] * dimension), indexing="ij")
    indices = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    gammas = (indices * np.pi) ** 2

    # layer[:, t] = sum of degree-t monomials in the first k coordinates
    layer = np.zeros((size, smoothness + 1))
    layer[:, 0] = 1.0
    for k in range(dimension):
        powers = np.ones((size, smoothness + 1))
        for a in range(1, smoothness + 1):
            powers[:, a] = powers[:, a - 1] * gammas[:, k]
        updated = np.zeros_like(layer)
        for degree in range(smoothness + 1):
            for a in range(degree + 1):
                updated[:, degree] += powers[:, a] * layer[:, degree - a]
        layer = updated
    return FourierWeightTable(
        dimension=dimension,
        truncation=truncation,
        smoothness=smoothness,
        indices=indices,
        gammas=gammas,
        d_squared=layer.sum(axis=1),
    )


def largest_feasible_truncation(dimension: int, max_entries: int = 2**20) -> int:
    """Largest truncation whose table fits the entry budget (at least 1)."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    truncation = 1
    while (truncation + 1) ** dimension <= max_entries:
        truncation += 1
    return truncation


@dataclass(frozen=True)
class SeriesSamplerConfig:
    """Monte Carlo settings for sampling the series form of the null law."""

    table: FourierWeightTable
    target_feature: int
    scale_b_squared: float = 1.0
    sample_count: int = 10_000
    seed: int | np.random.SeedSequence = 0

    def __post_init__(self) -> None:
        if not 0 <= self.target_feature < self.table.dimension:
            raise ValueError(
                f"target_feature {self.target_feature} out of range for "
                f"dimension {self.table.dimension}"
            )
        if self.scale_b_squared < 0:
            raise ValueError("scale_b_squared must be >= 0")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


def sample_series_distribution(config: SeriesSamplerConfig) -> np.ndarray:
    """Draw from the truncated series form of the null distribution.

    Each sample is

        B^2 * sum_n (gamma_{n_j} / d_n^4) X_n  /  sum_n (1 / d_n^2) X_n

    where the sums run over the table's multi-index grid and X_n collects the
    2^d independent chi-square(1) draws attached to the sine/cosine variants
    of index n.  Because every coefficient depends on n alone, that bundle is
    drawn directly as one chi-square(2^d) variable per index; numerator and
    denominator share the draws.
    """
    table = config.table
    gamma_j = table.gammas[:, config.target_feature]
    weight_num = gamma_j / table.d_squared**2
    weight_den = 1.0 / table.d_squared
    df = float(2**table.dimension)
    rng = np.random.default_rng(config.seed)
    out = np.empty(config.sample_count)
    block = max(1, _SAMPLE_BLOCK_ELEMENTS // table.size)
    for start in range(0, config.sample_count, block):
        stop = min(start + block, config.sample_count)
        draws = rng.chisquare(df, size=(stop - start, table.size))
        out[start:stop] = (draws @ weight_num) / (draws @ weight_den)
    out *= config.scale_b_squared
    return out


@dataclass(frozen=True)
class QuantileEstimate:
    """An empirical quantile along with how it was produced."""

    level: float
    value: float
    method: str
    sample_count: int
    scale_b_squared: float

    def __post_init__(self) -> None:
        if self.method not in ("series", "discretization"):
            raise ValueError(f"unknown method tag {self.method!r}")


def empirical_quantile(
    samples: np.ndarray,
    level: float,
    *,
    method: str = "series",
    scale_b_squared: float = 1.0,
) -> QuantileEstimate:
    """Order-statistic quantile: the i-th smallest with i = ceil(level * m).

    The estimate is constant on each interval ((i-1)/m, i/m], so level 1
    returns the maximum.  A small tolerance keeps float products like
    0.95 * m from tipping over an exact integer boundary.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.shape[0] < 1:
        raise ValueError("samples must be a non-empty vector")
    if not 0.0 < level <= 1.0:
        raise ValueError(f"level must lie in (0, 1], got {level}")
    m = samples.shape[0]
    rank = max(1, math.ceil(level * m - 1e-9))
    value = float(np.sort(samples)[rank - 1])
    return QuantileEstimate(
        level=level,
        value=value,
        method=method,
        sample_count=m,
        scale_b_squared=scale_b_squared,
    )


@dataclass(frozen=True)
class RandomFunctionEnsemble:
    """Random networks with their second moments and per-feature statistics.

    ``second_moments[c]`` is the mean of f_c(X_i)^2 over the reference rows;
    ``statistic_per_function[c, j]`` the empirical influence statistic of
    function c for feature j on the same rows.  ``gram`` holds the full
    cross-moment matrix E[f_a f_b] when built with full_covariance.
    """

    functions: tuple[NetworkParams, ...]
    second_moments: np.ndarray
    statistic_per_function: np.ndarray
    gram: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.functions)

    @property
    def input_dim(self) -> int:
        return self.statistic_per_function.shape[1]


def build_ensemble(
    hidden_units: int,
    size: int,
    reference_features: np.ndarray,
    seed: int | np.random.SeedSequence = 0,
    full_covariance: bool = False,
) -> RandomFunctionEnsemble:
    """Draw ``size`` Glorot-initialized networks and profile them on a sample.

    Architecture matches the fitted model (``hidden_units`` sigmoid units on
    ``reference_features.shape[1]`` inputs).  The reference rows supply both
    the Gaussian surrogate variances and each function's influence statistic.
    """
    reference = np.asarray(reference_features, dtype=np.float64)
    if reference.ndim != 2 or reference.shape[0] < 1:
        raise ValueError("reference_features must be a non-empty matrix")
    if size < 1:
        raise ValueError("ensemble size must be >= 1")
    dim = reference.shape[1]
    rng = np.random.default_rng(seed)
    functions = []
    second_moments = np.empty(size)
    stats = np.empty((size, dim))
    values = np.empty((size, reference.shape[0])) if full_covariance else None
    for c in range(size):
        params = random_params(rng, hidden_units, dim)
        functions.append(params)
        hidden = expit(reference @ params.weights_hidden.T + params.bias_hidden)
        outputs = hidden @ params.weights_out + params.bias_out
        second_moments[c] = float(np.mean(outputs * outputs))
        gradients = (hidden * (1.0 - hidden) * params.weights_out) @ params.weights_hidden
        stats[c] = np.add.reduce(gradients * gradients, axis=0) / reference.shape[0]
        if values is not None:
            values[c] = outputs
    gram = values @ values.T / reference.shape[0] if values is not None else None
    return RandomFunctionEnsemble(
        functions=tuple(functions),
        second_moments=second_moments,
        statistic_per_function=stats,
        gram=gram,
    )


def _argmax_indices(
    ensemble: RandomFunctionEnsemble,
    sample_count: int,
    seed: int | np.random.SeedSequence,
    full_covariance: bool,
) -> np.ndarray:
    """Indices of the surrogate-Gaussian argmax function, one per sample."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    size = ensemble.size
    if full_covariance:
        if ensemble.gram is None:
            raise ValueError("ensemble was built without full_covariance")
        chol = np.linalg.cholesky(ensemble.gram + _GRAM_JITTER * np.eye(size))
    else:
        scale = np.sqrt(ensemble.second_moments)
    out = np.empty(sample_count, dtype=np.intp)
    block = max(1, _SAMPLE_BLOCK_ELEMENTS // size)
    for start in range(0, sample_count, block):
        stop = min(start + block, sample_count)
        normals = rng.standard_normal((stop - start, size))
        surrogate = normals @ chol.T if full_covariance else normals * scale
        out[start:stop] = surrogate.argmax(axis=1)
    return out


def sample_discretization_distribution(
    ensemble: RandomFunctionEnsemble,
    target_feature: int,
    sample_count: int = 10_000,
    seed: int | np.random.SeedSequence = 0,
    full_covariance: bool = False,
) -> np.ndarray:
    """Null-law samples for one feature via the random-ensemble argmax.

    Per sample, a zero-mean Gaussian surrogate (variance = second moment, or
    the full Gram in full-covariance mode) is drawn per function, and the
    maximizing function's statistic for ``target_feature`` is emitted.
    """
    if not 0 <= target_feature < ensemble.input_dim:
        raise ValueError(
            f"target_feature {target_feature} out of range for {ensemble.input_dim} inputs"
        )
    chosen = _argmax_indices(ensemble, sample_count, seed, full_covariance)
    return ensemble.statistic_per_function[chosen, target_feature]


def sample_discretization_mixture(
    ensemble: RandomFunctionEnsemble,
    sample_count: int = 10_000,
    seed: int | np.random.SeedSequence = 0,
    full_covariance: bool = False,
) -> np.ndarray:
    """Feature-agnostic null-law samples from the random-ensemble argmax.

    Columns of ``statistic_per_function`` share one distribution because the
    ensemble's init is exchangeable across input coordinates, so a sample
    set usable for every feature is produced by cycling deterministically
    through the columns while drawing argmax indices as usual.
    """
    chosen = _argmax_indices(ensemble, sample_count, seed, full_covariance)
    columns = np.arange(sample_count) % ensemble.input_dim
    return ensemble.statistic_per_function[chosen, columns]


def reject_null(statistic_value: float, quantile: QuantileEstimate) -> bool:
    """True when the statistic strictly exceeds the quantile."""
    return bool(statistic_value > quantile.value)


def estimation_rate(n: int, dimension: int) -> float:
    """Convergence rate (n / log n)^((d+1) / (2 (2d+1))) of the sieve fit."""
    if n < 2:
        raise ValueError("n must be >= 2 so that log n is positive")
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    exponent = (dimension + 1) / (2.0 * (2 * dimension + 1))
    return float((n / math.log(n)) ** exponent)


def suggested_hidden_units(n: int, dimension: int) -> int:
    """Largest K with K^(2 + 1/d) * log K <= n; advisory sizing only."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    exponent = 2.0 + 1.0 / dimension
    units = 1
    while (units + 1) ** exponent * math.log(units + 1) <= n:
        units += 1
    return units
