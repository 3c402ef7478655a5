"""Fourier weight tables, both null-law samplers, quantiles, and rates."""

import math
from itertools import product

import numpy as np
import pytest

from sigtest.network import NetworkParams
from sigtest.null_dist import (
    CapacityError,
    QuantileEstimate,
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
from sigtest.statistic import empirical_statistic


def brute_force_weight(index, smoothness):
    """Direct sum over alpha multi-indices with |alpha| <= smoothness."""
    gammas = [(m * np.pi) ** 2 for m in index]
    total = 0.0
    for alpha in product(range(smoothness + 1), repeat=len(index)):
        if sum(alpha) <= smoothness:
            term = 1.0
            for g, a in zip(gammas, alpha):
                if a > 0:
                    term *= g**a
            total += term
    return total


class TestFourierWeights:
    def test_one_dim_closed_forms(self):
        table = fourier_weights(1, 2)
        assert table.smoothness == 2
        assert table.size == 2
        # index 0 has gamma 0, and 0^0 = 1 leaves only the constant monomial
        assert table.d_squared[0] == 1.0
        np.testing.assert_allclose(table.d_squared[1], 1 + np.pi**2 + np.pi**4, rtol=1e-12)

    def test_two_dim_closed_forms(self):
        table = fourier_weights(2, 2)
        assert table.smoothness == 3
        by_index = {idx: d2 for idx, d2, _ in table.entries()}
        assert by_index[(0, 0)] == 1.0
        np.testing.assert_allclose(
            by_index[(1, 0)], 1 + np.pi**2 + np.pi**4 + np.pi**6, rtol=1e-12
        )
        assert by_index[(1, 0)] == by_index[(0, 1)]

    def test_matches_brute_force_in_three_dims(self):
        table = fourier_weights(3, 3)
        assert table.smoothness == 3
        for idx, d2, gammas in table.entries():
            np.testing.assert_allclose(d2, brute_force_weight(idx, 3), rtol=1e-12)
            np.testing.assert_allclose(gammas, [(m * np.pi) ** 2 for m in idx], rtol=1e-15)

    def test_monotone_in_each_coordinate(self):
        table = fourier_weights(2, 4)
        by_index = {idx: d2 for idx, d2, _ in table.entries()}
        for (i, j), d2 in by_index.items():
            if i + 1 < 4:
                assert by_index[(i + 1, j)] > d2
            if j + 1 < 4:
                assert by_index[(i, j + 1)] > d2

    def test_capacity_guard(self):
        with pytest.raises(CapacityError, match="exceeds the budget"):
            fourier_weights(11, 4)
        # the same request fits under a raised budget
        fourier_weights(11, 2, max_entries=2**11)

    def test_largest_feasible_truncation(self):
        assert largest_feasible_truncation(11) == 3
        assert largest_feasible_truncation(11, max_entries=2**11) == 2
        assert largest_feasible_truncation(1) == 2**20
        assert largest_feasible_truncation(30, max_entries=8) == 1

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            fourier_weights(0, 2)
        with pytest.raises(ValueError):
            fourier_weights(2, 0)


class TestSeriesSampler:
    def test_deterministic_and_positive(self):
        table = fourier_weights(2, 3)
        cfg = SeriesSamplerConfig(table=table, target_feature=0, sample_count=500, seed=42)
        a = sample_series_distribution(cfg)
        b = sample_series_distribution(cfg)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (500,)
        assert (a > 0).all()

    def test_scale_acts_multiplicatively(self):
        table = fourier_weights(2, 3)
        base = sample_series_distribution(
            SeriesSamplerConfig(table=table, target_feature=0, sample_count=300, seed=7)
        )
        scaled = sample_series_distribution(
            SeriesSamplerConfig(
                table=table, target_feature=0, scale_b_squared=2.5, sample_count=300, seed=7
            )
        )
        np.testing.assert_array_equal(scaled, 2.5 * base)

    def test_law_symmetric_across_features(self):
        # the index grid is the full cube, so swapping coordinates maps the
        # sample set for one target onto the other; means must agree closely
        table = fourier_weights(2, 3)
        m = 40_000
        a = sample_series_distribution(
            SeriesSamplerConfig(table=table, target_feature=0, sample_count=m, seed=1)
        )
        b = sample_series_distribution(
            SeriesSamplerConfig(table=table, target_feature=1, sample_count=m, seed=2)
        )
        assert abs(a.mean() - b.mean()) < 4 * b.std() / math.sqrt(m)

    def test_bounded_by_extreme_coefficient_ratios(self):
        # each sample is a convex-combination-weighted ratio, so it must lie
        # within the range of gamma_{n_j} / d_n^2 over the table
        table = fourier_weights(1, 3)
        ratios = table.gammas[:, 0] / table.d_squared
        samples = sample_series_distribution(
            SeriesSamplerConfig(table=table, target_feature=0, sample_count=2000, seed=3)
        )
        assert samples.min() >= ratios.min() - 1e-15
        assert samples.max() <= ratios.max() + 1e-15

    def test_target_feature_bounds(self):
        table = fourier_weights(2, 2)
        with pytest.raises(ValueError, match="target_feature"):
            SeriesSamplerConfig(table=table, target_feature=2)


class TestQuantile:
    def test_order_statistic_examples(self):
        samples = np.array([3.0, 1.0, 4.0, 2.0])
        assert empirical_quantile(samples, 0.5).value == 2.0
        assert empirical_quantile(samples, 1.0).value == 4.0
        assert empirical_quantile(samples, 0.25).value == 1.0
        assert empirical_quantile(samples, 0.26).value == 2.0
        assert empirical_quantile(samples, 0.75).value == 3.0

    def test_float_boundary_is_safe(self):
        # 0.7 * 10 is 6.999999999999999 in floats; the rank must still be 7
        samples = np.arange(1.0, 11.0)
        assert empirical_quantile(samples, 0.7).value == 7.0
        # 0.95 * 2000 = 1900 exactly in floats
        big = np.arange(1.0, 2001.0)
        assert empirical_quantile(big, 0.95).value == 1900.0

    def test_tiny_level_gives_minimum(self):
        samples = np.array([5.0, 2.0, 9.0])
        assert empirical_quantile(samples, 1e-12).value == 2.0

    def test_metadata(self):
        est = empirical_quantile(
            np.array([1.0, 2.0]), 0.5, method="discretization", scale_b_squared=3.0
        )
        assert est.method == "discretization"
        assert est.sample_count == 2
        assert est.scale_b_squared == 3.0
        assert est.level == 0.5

    def test_validation(self):
        with pytest.raises(ValueError, match="level"):
            empirical_quantile(np.array([1.0]), 0.0)
        with pytest.raises(ValueError, match="level"):
            empirical_quantile(np.array([1.0]), 1.5)
        with pytest.raises(ValueError, match="non-empty"):
            empirical_quantile(np.array([]), 0.5)
        with pytest.raises(ValueError, match="method"):
            QuantileEstimate(
                level=0.5, value=1.0, method="bogus", sample_count=1, scale_b_squared=1.0
            )


class TestEnsemble:
    def test_profile_matches_direct_recomputation(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1.0, 1.0, size=(200, 3))
        ensemble = build_ensemble(hidden_units=4, size=6, reference_features=X, seed=5)
        assert ensemble.size == 6
        assert ensemble.input_dim == 3
        assert ensemble.gram is None
        for c, params in enumerate(ensemble.functions):
            from sigtest.network import predict

            outputs = predict(params, X)
            np.testing.assert_allclose(
                ensemble.second_moments[c], np.mean(outputs**2), rtol=1e-12
            )
            np.testing.assert_allclose(
                ensemble.statistic_per_function[c],
                empirical_statistic(params, X).values,
                rtol=1e-12,
            )

    def test_deterministic(self):
        X = np.random.default_rng(1).uniform(-1.0, 1.0, size=(50, 2))
        a = build_ensemble(3, 4, X, seed=9)
        b = build_ensemble(3, 4, X, seed=9)
        np.testing.assert_array_equal(a.second_moments, b.second_moments)
        np.testing.assert_array_equal(a.statistic_per_function, b.statistic_per_function)

    def test_full_covariance_gram(self):
        X = np.random.default_rng(2).uniform(-1.0, 1.0, size=(100, 2))
        ensemble = build_ensemble(3, 5, X, seed=4, full_covariance=True)
        assert ensemble.gram.shape == (5, 5)
        np.testing.assert_allclose(np.diag(ensemble.gram), ensemble.second_moments, rtol=1e-12)
        np.testing.assert_allclose(ensemble.gram, ensemble.gram.T, rtol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            build_ensemble(3, 0, np.ones((5, 2)))
        with pytest.raises(ValueError):
            build_ensemble(3, 2, np.ones((0, 2)))


class TestDiscretizationSampler:
    def test_samples_come_from_statistic_column(self):
        X = np.random.default_rng(3).uniform(-1.0, 1.0, size=(80, 2))
        ensemble = build_ensemble(3, 10, X, seed=1)
        samples = sample_discretization_distribution(ensemble, 1, sample_count=500, seed=2)
        assert np.isin(samples, ensemble.statistic_per_function[:, 1]).all()

    def test_single_function_is_constant(self):
        X = np.random.default_rng(4).uniform(-1.0, 1.0, size=(40, 2))
        ensemble = build_ensemble(3, 1, X, seed=6)
        samples = sample_discretization_distribution(ensemble, 0, sample_count=20, seed=0)
        np.testing.assert_array_equal(
            samples, np.full(20, ensemble.statistic_per_function[0, 0])
        )

    def test_mixture_cycles_columns(self):
        X = np.random.default_rng(5).uniform(-1.0, 1.0, size=(40, 3))
        ensemble = build_ensemble(2, 1, X, seed=7)  # single function: argmax fixed
        samples = sample_discretization_mixture(ensemble, sample_count=7, seed=0)
        expected = ensemble.statistic_per_function[0, np.arange(7) % 3]
        np.testing.assert_array_equal(samples, expected)

    def test_deterministic(self):
        X = np.random.default_rng(6).uniform(-1.0, 1.0, size=(60, 2))
        ensemble = build_ensemble(3, 8, X, seed=8)
        a = sample_discretization_mixture(ensemble, sample_count=100, seed=11)
        b = sample_discretization_mixture(ensemble, sample_count=100, seed=11)
        np.testing.assert_array_equal(a, b)

    def test_full_covariance_requires_gram(self):
        X = np.random.default_rng(7).uniform(-1.0, 1.0, size=(30, 2))
        ensemble = build_ensemble(3, 4, X, seed=3)
        with pytest.raises(ValueError, match="full_covariance"):
            sample_discretization_distribution(ensemble, 0, 10, 0, full_covariance=True)

    def test_full_covariance_mode_runs(self):
        X = np.random.default_rng(8).uniform(-1.0, 1.0, size=(30, 2))
        ensemble = build_ensemble(3, 4, X, seed=3, full_covariance=True)
        samples = sample_discretization_mixture(
            ensemble, sample_count=50, seed=1, full_covariance=True
        )
        assert samples.shape == (50,)
        flat = ensemble.statistic_per_function.ravel()
        assert np.isin(samples, flat).all()

    def test_target_feature_bounds(self):
        X = np.random.default_rng(9).uniform(-1.0, 1.0, size=(30, 2))
        ensemble = build_ensemble(3, 4, X, seed=3)
        with pytest.raises(ValueError, match="target_feature"):
            sample_discretization_distribution(ensemble, 2, 10, 0)


class TestDecisionAndRates:
    def test_reject_is_strict(self):
        q = QuantileEstimate(
            level=0.95, value=1.0, method="series", sample_count=10, scale_b_squared=1.0
        )
        assert reject_null(1.0 + 1e-12, q)
        assert not reject_null(1.0, q)
        assert not reject_null(0.5, q)

    def test_estimation_rate_values(self):
        np.testing.assert_allclose(estimation_rate(100_000, 8), 11.031315774041138, rtol=1e-12)
        expected = (math.e**2 / 2.0) ** (2.0 / 6.0)
        np.testing.assert_allclose(estimation_rate(round(math.e**2), 1), expected, rtol=1e-2)
        with pytest.raises(ValueError):
            estimation_rate(1, 8)

    def test_estimation_rate_monotone_in_n(self):
        values = [estimation_rate(n, 8) for n in (10, 100, 1000, 10_000)]
        assert values == sorted(values)

    def test_suggested_hidden_units_brute_force(self):
        for n, d in ((100, 1), (20_000, 8), (100_000, 8)):
            k = suggested_hidden_units(n, d)
            exponent = 2.0 + 1.0 / d
            assert k**exponent * math.log(k) <= n or k == 1
            assert (k + 1) ** exponent * math.log(k + 1) > n
        assert suggested_hidden_units(100_000, 8) == 108
        assert suggested_hidden_units(20_000, 8) == 54
