import numpy as np
import pytest

from tsproj.series import (ArmaOrder, ArmaParams, SarmaOrder, StationarityError,
                           TimeSeries, check_stationarity, difference,
                           expand_sarma, lag_design, load_csv,
                           polynomial_product, sample_acf, sample_pacf,
                           save_csv, simulate_arma, simulate_sarma)


class TestTypes:
    def test_timeseries_rejects_empty(self):
        with pytest.raises(ValueError):
            TimeSeries(np.array([]))

    def test_timeseries_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            TimeSeries([1.0, np.nan, 2.0])

    def test_period_bounds(self):
        with pytest.raises(ValueError):
            TimeSeries(np.arange(10.0), period=1)
        with pytest.raises(ValueError):
            TimeSeries(np.arange(10.0), period=10)
        assert TimeSeries(np.arange(10.0), period=4).period == 4

    def test_orders_nonnegative(self):
        with pytest.raises(ValueError):
            ArmaOrder(-1, 0)
        with pytest.raises(ValueError):
            SarmaOrder(ArmaOrder(1, 1), ArmaOrder(0, 0), s=1)

    def test_params_validate_sigma(self):
        with pytest.raises(ValueError):
            ArmaParams(sigma=0.0)


class TestStationarity:
    def test_scalar_cases(self):
        assert check_stationarity([0.5]) is True
        assert check_stationarity([1.0]) is False

    def test_quadratic_roots_two_and_four(self):
        # 1 - 0.75 z + 0.125 z^2 has roots 2 and 4
        assert check_stationarity([0.75, -0.125]) is True

    def test_matches_abs_phi_for_scalars(self):
        for phi in np.linspace(-1.5, 1.5, 61):
            assert check_stationarity([phi]) == (abs(phi) < 1.0 - 1e-12)

    def test_trailing_zeros_ignored(self):
        assert check_stationarity([0.5, 0.0, 0.0]) is True


class TestPolynomialProduct:
    def test_identity(self):
        assert polynomial_product([1.0], [1.0], 12).tolist() == [1.0]

    def test_strided_expansion(self):
        out = polynomial_product([1, -0.5], [1, -0.3], 2)
        assert np.allclose(out, [1.0, -0.5, -0.3, 0.15])

    def test_multiply_by_one(self):
        assert np.allclose(polynomial_product([1, -0.5], [1.0], 1), [1, -0.5])


class TestSimulation:
    def test_white_noise_moments(self):
        ts = simulate_arma(ArmaParams(sigma=1.0), 1000, seed=4)
        assert abs(ts.values.mean()) < 0.15
        assert abs(ts.values.var() - 1.0) < 0.15

    def test_ar1_autocorrelation(self):
        ts = simulate_arma(ArmaParams(phi=[0.9]), 20000, seed=5)
        assert abs(sample_acf(ts, 1)[1] - 0.9) < 0.02

    def test_nonstationary_rejected(self):
        with pytest.raises(StationarityError):
            simulate_arma(ArmaParams(phi=[1.5]), 100)

    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            simulate_arma(ArmaParams(), 0)

    def test_seed_reproducible(self):
        a = simulate_arma(ArmaParams(phi=[0.5], theta=[0.2]), 200, seed=9)
        b = simulate_arma(ArmaParams(phi=[0.5], theta=[0.2]), 200, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_sarma_trivial_seasonal_matches_arma(self):
        params = ArmaParams(phi=[0.5], theta=[0.3])
        a = simulate_sarma(params, ArmaParams(), 12, 150, burn_in=80, seed=3)
        b = simulate_arma(params, 150, burn_in=80, seed=3)
        assert np.array_equal(a.values, b.values)

    def test_sarma_expansion_cross_term(self):
        expanded = expand_sarma(ArmaParams(phi=[0.5], theta=[0.4, 0.2]),
                                ArmaParams(phi=[0.6]), 12)
        assert expanded.phi.size == 13
        assert expanded.phi[12] == pytest.approx(-0.5 * 0.6)
        assert expanded.theta.size == 2

    def test_sarma_rejects_s1(self):
        with pytest.raises(ValueError):
            simulate_sarma(ArmaParams(phi=[0.5]), ArmaParams(phi=[0.3]), 1, 100)

    def test_expanded_polynomial_equals_direct_simulation(self):
        params = ArmaParams(phi=[0.4], theta=[0.3])
        seasonal = ArmaParams(phi=[0.5], theta=[0.2])
        expanded = expand_sarma(params, seasonal, 4)
        a = simulate_sarma(params, seasonal, 4, 200, burn_in=100, seed=11)
        b = simulate_arma(expanded, 200, burn_in=100, seed=11)
        assert np.allclose(a.values, b.values)


class TestDifference:
    def test_identity(self):
        ts = TimeSeries(np.arange(1.0, 11.0))
        out = difference(ts, 0, 0)
        assert np.array_equal(out.values, ts.values)

    def test_constant_first_difference(self):
        out = difference(TimeSeries(np.full(20, 3.5)), d=1)
        assert out.values.shape == (19,)
        assert np.all(out.values == 0.0)

    def test_second_difference_kills_linear_trend(self):
        out = difference(TimeSeries(np.arange(30.0)), d=2)
        assert np.allclose(out.values, 0.0)

    def test_seasonal_difference_length(self):
        ts = TimeSeries(np.arange(40.0), period=4)
        out = difference(ts, d=1, D=1, s=4)
        assert len(out) == 40 - 1 - 4

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            difference(TimeSeries(np.arange(5.0)), d=2, D=1, s=4)

    def test_reconstruction_roundtrip(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=50).cumsum() + 5.0
        ts = TimeSeries(values)
        diffed = difference(ts, d=1)
        rebuilt = np.concatenate([[values[0]], diffed.values]).cumsum()
        assert np.allclose(rebuilt, values, atol=1e-10)

    def test_seasonal_reconstruction_roundtrip(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=48)
        s = 12
        diffed = difference(TimeSeries(values), D=1, s=s).values
        rebuilt = values.copy()
        rebuilt[s:] = 0.0
        for t in range(s, 48):
            rebuilt[t] = rebuilt[t - s] + diffed[t - s]
        assert np.allclose(rebuilt, values, atol=1e-10)


class TestAcfPacf:
    def test_lag_zero_is_one(self):
        ts = simulate_arma(ArmaParams(), 128, seed=0)
        assert sample_acf(ts, 5)[0] == 1.0
        assert sample_pacf(ts, 5)[0] == 1.0

    def test_iid_within_null_band(self):
        ts = simulate_arma(ArmaParams(), 4000, seed=1)
        acf = sample_acf(ts, 10)
        assert np.all(np.abs(acf[1:]) < 3.0 / np.sqrt(4000))

    def test_ar1_pacf_cutoff(self):
        ts = simulate_arma(ArmaParams(phi=[0.9]), 20000, seed=2)
        pacf = sample_pacf(ts, 3)
        assert abs(pacf[1] - 0.9) < 0.03
        assert abs(pacf[2]) < 0.05

    def test_values_bounded(self):
        ts = simulate_arma(ArmaParams(phi=[0.7], theta=[0.4]), 500, seed=3)
        acf = sample_acf(ts, 30)
        assert np.all(np.abs(acf) <= 1.0 + 1e-12)

    def test_max_lag_bound(self):
        with pytest.raises(ValueError):
            sample_acf(TimeSeries(np.arange(5.0)), 5)


class TestLagDesign:
    def test_intercept_only(self):
        design, response = lag_design(TimeSeries(np.arange(1.0, 6.0)), 0)
        assert design.shape == (5, 1)
        assert np.all(design == 1.0)
        assert np.array_equal(response, np.arange(1.0, 6.0))

    def test_small_example_by_hand(self):
        design, response = lag_design(TimeSeries(np.array([1.0, 2, 3, 4])), 2)
        assert np.array_equal(design, [[1, 2, 1], [1, 3, 2]])
        assert np.array_equal(response, [3.0, 4.0])

    def test_full_order_rejected(self):
        with pytest.raises(ValueError):
            lag_design(TimeSeries(np.arange(4.0)), 4)

    def test_known_params_recover_innovations(self):
        params = ArmaParams(c=0.3, phi=[0.6, -0.2])
        ts = simulate_arma(params, 300, burn_in=0, seed=7)
        design, response = lag_design(ts, 2)
        # with burn_in=0 and zero initials, fitted residuals equal the
        # innovations from the same seed exactly
        innov = np.random.default_rng(7).normal(0.0, 1.0, size=300)
        fitted = design @ np.array([0.3, 0.6, -0.2])
        assert np.allclose(response - fitted, innov[2:], atol=1e-12)


class TestCsv:
    def test_roundtrip(self, tmp_path):
        ts = simulate_arma(ArmaParams(phi=[0.5]), 64, seed=12)
        path = tmp_path / "series.csv"
        save_csv(ts, path)
        back = load_csv(path)
        assert np.array_equal(back.values, ts.values)

    def test_single_column_no_header(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("1.5\n2.5\n-3.0\n")
        assert np.array_equal(load_csv(path).values, [1.5, 2.5, -3.0])

    def test_missing_value_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,value\n1,1.0\n2,\n")
        with pytest.raises(ValueError):
            load_csv(path)

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0\noops\n")
        with pytest.raises(ValueError):
            load_csv(path)

    def test_nan_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0\nnan\n")
        with pytest.raises(ValueError):
            load_csv(path)
