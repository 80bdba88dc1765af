import numpy as np
import pytest

from tsproj.posterior import (CollinearityError, PriorSpec, SamplerConfig,
                              count_nonstationary, default_prior, ess,
                              fit_ar, fit_bayes_linear, fit_count,
                              posterior_mean_residuals, save_draws_csv,
                              split_rhat)
from tsproj.series import ArmaParams, sample_acf, simulate_arma

from oracles import quadrature_posterior_mean

FAST = SamplerConfig(chains=2, warmup=300, samples=500, seed=0)


def make_problem(rng, n=60, k=2):
    X = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
    beta = rng.normal(scale=1.0, size=k)
    y = X @ beta + rng.normal(scale=rng.uniform(0.5, 1.5), size=n)
    return X, y


class TestFitBayesLinear:
    def test_recovers_intercept_model(self):
        rng = np.random.default_rng(0)
        n = 500
        X = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = 2.0 + rng.normal(size=n)
        fit = fit_bayes_linear(X, y, default_prior(1, y), SamplerConfig(seed=1))
        d = fit.draws
        mean, sd = d.coefficients[:, 0].mean(), d.coefficients[:, 0].std()
        assert abs(mean - 2.0) < 3 * sd
        assert abs(d.coefficients[:, 1].mean()) < 3 * d.coefficients[:, 1].std()

    def test_tight_prior_collapses_slope(self):
        rng = np.random.default_rng(1)
        X, y = make_problem(rng, n=100, k=2)
        prior = PriorSpec(coef_scales=[1e-4], intercept_scale=2.5,
                          sigma_scale=1.0)
        fit = fit_bayes_linear(X, y, prior, FAST)
        assert np.abs(fit.draws.coefficients[:, 1]).max() < 1e-2

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(2)
        X, y = make_problem(rng)
        prior = default_prior(1, y)
        a = fit_bayes_linear(X, y, prior, FAST)
        b = fit_bayes_linear(X, y, prior, FAST)
        assert np.array_equal(a.draws.coefficients, b.draws.coefficients)
        assert np.array_equal(a.draws.sigma, b.draws.sigma)

    def test_collinear_design_rejected(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=50)
        X = np.column_stack([np.ones(50), x, 2.0 * x])
        with pytest.raises(CollinearityError) as err:
            fit_bayes_linear(X, np.zeros(50), default_prior(2, x), FAST)
        assert 2 in err.value.columns or 1 in err.value.columns

    def test_sigma_draws_positive(self):
        rng = np.random.default_rng(4)
        X, y = make_problem(rng)
        fit = fit_bayes_linear(X, y, default_prior(1, y), FAST)
        assert np.all(fit.draws.sigma > 0)

    def test_matches_quadrature_oracle(self):
        # posterior means within 3 Monte Carlo SEs on 20 random problems
        rng = np.random.default_rng(5)
        failures = 0
        for _ in range(20):
            X, y = make_problem(rng, n=int(rng.integers(40, 120)),
                                k=int(rng.integers(1, 4)))
            k = X.shape[1]
            prior = PriorSpec(coef_scales=np.full(k - 1, 1.0),
                              intercept_scale=2.0, intercept_df=1e6,
                              sigma_scale=float(np.std(y)), sigma_df=3.0)
            fit = fit_bayes_linear(X, y, prior,
                                   SamplerConfig(chains=2, warmup=300,
                                                 samples=1500, seed=9))
            oracle = quadrature_posterior_mean(
                X, y, prior.coef_scales, prior.intercept_scale,
                prior.sigma_scale, prior.sigma_df)
            d = fit.draws
            mcse = d.coefficients.std(axis=0) / np.sqrt(
                np.maximum(d.ess[:k], 10.0))
            if np.any(np.abs(d.coefficients.mean(axis=0) - oracle) > 3 * mcse):
                failures += 1
        # allow one 3-sigma excursion across 20 problems x k parameters
        assert failures <= 1

    def test_counts_fits(self):
        rng = np.random.default_rng(6)
        X, y = make_problem(rng)
        before = fit_count()
        fit_bayes_linear(X, y, default_prior(1, y), FAST)
        assert fit_count() == before + 1


class TestFitAr:
    def test_recovers_ar1_coefficient(self):
        ts = simulate_arma(ArmaParams(phi=[0.8]), 500, seed=11)
        fit = fit_ar(ts, 1, config=SamplerConfig(seed=5))
        d = fit.draws
        assert abs(d.coefficients[:, 1].mean() - 0.8) < 3 * d.coefficients[:, 1].std()
        assert d.nonstationary_draws == 0

    def test_intercept_only(self):
        ts = simulate_arma(ArmaParams(c=1.0), 200, seed=12)
        fit = fit_ar(ts, 0, config=FAST)
        assert fit.design.shape[1] == 1

    def test_p_too_large_rejected(self):
        ts = simulate_arma(ArmaParams(), 30, seed=13)
        with pytest.raises(ValueError):
            fit_ar(ts, 30, config=FAST)

    def test_column_order(self):
        ts = simulate_arma(ArmaParams(phi=[0.5, 0.2]), 150, seed=14)
        fit = fit_ar(ts, 2, config=FAST)
        assert fit.draws.param_names == ["intercept", "ar1", "ar2"]


class TestResiduals:
    def test_near_perfect_fit_residuals_vanish(self):
        rng = np.random.default_rng(15)
        X = np.column_stack([np.ones(80), rng.normal(size=80)])
        y = X @ np.array([1.0, 2.0]) + rng.normal(scale=1e-6, size=80)
        fit = fit_bayes_linear(X, y, default_prior(1, y), FAST)
        assert np.max(np.abs(posterior_mean_residuals(fit))) < 1e-2

    def test_intercept_only_residuals_centered(self):
        rng = np.random.default_rng(16)
        y = rng.normal(loc=3.0, size=100)
        X = np.ones((100, 1))
        prior = default_prior(0, y)
        fit = fit_bayes_linear(X, y, prior, FAST)
        resid = posterior_mean_residuals(fit)
        assert np.allclose(resid, y - fit.draws.coefficients.mean(), atol=1e-12)

    def test_ar1_fit_to_arma11_leaves_ma_structure(self):
        ts = simulate_arma(ArmaParams(phi=[0.5], theta=[0.6]), 600, seed=17)
        fit = fit_ar(ts, 1, config=FAST)
        resid = posterior_mean_residuals(fit)
        acf1 = sample_acf(resid, 1)[1]
        assert abs(acf1) > 3.0 / np.sqrt(resid.size)


class TestDiagnostics:
    def test_constant_draws_flagged(self):
        draws = np.ones((4, 100, 1))
        rhat, flags = split_rhat(draws, return_flags=True)
        assert rhat[0] == 1.0
        assert flags[0]

    def test_iid_draws_near_one(self):
        rng = np.random.default_rng(18)
        draws = rng.normal(size=(4, 1000, 1))
        assert 0.99 <= split_rhat(draws)[0] <= 1.01
        assert abs(ess(draws)[0] - 4000) < 400

    def test_offset_chain_detected(self):
        rng = np.random.default_rng(19)
        draws = rng.normal(size=(4, 500, 1))
        draws[0] += 10.0
        assert split_rhat(draws)[0] > 1.05

    def test_autocorrelated_chain_low_ess(self):
        rng = np.random.default_rng(20)
        m, n = 4, 2000
        draws = np.empty((m, n, 1))
        for c in range(m):
            e = rng.normal(size=n)
            x = np.empty(n)
            x[0] = e[0]
            for t in range(1, n):
                x[t] = 0.9 * x[t - 1] + e[t]
            draws[c, :, 0] = x
        val = ess(draws)[0]
        assert val < 0.2 * m * n

    def test_nonstationary_counter(self):
        phis = np.array([[0.5], [1.2], [-0.99], [1.0]])
        assert count_nonstationary(phis) == 2


class TestSerialization:
    def test_draws_csv_roundtrip(self, tmp_path):
        rng = np.random.default_rng(21)
        X, y = make_problem(rng)
        fit = fit_bayes_linear(X, y, default_prior(1, y), FAST)
        path = tmp_path / "draws.csv"
        save_draws_csv(fit.draws, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (fit.draws.n_draws, 3)
        assert np.allclose(data[:, 0], fit.draws.coefficients[:, 0])
        assert np.allclose(data[:, 2], fit.draws.sigma)
