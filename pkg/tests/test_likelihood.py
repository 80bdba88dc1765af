import numpy as np
import pytest

from tsproj.likelihood import (arma_loglik_matrix, arma_loglik_recursive,
                               build_difference_matrix,
                               pointwise_loglik_matrix)
from tsproj.series import ArmaParams, check_stationarity

from oracles import dense_arma_loglik, normal_logpdf


def random_stationary_params(rng, p, q):
    while True:
        phi = rng.uniform(-0.6, 0.6, size=p)
        theta = rng.uniform(-0.6, 0.6, size=q)
        if check_stationarity(phi) and check_stationarity(-theta):
            return ArmaParams(c=rng.normal(scale=0.5), phi=phi, theta=theta,
                              sigma=rng.uniform(0.5, 2.0))


class TestDifferenceMatrix:
    def test_empty_coefficients_identity(self):
        mat = build_difference_matrix([], "ar", 3)
        assert np.array_equal(mat.dense(), np.eye(3))

    def test_ar_sign_convention(self):
        mat = build_difference_matrix([0.5], "ar", 3).dense()
        expected = np.array([[1, 0, 0], [-0.5, 1, 0], [0, -0.5, 1.0]])
        assert np.array_equal(mat, expected)

    def test_ma_sign_convention(self):
        mat = build_difference_matrix([0.3], "ma", 3).dense()
        assert mat[1, 0] == 0.3
        assert mat[2, 1] == 0.3

    def test_solve_matches_dense(self):
        rng = np.random.default_rng(0)
        mat = build_difference_matrix([0.4, -0.2], "ma", 12)
        b = rng.normal(size=12)
        assert np.allclose(mat.solve(b), np.linalg.solve(mat.dense(), b))

    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(1)
        mat = build_difference_matrix([0.4, -0.2, 0.1], "ar", 15)
        x = rng.normal(size=15)
        assert np.allclose(mat.matvec(x), mat.dense() @ x)

    def test_too_many_lags_rejected(self):
        with pytest.raises(ValueError):
            build_difference_matrix([0.1, 0.2, 0.3], "ar", 3)


class TestLoglik:
    def test_iid_standard_normal_at_zero(self):
        res = arma_loglik_matrix(np.zeros(3), ArmaParams(sigma=1.0))
        assert res.total == pytest.approx(3 * (-0.5 * np.log(2 * np.pi)))

    def test_iid_matches_closed_form(self):
        rng = np.random.default_rng(2)
        y = rng.normal(size=40)
        params = ArmaParams(c=0.7, sigma=1.3)
        res = arma_loglik_matrix(y, params)
        expected = normal_logpdf(y, 0.7, 1.3)
        assert np.allclose(res.pointwise, expected)
        assert res.total == pytest.approx(expected.sum())

    def test_matrix_equals_recursive_on_random_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            params = random_stationary_params(rng, rng.integers(0, 6),
                                              rng.integers(0, 6))
            y = rng.normal(size=rng.integers(5, 501))
            a = arma_loglik_matrix(y, params)
            b = arma_loglik_recursive(y, params)
            assert abs(a.total - b.total) < 1e-8
            assert np.max(np.abs(a.pointwise - b.pointwise)) < 1e-8

    def test_matches_dense_oracle(self):
        # both banded forms against an O(T^3) dense multivariate normal
        rng = np.random.default_rng(4)
        for _ in range(10):
            params = random_stationary_params(rng, 2, 2)
            y = rng.normal(size=30)
            dense = dense_arma_loglik(y, params.c, params.phi, params.theta,
                                      params.sigma)
            assert arma_loglik_matrix(y, params).total == pytest.approx(dense)
            assert arma_loglik_recursive(y, params).total == pytest.approx(dense)

    def test_pointwise_sums_to_total(self):
        rng = np.random.default_rng(5)
        params = random_stationary_params(rng, 3, 2)
        y = rng.normal(size=200)
        res = arma_loglik_matrix(y, params)
        assert res.total == pytest.approx(res.pointwise.sum(), abs=1e-10)

    def test_trailing_zero_theta_invariant(self):
        rng = np.random.default_rng(6)
        y = rng.normal(size=60)
        a = arma_loglik_recursive(y, ArmaParams(phi=[0.5], theta=[0.3]))
        b = arma_loglik_recursive(y, ArmaParams(phi=[0.5], theta=[0.3, 0.0, 0.0]))
        assert a.total == pytest.approx(b.total, abs=1e-12)

    def test_near_noninvertible_still_finite(self):
        rng = np.random.default_rng(7)
        y = rng.normal(size=100)
        res = arma_loglik_recursive(y, ArmaParams(theta=[1.0 / 1.01]))
        assert np.isfinite(res.total)

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            ArmaParams(sigma=-1.0)


class TestPointwiseMatrix:
    def test_single_draw_equals_scalar_call(self):
        rng = np.random.default_rng(8)
        params = random_stationary_params(rng, 1, 1)
        y = rng.normal(size=50)
        mat = pointwise_loglik_matrix(y, [params])
        assert mat.shape == (1, 50)
        assert np.allclose(mat[0], arma_loglik_recursive(y, params).pointwise)

    def test_row_sums_are_totals(self):
        rng = np.random.default_rng(9)
        y = rng.normal(size=80)
        draws = [random_stationary_params(rng, 2, 1) for _ in range(20)]
        mat = pointwise_loglik_matrix(y, draws)
        for row, params in zip(mat, draws):
            assert row.sum() == pytest.approx(
                arma_loglik_recursive(y, params).total)

    def test_ar_draws_are_linear_model_densities(self):
        y = np.array([0.4, -0.2, 0.9, 1.1, 0.0])
        params = ArmaParams(c=0.1, phi=[0.5], sigma=1.2)
        mat = pointwise_loglik_matrix(y, [params])
        # spot-check cells against Normal(y_t; c + phi y_{t-1}, sigma^2)
        assert mat[0, 1] == pytest.approx(normal_logpdf(y[1], 0.1 + 0.5 * y[0], 1.2))
        assert mat[0, 3] == pytest.approx(normal_logpdf(y[3], 0.1 + 0.5 * y[2], 1.2))
        assert mat[0, 4] == pytest.approx(normal_logpdf(y[4], 0.1 + 0.5 * y[3], 1.2))

    def test_mixed_orders_padded(self):
        rng = np.random.default_rng(10)
        y = rng.normal(size=40)
        draws = [ArmaParams(phi=[0.5]), ArmaParams(phi=[0.5], theta=[0.0, 0.0])]
        mat = pointwise_loglik_matrix(y, draws)
        assert np.allclose(mat[0], mat[1])
