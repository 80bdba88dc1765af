"""Draw-wise KL projection of a Gaussian linear reference fit onto
lag-restricted submodels.

For iid Gaussian predictive distributions the KL minimizer has a closed
form: the submodel coefficients are the least-squares fit to the reference
draw's fitted means, and the submodel variance absorbs the unexplained
spread, sigma_sub^2 = sigma_ref^2 + MSE. At that optimum the divergence
reduces to n log(sigma_sub / sigma_ref). The derivation is verified
numerically by the optimality property tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as scipy_qr, solve_triangular

from .posterior import LinearModelFit


@dataclass
class ProjectedSubmodel:
    """Per-draw projected coefficients and noise scale for one lag budget."""

    order: int
    coefficients: np.ndarray
    sigma: np.ndarray
    kl_per_draw: np.ndarray
    design: np.ndarray

    def mean_residuals(self, response) -> np.ndarray:
        """Response minus fitted values at the mean projected coefficients."""
        response = np.asarray(response, dtype=np.float64)
        return response - self.design @ self.coefficients.mean(axis=0)


def kl_gaussian_iid(mu_a, sigma_a: float, mu_b, sigma_b: float) -> float:
    """KL(N(mu_a, sigma_a^2 I) || N(mu_b, sigma_b^2 I)) for iid Gaussians."""
    mu_a = np.asarray(mu_a, dtype=np.float64)
    mu_b = np.asarray(mu_b, dtype=np.float64)
    if mu_a.shape != mu_b.shape:
        raise ValueError("mean vectors must have equal length")
    if sigma_a <= 0 or sigma_b <= 0:
        raise ValueError("scales must be positive")
    n = mu_a.size
    return float(n * np.log(sigma_b / sigma_a)
                 + (n * sigma_a ** 2 + np.sum((mu_a - mu_b) ** 2))
                 / (2.0 * sigma_b ** 2) - 0.5 * n)


def project_draw(sub_design, reference_mean,
                 reference_sigma: float) -> tuple[np.ndarray, float, float]:
    """Project one reference draw's predictive onto a restricted design.

    Returns the least-squares coefficients, the inflated noise scale and the
    attained KL divergence.
    """
    X = np.atleast_2d(np.asarray(sub_design, dtype=np.float64))
    f = np.asarray(reference_mean, dtype=np.float64)
    n = f.size
    if X.shape[0] != n:
        raise ValueError("design rows must match reference mean length")
    if reference_sigma <= 0:
        raise ValueError("reference sigma must be positive")
    beta, _, rank, _ = np.linalg.lstsq(X, f, rcond=None)
    if rank < X.shape[1]:
        raise ValueError("submodel design is rank deficient")
    resid = f - X @ beta
    sigma = float(np.sqrt(reference_sigma ** 2 + resid @ resid / n))
    kl = float(n * np.log(sigma / reference_sigma))
    return beta, sigma, kl


def project_submodel(reference_fit: LinearModelFit, order: int) -> ProjectedSubmodel:
    """Project every reference draw onto the first ``order`` lags.

    The submodel design (intercept plus ``order`` leading lag columns) is
    factorized once and reused across draws, so the whole pass costs
    O(S n k) after one QR.
    """
    X_ref = reference_fit.design
    if not 0 <= order <= reference_fit.order:
        raise ValueError(
            f"order must lie in [0, {reference_fit.order}], got {order}")
    X_sub = X_ref[:, : order + 1]
    n = X_ref.shape[0]
    coefs = reference_fit.draws.coefficients
    ref_sigma = reference_fit.draws.sigma

    fitted = coefs @ X_ref.T                           # (S, n) reference means
    q_mat, r_mat = scipy_qr(X_sub, mode="economic")
    diag = np.abs(np.diag(r_mat))
    if diag.min() < 1e-10 * max(diag.max(), 1.0):
        raise ValueError("submodel design is rank deficient")
    beta = solve_triangular(r_mat, q_mat.T @ fitted.T, lower=False).T
    resid = fitted - beta @ X_sub.T
    mse = np.einsum("ij,ij->i", resid, resid) / n
    sigma = np.sqrt(ref_sigma ** 2 + mse)
    kl = n * np.log(sigma / ref_sigma)
    return ProjectedSubmodel(order=order, coefficients=beta, sigma=sigma,
                             kl_per_draw=kl, design=X_sub)
