"""Conditional ARMA log-likelihood in two independent forms.

Stacking the observations turns the ARMA recursion into H_phi y = c 1 +
H_theta e with banded unit-lower-triangular difference matrices, so the
likelihood can be evaluated with O(T (p+q)) banded solves. The recursive
form computes the same zero-initial-condition residuals directly and acts
as the oracle for the banded path. Both factor the joint density
sequentially, so ``pointwise[t]`` is log p(y_t | y_{1:t-1}, params).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .series import ArmaParams, TimeSeries

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class BandedLowerTriangular:
    """Unit-lower-triangular banded matrix stored as (bandwidth+1) diagonals.

    ``bands[j, i]`` holds entry (i + j, i), so row 0 is the main diagonal.
    """

    dim: int
    bands: np.ndarray

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = self.bands[0] * x
        for j in range(1, self.bands.shape[0]):
            out[j:] += self.bands[j, : self.dim - j] * x[: self.dim - j]
        return out

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Forward substitution via LAPACK's banded solver."""
        if self.bands.shape[0] == 1:
            return np.asarray(b, dtype=np.float64) / self.bands[0]
        ab = np.zeros_like(self.bands)
        ab[0] = self.bands[0]
        for j in range(1, self.bands.shape[0]):
            ab[j, : self.dim - j] = self.bands[j, : self.dim - j]
        return solve_banded((self.bandwidth, 0), ab, b)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for j in range(self.bands.shape[0]):
            idx = np.arange(self.dim - j)
            out[idx + j, idx] = self.bands[j, : self.dim - j]
        return out


def build_difference_matrix(coefficients, sign_convention: str,
                            T: int) -> BandedLowerTriangular:
    """Banded T x T difference matrix for an AR or MA lag polynomial.

    ``sign_convention='ar'`` places -phi_i on the i-th subdiagonal (the AR
    polynomial carries minus signs); ``'ma'`` places +theta_j (plus signs).
    """
    coefficients = np.atleast_1d(np.asarray(coefficients, dtype=np.float64))
    k = coefficients.size
    if k >= T:
        raise ValueError(f"need more observations than lags, got T={T}, k={k}")
    if sign_convention == "ar":
        signed = -coefficients
    elif sign_convention == "ma":
        signed = coefficients.copy()
    else:
        raise ValueError("sign_convention must be 'ar' or 'ma'")
    bands = np.zeros((k + 1, T))
    bands[0] = 1.0
    for j in range(1, k + 1):
        bands[j, : T - j] = signed[j - 1]
    return BandedLowerTriangular(T, bands)


@dataclass
class LogLikResult:
    """Total conditional log-likelihood and its per-observation terms."""

    total: float
    pointwise: np.ndarray


def _pointwise_from_residuals(eps: np.ndarray, sigma: float) -> np.ndarray:
    return -0.5 * LOG_2PI - np.log(sigma) - eps ** 2 / (2.0 * sigma ** 2)


def arma_loglik_matrix(series, params: ArmaParams) -> LogLikResult:
    """Log-likelihood via the stacked banded-matrix form.

    Computes e = H_theta^{-1} (H_phi y - c 1) with banded triangular solves;
    the log-determinant of the implied covariance reduces to T log sigma^2
    because both difference matrices have unit diagonals. The sequential
    (Cholesky-equivalent) factorization makes pointwise[t] the conditional
    density of y_t given its past.
    """
    y = series.values if isinstance(series, TimeSeries) else \
        np.asarray(series, dtype=np.float64)
    if params.sigma <= 0:
        raise ValueError("sigma must be positive")
    T = y.size
    h_phi = build_difference_matrix(params.phi, "ar", T)
    h_theta = build_difference_matrix(params.theta, "ma", T)
    z = h_phi.matvec(y) - params.c
    eps = h_theta.solve(z)
    pointwise = _pointwise_from_residuals(eps, params.sigma)
    return LogLikResult(float(pointwise.sum()), pointwise)


def arma_loglik_recursive(series, params: ArmaParams) -> LogLikResult:
    """Log-likelihood via the direct residual recursion (independent oracle).

    eps_t = y_t - c - sum(phi_i y_{t-i}) - sum(theta_j eps_{t-j}) with zero
    initial conditions; each pointwise term is the Normal(0, sigma^2) log
    density of eps_t. Defined for any theta, but numerically sensitive when
    the MA polynomial is close to non-invertible.
    """
    y = series.values if isinstance(series, TimeSeries) else \
        np.asarray(series, dtype=np.float64)
    if params.sigma <= 0:
        raise ValueError("sigma must be positive")
    eps = kernels.residuals_core(y, params.c, params.phi, params.theta)
    pointwise = _pointwise_from_residuals(eps, params.sigma)
    return LogLikResult(float(pointwise.sum()), pointwise)


def pointwise_loglik_matrix(series, draws: Sequence[ArmaParams]) -> np.ndarray:
    """S x T matrix whose row s is the pointwise conditional log-likelihood
    of the series under parameter draw s.

    Draws of unequal order are zero-padded to a common (p, q), which leaves
    the conditional likelihood unchanged.
    """
    y = series.values if isinstance(series, TimeSeries) else \
        np.asarray(series, dtype=np.float64)
    draws = list(draws)
    if not draws:
        raise ValueError("need at least one parameter draw")
    p = max(d.p for d in draws)
    q = max(d.q for d in draws)
    S = len(draws)
    cs = np.array([d.c for d in draws])
    sigmas = np.array([d.sigma for d in draws])
    phis = np.zeros((S, p))
    thetas = np.zeros((S, q))
    for s, d in enumerate(draws):
        phis[s, : d.p] = d.phi
        thetas[s, : d.q] = d.theta
    eps = kernels.batch_residuals_core(y, cs, phis, thetas)
    return (-0.5 * LOG_2PI - np.log(sigmas)[:, None]
            - eps ** 2 / (2.0 * sigmas[:, None] ** 2))
