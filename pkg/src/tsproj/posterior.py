"""Posterior sampling for the Bayesian linear sub-problems.

The two stages of the order-identification pipeline are linear regressions
(a lagged-response autoregression and a residual autoregression), so the
sampler here targets y = X b + e with independent priors: Gaussian
coefficients, a Student-t location prior on the first (intercept) column and
a half-Student-t scale prior on sigma. beta | sigma is conjugate Gaussian
once the Student-t intercept is written as a scale mixture of normals, and
sigma | beta moves by slice sampling on log sigma, so no tuning is needed.
"""

from __future__ import annotations

import csv
import math
import threading
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import qr as scipy_qr
from scipy.stats import norm as normal_dist

from .series import STATIONARITY_TOL, TimeSeries, lag_design

RHAT_THRESHOLD = 1.05

_fit_lock = threading.Lock()
_fit_count = 0


def fit_count() -> int:
    """Number of MCMC fits run so far in this process (complexity audits)."""
    return _fit_count


def _bump_fit_count() -> None:
    global _fit_count
    with _fit_lock:
        _fit_count += 1


class CollinearityError(ValueError):
    """Raised when the design matrix is rank deficient."""

    def __init__(self, columns: Sequence[int]):
        self.columns = list(columns)
        super().__init__(f"design is rank deficient; collinear columns: {self.columns}")


class ConvergenceError(RuntimeError):
    """Raised when a required reference fit fails its convergence check."""


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors: Normal coefficients, Student-t intercept,
    half-Student-t noise scale."""

    coef_scales: np.ndarray
    intercept_scale: float = 2.5
    intercept_df: float = 3.0
    sigma_scale: float = 1.0
    sigma_df: float = 3.0

    def __post_init__(self):
        scales = np.atleast_1d(np.asarray(self.coef_scales, dtype=np.float64))
        if np.any(scales <= 0) or self.intercept_scale <= 0 or self.sigma_scale <= 0:
            raise ValueError("all prior scales must be positive")
        if self.intercept_df <= 0 or self.sigma_df <= 0:
            raise ValueError("degrees of freedom must be positive")
        object.__setattr__(self, "coef_scales", scales)


def default_prior(n_coef: int, response) -> PriorSpec:
    """Weakly-informative defaults: unit-free 0.5 scales on lag coefficients,
    data-scaled Student-t(3) intercept and half-Student-t(3) sigma."""
    response = np.asarray(response, dtype=np.float64)
    sd = float(np.std(response)) if response.size > 1 else 1.0
    if not np.isfinite(sd) or sd <= 0:
        sd = 1.0
    return PriorSpec(
        coef_scales=np.full(max(n_coef, 1), 0.5)[:n_coef] if n_coef else np.empty(0),
        intercept_scale=2.5 * sd,
        intercept_df=3.0,
        sigma_scale=sd,
        sigma_df=3.0,
    )


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup: int = 1000
    samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.chains < 1 or self.samples < 1 or self.warmup < 0:
            raise ValueError("chains/samples must be >= 1 and warmup >= 0")


@dataclass
class PosteriorDraws:
    """Joint posterior draws with convergence diagnostics.

    ``coefficients`` is (S, k) with the intercept in column 0; ``rhat`` and
    ``ess`` cover the k coefficients followed by sigma.
    """

    coefficients: np.ndarray
    sigma: np.ndarray
    rhat: np.ndarray
    ess: np.ndarray
    chains: int
    warmup: int
    samples: int
    seed: int
    converged: bool
    zero_variance: np.ndarray
    param_names: list[str] = field(default_factory=list)
    nonstationary_draws: Optional[int] = None

    @property
    def n_draws(self) -> int:
        return self.sigma.size


@dataclass
class LinearModelFit:
    design: np.ndarray
    response: np.ndarray
    draws: PosteriorDraws
    prior: PriorSpec

    @property
    def order(self) -> int:
        """Number of lag columns (design columns beyond the intercept)."""
        return self.design.shape[1] - 1


def _check_rank(design: np.ndarray) -> None:
    n, k = design.shape
    if n < k:
        # Proper priors keep the posterior well defined; the conditional
        # Gaussian for beta needs no rank condition.
        return
    _, r, piv = scipy_qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0:
        raise CollinearityError(list(range(k)))
    bad = diag < 1e-10 * diag[0]
    if np.any(bad):
        raise CollinearityError(sorted(int(piv[i]) for i in np.nonzero(bad)[0]))


def _half_t_logpdf(x: float, scale: float, df: float) -> float:
    return -0.5 * (df + 1.0) * math.log1p((x / scale) ** 2 / df)


def _sigma_logpost(n: int, rss: float, scale: float, df: float):
    """Conditional log density of log sigma (likelihood, prior, Jacobian)."""
    def logpost(u: float) -> float:
        sig = math.exp(u)
        return (-n * u - rss / (2.0 * sig * sig)
                + _half_t_logpdf(sig, scale, df) + u)
    return logpost


def _cho_solve_batched(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b for a stack of lower Cholesky factors."""
    w = np.linalg.solve(chol, b[:, :, None] if b.ndim == 2 else b)
    return np.linalg.solve(np.transpose(chol, (0, 2, 1)), w)[:, :, 0]


def _slice_update(u0: float, logpost, rng, width: float = 1.0,
                  max_steps: int = 64) -> float:
    """One slice-sampling move (stepping out then shrinkage) on the real line."""
    level = logpost(u0) - rng.exponential()
    lo = u0 - width * rng.uniform()
    hi = lo + width
    for _ in range(max_steps):
        if logpost(lo) <= level:
            break
        lo -= width
    for _ in range(max_steps):
        if logpost(hi) <= level:
            break
        hi += width
    while True:
        u1 = rng.uniform(lo, hi)
        if logpost(u1) > level:
            return u1
        if u1 < u0:
            lo = u1
        else:
            hi = u1


def fit_bayes_linear(design, response, prior: PriorSpec,
                     config: Optional[SamplerConfig] = None,
                     param_names: Optional[Sequence[str]] = None) -> LinearModelFit:
    """Sample the posterior of (beta, sigma) for a Gaussian linear model.

    Column 0 of the design receives the Student-t intercept prior (via its
    inverse-gamma scale-mixture representation); the remaining columns get
    independent Normal(0, coef_scales^2) priors. Chains are deterministic
    given the seed, and a convergence flag is cleared when any split-Rhat
    exceeds 1.05.
    """
    if config is None:
        config = SamplerConfig()
    X = np.atleast_2d(np.asarray(design, dtype=np.float64))
    y = np.asarray(response, dtype=np.float64)
    n, k = X.shape
    if y.shape != (n,):
        raise ValueError("response length does not match design rows")
    if prior.coef_scales.size != k - 1:
        raise ValueError(
            f"prior has {prior.coef_scales.size} coefficient scales, design needs {k - 1}")
    _check_rank(X)
    _bump_fit_count()

    xtx = X.T @ X
    xty = X.T @ y
    yty = float(y @ y)
    nu_c, s_c = prior.intercept_df, prior.intercept_scale
    sd_y = float(np.std(y)) if n > 1 else 1.0
    if not np.isfinite(sd_y) or sd_y <= 0:
        sd_y = 1.0

    m = config.chains
    coef_store = np.empty((m, config.samples, k))
    sigma_store = np.empty((m, config.samples))
    rngs = [np.random.default_rng(child)
            for child in np.random.SeedSequence(config.seed).spawn(m)]
    slope_prec = np.concatenate(([0.0], 1.0 / prior.coef_scales ** 2))
    diag_idx = np.arange(k)

    # chains advance in lockstep so the linear algebra batches across them;
    # each chain still consumes only its own RNG stream, which makes the
    # draws identical to a chain-by-chain (or parallel) execution
    beta = np.zeros((m, k))
    log_sigma = np.full(m, math.log(sd_y))
    aux_var = np.full(m, s_c ** 2)
    z = np.empty((m, k))
    for it in range(config.warmup + config.samples):
        # beta | sigma, aux is exactly Gaussian
        sigma2 = np.exp(2.0 * log_sigma)
        prec = xtx[None, :, :] / sigma2[:, None, None]
        prec[:, diag_idx, diag_idx] += slope_prec
        prec[:, 0, 0] += 1.0 / aux_var - slope_prec[0]
        chol = np.linalg.cholesky(prec)
        mean = _cho_solve_batched(chol, xty[None, :] / sigma2[:, None])
        for c in range(m):
            z[c] = rngs[c].standard_normal(k)
        beta = mean + np.linalg.solve(np.transpose(chol, (0, 2, 1)),
                                      z[:, :, None])[:, :, 0]
        # intercept mixture variance | intercept
        for c in range(m):
            aux_var[c] = (nu_c * s_c ** 2 + beta[c, 0] ** 2) / \
                (2.0 * rngs[c].gamma((nu_c + 1.0) / 2.0))
        # sigma | beta via slice sampling on log sigma
        rss = np.maximum(yty - 2.0 * beta @ xty
                         + np.einsum("ci,ij,cj->c", beta, xtx, beta), 0.0)
        for c in range(m):
            log_sigma[c] = _slice_update(
                log_sigma[c],
                _sigma_logpost(n, float(rss[c]), prior.sigma_scale,
                               prior.sigma_df),
                rngs[c])
        if it >= config.warmup:
            coef_store[:, it - config.warmup] = beta
            sigma_store[:, it - config.warmup] = np.exp(log_sigma)

    stacked = np.concatenate([coef_store, sigma_store[:, :, None]], axis=2)
    rhat, zero_var = split_rhat(stacked, return_flags=True)
    ess_vals = ess(stacked)
    converged = bool(np.all(rhat[~zero_var] <= RHAT_THRESHOLD)) if np.any(~zero_var) else True
    if not converged:
        warnings.warn(
            f"split-Rhat above {RHAT_THRESHOLD}: max {np.nanmax(rhat):.3f}",
            RuntimeWarning, stacklevel=2)
    if param_names is None:
        param_names = ["intercept"] + [f"coef{j}" for j in range(1, k)]
    draws = PosteriorDraws(
        coefficients=coef_store.reshape(-1, k),
        sigma=sigma_store.reshape(-1),
        rhat=rhat,
        ess=ess_vals,
        chains=config.chains,
        warmup=config.warmup,
        samples=config.samples,
        seed=config.seed,
        converged=converged,
        zero_variance=zero_var,
        param_names=list(param_names),
    )
    return LinearModelFit(design=X, response=y, draws=draws, prior=prior)


def fit_ar(series, p: int, prior: Optional[PriorSpec] = None,
           config: Optional[SamplerConfig] = None) -> LinearModelFit:
    """Bayesian AR(p) regression of the series on its first p lags."""
    values = series.values if isinstance(series, TimeSeries) else \
        np.asarray(series, dtype=np.float64)
    if p < 0 or p >= values.size - 10:
        raise ValueError(f"need p < T - 10, got p={p}, T={values.size}")
    design, response = lag_design(values, p)
    if prior is None:
        prior = default_prior(p, response)
    names = ["intercept"] + [f"ar{j}" for j in range(1, p + 1)]
    fit = fit_bayes_linear(design, response, prior, config, param_names=names)
    if p > 0:
        fit.draws.nonstationary_draws = int(
            count_nonstationary(fit.draws.coefficients[:, 1:]))
    else:
        fit.draws.nonstationary_draws = 0
    return fit


def count_nonstationary(phi_draws: np.ndarray,
                        tol: float = STATIONARITY_TOL) -> int:
    """Count draws whose AR polynomial has a root on or inside the unit circle.

    Uses batched companion-matrix eigenvalues: the AR polynomial has all
    roots outside the unit circle iff the companion matrix spectrum lies
    strictly inside it.
    """
    phi_draws = np.atleast_2d(np.asarray(phi_draws, dtype=np.float64))
    S, p = phi_draws.shape
    if p == 0:
        return 0
    companion = np.zeros((S, p, p))
    companion[:, 0, :] = phi_draws
    if p > 1:
        idx = np.arange(p - 1)
        companion[:, idx + 1, idx] = 1.0
    moduli = np.abs(np.linalg.eigvals(companion)).max(axis=1)
    return int(np.sum(moduli >= 1.0 / (1.0 + tol)))


def posterior_mean_residuals(fit: LinearModelFit) -> np.ndarray:
    """Response minus fitted values at the posterior-mean coefficients."""
    if not fit.draws.converged:
        warnings.warn("computing residuals from a non-converged fit",
                      RuntimeWarning, stacklevel=2)
    return fit.response - fit.design @ fit.draws.coefficients.mean(axis=0)


def pointwise_loglik_linear(design, response, coefficients,
                            sigma) -> np.ndarray:
    """S x n matrix of Normal(y_t; x_t beta_s, sigma_s^2) log densities."""
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(response, dtype=np.float64)
    B = np.atleast_2d(np.asarray(coefficients, dtype=np.float64))
    sig = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    resid = y[None, :] - B @ X.T
    return (-0.5 * np.log(2.0 * np.pi) - np.log(sig)[:, None]
            - resid ** 2 / (2.0 * sig[:, None] ** 2))


def _rank_normalize(pooled: np.ndarray) -> np.ndarray:
    from scipy.stats import rankdata
    ranks = rankdata(pooled.reshape(-1)).reshape(pooled.shape)
    return normal_dist.ppf((ranks - 0.375) / (pooled.size + 0.25))


def split_rhat(chain_draws: np.ndarray, return_flags: bool = False):
    """Rank-normalized split-Rhat per parameter.

    ``chain_draws`` has shape (chains, draws, params). Chains are split in
    half; parameters with zero pooled variance are reported as exactly 1.0
    and flagged.
    """
    arr = np.asarray(chain_draws, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    m, n, k = arr.shape
    half = n // 2
    if half < 2:
        raise ValueError("need at least 4 draws per chain for split-Rhat")
    split = np.concatenate([arr[:, :half], arr[:, half: 2 * half]], axis=0)
    rhat = np.empty(k)
    flags = np.zeros(k, dtype=bool)
    for j in range(k):
        x = split[:, :, j]
        if np.ptp(x) == 0.0:
            rhat[j] = 1.0
            flags[j] = True
            continue
        z = _rank_normalize(x)
        chain_means = z.mean(axis=1)
        chain_vars = z.var(axis=1, ddof=1)
        w = chain_vars.mean()
        b = half * chain_means.var(ddof=1)
        var_plus = (half - 1) / half * w + b / half
        rhat[j] = math.sqrt(var_plus / w) if w > 0 else 1.0
    if return_flags:
        return rhat, flags
    return rhat


def ess(chain_draws: np.ndarray) -> np.ndarray:
    """Effective sample size per parameter (Geyer initial positive sequence).

    Autocorrelation sums are truncated at the first non-positive pair of
    consecutive lags.
    """
    arr = np.asarray(chain_draws, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    m, n, k = arr.shape
    out = np.empty(k)
    for j in range(k):
        x = arr[:, :, j]
        if np.ptp(x) == 0.0:
            out[j] = float(m * n)
            continue
        acov = np.empty((m, n))
        for c in range(m):
            acov[c] = _autocov(x[c])
        w = (acov[:, 0] * n / (n - 1)).mean()
        mean_acov = acov.mean(axis=0)
        b = n * x.mean(axis=1).var(ddof=1) if m > 1 else 0.0
        var_plus = (n - 1) / n * w + b / n
        if var_plus <= 0:
            out[j] = float(m * n)
            continue
        rho = 1.0 - (w - mean_acov) / var_plus
        tau = -1.0
        t = 0
        while t + 1 < n:
            pair = rho[t] + rho[t + 1]
            if pair <= 0.0:
                break
            tau += 2.0 * pair
            t += 2
        out[j] = m * n / max(tau, 1e-12)
    return out


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.size
    centered = x - x.mean()
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    fft = np.fft.rfft(centered, size)
    acov = np.fft.irfft(fft * np.conj(fft), size)[:n].real
    return acov / n


def save_draws_csv(draws: PosteriorDraws, path) -> None:
    """One row per draw, columns are the parameter names plus sigma."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(draws.param_names) + ["sigma"])
        for row, sig in zip(draws.coefficients, draws.sigma):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(sig))])
