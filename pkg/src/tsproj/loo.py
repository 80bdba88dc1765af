"""PSIS-LOO expected log predictive density estimation.

Leave-one-out predictive densities are approximated by importance sampling
over the posterior draws, with the raw weight for draw s at observation t
proportional to 1 / p(y_t | params_s). The largest weights are replaced by
expected order statistics of a generalized Pareto distribution fitted to the
weight tail, and the fitted shape doubles as a reliability diagnostic. A
brute-force refit oracle is included for validating the approximation on
small problems.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp, ndtr

from .posterior import (PriorSpec, SamplerConfig, fit_bayes_linear,
                        pointwise_loglik_linear)

PARETO_K_WARN = 0.7
EXACT_LOO_MAX_ROWS = 60


@dataclass
class ElpdEstimate:
    """elpd point estimate with pointwise contributions and diagnostics."""

    elpd: float
    se: float
    pointwise: np.ndarray
    pareto_k: np.ndarray

    def to_json_dict(self) -> dict:
        finite = self.pareto_k[np.isfinite(self.pareto_k)]
        return {
            "elpd": self.elpd,
            "se": self.se,
            "pareto_k_summary": {
                "max": float(finite.max()) if finite.size else None,
                "count_gt_0_7": int(np.sum(self.pareto_k > PARETO_K_WARN)),
            },
        }


def _pointwise_summary(pointwise: np.ndarray,
                       pareto_k: np.ndarray) -> ElpdEstimate:
    T = pointwise.size
    se = float(np.sqrt(T * pointwise.var(ddof=1))) if T > 1 else 0.0
    return ElpdEstimate(float(pointwise.sum()), se, pointwise, pareto_k)


def fit_gpd_tail(exceedances) -> tuple[float, float]:
    """Fit a generalized Pareto distribution to sorted tail exceedances.

    Profile likelihood over a fixed grid of inverse-scale candidates (each
    candidate determines its profiled shape), averaged under the profile
    likelihood weights, and with the usual weak-prior adjustment
    k <- (M k + 5) / (M + 10). Returns (shape, scale).
    """
    x = np.asarray(exceedances, dtype=np.float64)
    m = x.size
    if m < 5:
        raise ValueError("need at least 5 tail exceedances to fit")
    if np.any(np.diff(x) < 0):
        x = np.sort(x)
    if x[-1] <= 0:
        raise ValueError("exceedances must be positive")
    n_grid = 30 + int(np.sqrt(m))
    grid = 1.0 - np.sqrt(n_grid / (np.arange(1, n_grid + 1) - 0.5))
    grid = grid / (3.0 * x[int(m / 4 + 0.5) - 1]) + 1.0 / x[-1]
    shapes = np.mean(np.log1p(-grid[:, None] * x), axis=1)
    profile = m * (np.log(-grid / shapes) - shapes - 1.0)
    weights = 1.0 / np.exp(profile - profile[:, None]).sum(axis=1)
    keep = weights >= 10 * np.finfo(float).eps
    weights = weights[keep] / weights[keep].sum()
    b_post = float(np.sum(grid[keep] * weights))
    k_post = float(np.mean(np.log1p(-b_post * x)))
    scale = -k_post / b_post
    k_post = (m * k_post + 5.0) / (m + 10.0)
    return k_post, float(scale)


def _gpd_quantile(probs: np.ndarray, shape: float, scale: float) -> np.ndarray:
    if abs(shape) < np.finfo(float).eps:
        return scale * (-np.log1p(-probs))
    return scale * np.expm1(-shape * np.log1p(-probs)) / shape


def _smooth_column(lw: np.ndarray, cutoff: float) -> float:
    """Smooth one max-shifted log-weight column in place; returns the shape."""
    if np.ptp(lw) < 1e-12:
        return -np.inf
    tail_idx = np.nonzero(lw > cutoff)[0]
    if tail_idx.size < 5:
        return np.inf
    tail_sorted = tail_idx[np.argsort(lw[tail_idx])]
    exp_cutoff = np.exp(cutoff)
    exceed = np.exp(lw[tail_sorted]) - exp_cutoff
    try:
        shape, scale = fit_gpd_tail(exceed)
    except ValueError:
        return np.inf
    if np.isfinite(shape):
        probs = (np.arange(1, tail_sorted.size + 1) - 0.5) / tail_sorted.size
        smoothed = np.log(_gpd_quantile(probs, shape, scale) + exp_cutoff)
        lw[tail_sorted] = np.minimum(smoothed, 0.0)
    return shape


def smooth_log_weights(log_weights: np.ndarray) -> tuple[np.ndarray, float]:
    """Pareto-smooth one vector of raw log importance weights.

    The ceil(min(0.2 S, 3 sqrt(S))) largest weights are replaced by expected
    order statistics of the fitted tail distribution, then truncated at the
    raw maximum. Returns normalized log weights and the tail shape (-inf for
    a degenerate flat weight vector, +inf when the tail cannot be fit).
    """
    lw = np.asarray(log_weights, dtype=np.float64).copy()
    S = lw.size
    lw -= lw.max()
    tail_len = int(np.ceil(min(0.2 * S, 3.0 * np.sqrt(S))))
    if tail_len + 1 > S:
        return lw - logsumexp(lw), -np.inf if np.ptp(lw) < 1e-12 else np.inf
    cutoff = max(np.partition(lw, S - tail_len - 1)[S - tail_len - 1],
                 np.log(np.finfo(float).tiny))
    shape = _smooth_column(lw, cutoff)
    return lw - logsumexp(lw), shape


def psis_smoothed_weights(pointwise_loglik) -> tuple[np.ndarray, np.ndarray]:
    """Column-normalized smoothed log LOO weights for an S x T matrix.

    Returns the S x T normalized log-weight matrix and the T tail shapes.
    """
    ll = np.atleast_2d(np.asarray(pointwise_loglik, dtype=np.float64))
    if not np.all(np.isfinite(ll)):
        raise ValueError("pointwise log-likelihood must be finite")
    S, T = ll.shape
    lw = -ll
    lw -= lw.max(axis=0)
    pareto_k = np.empty(T)
    tail_len = int(np.ceil(min(0.2 * S, 3.0 * np.sqrt(S))))
    if tail_len + 1 > S:
        spread = np.ptp(lw, axis=0)
        pareto_k[:] = np.where(spread < 1e-12, -np.inf, np.inf)
    else:
        cutoffs = np.maximum(
            np.partition(lw, S - tail_len - 1, axis=0)[S - tail_len - 1],
            np.log(np.finfo(float).tiny))
        for t in range(T):
            pareto_k[t] = _smooth_column(lw[:, t], cutoffs[t])
    lw -= logsumexp(lw, axis=0)
    return lw, pareto_k


def _elpd_from_weights(ll: np.ndarray, lw: np.ndarray,
                       pareto_k: np.ndarray) -> ElpdEstimate:
    pointwise = logsumexp(lw + ll, axis=0)
    n_bad = int(np.sum(pareto_k > PARETO_K_WARN))
    if n_bad:
        warnings.warn(
            f"{n_bad} of {pareto_k.size} observations have Pareto k > "
            f"{PARETO_K_WARN}; their elpd contributions may be unreliable",
            RuntimeWarning, stacklevel=3)
    return _pointwise_summary(pointwise, pareto_k)


def psis_loo(pointwise_loglik) -> ElpdEstimate:
    """PSIS-LOO elpd from an S x T pointwise log-likelihood matrix."""
    ll = np.atleast_2d(np.asarray(pointwise_loglik, dtype=np.float64))
    lw, pareto_k = psis_smoothed_weights(ll)
    return _elpd_from_weights(ll, lw, pareto_k)


def elpd_under_weights(pointwise_loglik, log_weights: np.ndarray,
                       pareto_k: np.ndarray) -> ElpdEstimate:
    """elpd of a (projected) submodel under externally supplied LOO weights.

    Projected draws are deterministic transforms of the reference draws, so
    the reference model's smoothed importance weights are the natural LOO
    weights for every submodel on the path; sharing them also keeps paired
    elpd differences along the path tight. The Pareto shapes diagnose the
    weights, so they are inherited.
    """
    ll = np.atleast_2d(np.asarray(pointwise_loglik, dtype=np.float64))
    if not np.all(np.isfinite(ll)):
        raise ValueError("pointwise log-likelihood must be finite")
    if ll.shape != log_weights.shape:
        raise ValueError("log-likelihood and weight shapes differ")
    return _pointwise_summary(logsumexp(log_weights + ll, axis=0),
                              np.asarray(pareto_k, dtype=np.float64))


def elpd_diff(a: ElpdEstimate, b: ElpdEstimate) -> tuple[float, float]:
    """Paired difference a - b with its standard error.

    Both estimates must score the same observations in the same order.
    """
    if a.pointwise.size != b.pointwise.size:
        raise ValueError("elpd estimates cover different numbers of observations")
    deltas = a.pointwise - b.pointwise
    T = deltas.size
    se = float(np.sqrt(T * deltas.var(ddof=1))) if T > 1 else 0.0
    return float(deltas.sum()), se


def selection_probability(diff: float, se: float) -> float:
    """Normal-approximation probability that the submodel's elpd reaches the
    reference's, for ``diff`` = submodel elpd minus reference elpd."""
    if se < 0:
        raise ValueError("se must be non-negative")
    if se == 0.0:
        return 1.0 if diff >= 0 else 0.0
    return float(ndtr(diff / se))


def exact_loo_brute(design, response, prior: PriorSpec,
                    config: Optional[SamplerConfig] = None) -> ElpdEstimate:
    """Brute-force LOO: refit the posterior with each row left out.

    Restricted to small problems by policy; each held-out density is the
    Monte Carlo average of the draw-wise predictive densities. Pareto-k
    diagnostics do not apply and are reported as zeros.
    """
    X = np.atleast_2d(np.asarray(design, dtype=np.float64))
    y = np.asarray(response, dtype=np.float64)
    n = X.shape[0]
    if n > EXACT_LOO_MAX_ROWS:
        raise ValueError(
            f"exact LOO is limited to {EXACT_LOO_MAX_ROWS} rows by policy, got {n}")
    if config is None:
        config = SamplerConfig()
    pointwise = np.empty(n)
    mask = np.ones(n, dtype=bool)
    for t in range(n):
        mask[t] = False
        fit = fit_bayes_linear(X[mask], y[mask], prior, config)
        held_ll = pointwise_loglik_linear(X[t: t + 1], y[t: t + 1],
                                          fit.draws.coefficients,
                                          fit.draws.sigma)[:, 0]
        pointwise[t] = logsumexp(held_ll) - np.log(held_ll.size)
        mask[t] = True
    return _pointwise_summary(pointwise, np.zeros(n))
