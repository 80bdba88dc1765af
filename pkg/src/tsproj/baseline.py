"""Stepwise-AIC order search with conditional-sum-of-squares likelihood,
plus the Bayesian refit of the selected orders.

The stepwise search mirrors the classic automatic procedure: four fixed
starting models, then hill-climbing over neighbouring (p, q) orders and an
intercept toggle until no candidate improves the AIC. Maximum likelihood
uses the same zero-initial-condition objective as the likelihood module, so
the baseline and the projection pipeline score models identically.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .likelihood import LOG_2PI
from .loo import ElpdEstimate
from .posterior import LinearModelFit, PriorSpec, SamplerConfig
from .search import joint_refit
from .series import ArmaOrder, ArmaParams, as_values, check_stationarity

MAX_ORDER = 5
# fits whose AR or MA roots land within this margin of the unit circle are
# marked non-converged and skipped by the stepwise search
UNIT_ROOT_MARGIN = 1e-3


@dataclass
class MlFit:
    """Conditional maximum-likelihood ARMA fit."""

    params: ArmaParams
    loglik: float
    aic: float
    converged: bool
    iterations: int
    include_intercept: bool = True
    order: ArmaOrder = field(default_factory=lambda: ArmaOrder(0, 0))


def _css_profile(values: np.ndarray, p: int, q: int, include_intercept: bool):
    """Negative profile log-likelihood over (c, phi, theta); sigma is
    profiled out as the residual RMS."""
    T = values.size

    def objective(x):
        c = x[0] if include_intercept else 0.0
        off = 1 if include_intercept else 0
        phi = x[off: off + p]
        theta = x[off + p: off + p + q]
        if not (check_stationarity(phi) and check_stationarity(-theta)):
            return 1e12
        eps = kernels.residuals_core(values, c, phi, theta)
        sigma2 = float(eps @ eps) / T
        if sigma2 <= 0 or not np.isfinite(sigma2):
            return 1e12
        return 0.5 * T * (LOG_2PI + 1.0 + math.log(sigma2))

    return objective


def _hannan_rissanen_start(values: np.ndarray, p: int, q: int,
                           include_intercept: bool) -> np.ndarray:
    """Two-stage least-squares initializer: regress on lagged observations
    and long-AR residual proxies."""
    from .search import build_arma_design

    try:
        design, response, _ = build_arma_design(values, p, q)
        coefs, *_ = np.linalg.lstsq(design, response, rcond=None)
    except (ValueError, np.linalg.LinAlgError):
        coefs = np.zeros(1 + p + q)
    c = coefs[0]
    phi = coefs[1: 1 + p]
    theta = coefs[1 + p: 1 + p + q]
    # pull non-stationary starts back inside the admissible region
    if not check_stationarity(phi):
        phi = phi * 0.9 / max(np.sum(np.abs(phi)), 1.0)
    if not check_stationarity(-theta):
        theta = theta * 0.9 / max(np.sum(np.abs(theta)), 1.0)
    start = [c] if include_intercept else []
    return np.concatenate([start, phi, theta])


def fit_arma_css(values, order: ArmaOrder,
                 include_intercept: bool = True) -> MlFit:
    """Maximize the conditional ARMA likelihood by Nelder-Mead multi-start.

    Candidates violating stationarity or invertibility are rejected inside
    the objective. The reported AIC counts phi, theta, sigma and (when
    included) the intercept.
    """
    values = as_values(values)
    p, q = order.p, order.q
    T = values.size
    if p + q + 2 >= T / 4:
        raise ValueError("order too large for the series length")
    objective = _css_profile(values, p, q, include_intercept)
    n_free = (1 if include_intercept else 0) + p + q

    if n_free == 0:
        sigma2 = float(values @ values) / T
        loglik = -0.5 * T * (LOG_2PI + 1.0 + math.log(sigma2))
        params = ArmaParams(c=0.0, sigma=math.sqrt(sigma2))
        return MlFit(params, loglik, 2.0 * (p + q + 1) - 2.0 * loglik,
                     True, 0, include_intercept, order)

    starts = [_hannan_rissanen_start(values, p, q, include_intercept),
              np.zeros(n_free)]
    if include_intercept:
        starts[1][0] = values.mean()
    best = None
    iterations = 0
    for x0 in starts:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-8,
                                "maxiter": 2000 * n_free})
        iterations += res.nit
        if best is None or res.fun < best.fun:
            best = res
    x = best.x
    c = float(x[0]) if include_intercept else 0.0
    off = 1 if include_intercept else 0
    phi = x[off: off + p]
    theta = x[off + p: off + p + q]
    eps = kernels.residuals_core(values, c, phi, theta)
    sigma2 = float(eps @ eps) / T
    loglik = -best.fun
    n_params = p + q + 1 + (1 if include_intercept else 0)
    admissible = (check_stationarity(phi, tol=UNIT_ROOT_MARGIN)
                  and check_stationarity(-theta, tol=UNIT_ROOT_MARGIN)
                  and sigma2 > 0)
    params = ArmaParams(c=c, phi=phi, theta=theta,
                        sigma=math.sqrt(max(sigma2, 1e-300)))
    return MlFit(params, loglik, 2.0 * n_params - 2.0 * loglik,
                 bool(best.success and admissible), iterations,
                 include_intercept, order)


@dataclass(frozen=True)
class StepwiseConfig:
    max_p: int = MAX_ORDER
    max_q: int = MAX_ORDER
    start_orders: tuple = ((0, 0), (1, 0), (0, 1), (2, 2))
    allow_intercept_toggle: bool = True


@dataclass
class TraceRecord:
    p: int
    q: int
    include_intercept: bool
    aic: float
    loglik: float
    converged: bool


def stepwise_search(values, config: Optional[StepwiseConfig] = None
                    ) -> tuple[int, int, list[TraceRecord]]:
    """AIC hill-climb over ARMA orders on differenced, stationary data.

    Fits the four fixed starting models, then repeatedly evaluates the
    neighbourhood of the incumbent (orders differing by one in either or
    both components, and the intercept toggled) and moves to any strictly
    better AIC until none improves. Returns the selected orders and the
    full evaluation trace.
    """
    if config is None:
        config = StepwiseConfig()
    values = as_values(values)
    cache: dict[tuple[int, int, bool], MlFit] = {}
    trace: list[TraceRecord] = []

    def evaluate(p, q, intercept) -> Optional[MlFit]:
        key = (p, q, intercept)
        if key in cache:
            return cache[key]
        try:
            fit = fit_arma_css(values, ArmaOrder(p, q), include_intercept=intercept)
        except ValueError:
            return None
        cache[key] = fit
        trace.append(TraceRecord(p, q, intercept, fit.aic, fit.loglik,
                                 fit.converged))
        return fit

    incumbent = None
    for p, q in config.start_orders:
        if p > config.max_p or q > config.max_q:
            continue
        fit = evaluate(p, q, True)
        if fit is not None and fit.converged and \
                (incumbent is None or fit.aic < incumbent.aic):
            incumbent = fit
    if incumbent is None:
        raise RuntimeError("no starting model could be fit")

    improved = True
    while improved:
        improved = False
        p, q = incumbent.order.p, incumbent.order.q
        intercept = incumbent.include_intercept
        moves = [(p + dp, q + dq, intercept)
                 for dp, dq in ((-1, 0), (1, 0), (0, -1), (0, 1),
                                (-1, -1), (1, 1), (-1, 1), (1, -1))]
        if config.allow_intercept_toggle:
            moves.append((p, q, not intercept))
        for cand_p, cand_q, cand_int in moves:
            if not (0 <= cand_p <= config.max_p and 0 <= cand_q <= config.max_q):
                continue
            fit = evaluate(cand_p, cand_q, cand_int)
            if fit is not None and fit.converged and fit.aic < incumbent.aic:
                incumbent = fit
                improved = True
                break
    return incumbent.order.p, incumbent.order.q, trace


@dataclass
class AutoArimaReport:
    """Stepwise selection plus the Bayesian refit used for comparisons."""

    p: int
    q: int
    trace: list[TraceRecord]
    fit: LinearModelFit
    elpd: ElpdEstimate
    seed: int
    warnings: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "selected": {"p": self.p, "q": self.q},
            "elpd": self.elpd.to_json_dict(),
            "trace_length": len(self.trace),
            "seed": self.seed,
            "warnings": list(self.warnings),
        }


def mcmc_autoarima(series, prior: Optional[PriorSpec] = None,
                   config: Optional[SamplerConfig] = None,
                   stepwise: Optional[StepwiseConfig] = None) -> AutoArimaReport:
    """Identify orders by stepwise AIC, then refit them as a Bayesian linear
    model with the same priors as the projection pipeline and score the fit
    by PSIS-LOO."""
    if config is None:
        config = SamplerConfig()
    values = as_values(series)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        p, q, trace = stepwise_search(values, stepwise)
        fit, elpd = joint_refit(values, p, q, prior, config)
    return AutoArimaReport(p=p, q=q, trace=trace, fit=fit, elpd=elpd,
                           seed=config.seed,
                           warnings=sorted({str(w.message) for w in caught}))


def trace_to_csv(trace: list[TraceRecord], path) -> None:
    """Columns (p, q, intercept, aic, loglik, converged), one row per fit."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["p", "q", "intercept", "aic", "loglik", "converged"])
        for rec in trace:
            writer.writerow([rec.p, rec.q, int(rec.include_intercept),
                             repr(rec.aic), repr(rec.loglik), int(rec.converged)])
