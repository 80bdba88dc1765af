"""Projection predictive ARMA/SARMA order identification.

Fit a Bayesian reference model, project it onto nested lag-restricted
submodels, and pick the smallest one whose cross-validated predictive
performance matches the reference; a stepwise-AIC baseline is included
for comparison.
"""

from .baseline import (AutoArimaReport, MlFit, StepwiseConfig, fit_arma_css,
                       mcmc_autoarima, stepwise_search, trace_to_csv)
from .likelihood import (BandedLowerTriangular, LogLikResult,
                         arma_loglik_matrix, arma_loglik_recursive,
                         build_difference_matrix, pointwise_loglik_matrix)
from .loo import (ElpdEstimate, elpd_diff, elpd_under_weights,
                  exact_loo_brute, fit_gpd_tail, psis_loo,
                  psis_smoothed_weights, selection_probability,
                  smooth_log_weights)
from .posterior import (CollinearityError, ConvergenceError, LinearModelFit,
                        PosteriorDraws, PriorSpec, SamplerConfig,
                        default_prior, ess, fit_ar, fit_bayes_linear,
                        fit_count, posterior_mean_residuals, save_draws_csv,
                        split_rhat)
from .projection import (ProjectedSubmodel, kl_gaussian_iid, project_draw,
                         project_submodel)
from .search import (OrderReport, SearchPath, arma_to_ar_projection,
                     build_arma_design, forward_search,
                     joint_projection_variant, projpred_arma, projpred_sarma,
                     select_order, selection_flags)
from .series import (ArmaOrder, ArmaParams, SarmaOrder, StationarityError,
                     TimeSeries, check_stationarity, difference, lag_design,
                     load_csv, polynomial_product, sample_acf, sample_pacf,
                     save_csv, simulate_arma, simulate_sarma)

__version__ = "0.1.0"
