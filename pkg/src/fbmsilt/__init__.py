"""Fractional Brownian self-intersection local time toolkit.

Simulation of d-dimensional fractional Brownian motion from its
moving-average kernel, heat-kernel mollified self-intersection local
times, a desk-scale verification of their martingale (integral)
representation, and independent numeric oracles for the variance and
moment bounds the theory rests on.
"""

from .bounds import (SimplexIntegralSpec, exp_moment_transfer_check,
                     lemma1_integral, lemma1_scan, moment_bound_exponent,
                     simplex_integral, simplex_integral_mc)
from .clarkocone import (IntegrandGrid, convergence_study, inner_integral,
                         integrand_series, ito_assemble, lhs_centered,
                         path_fingerprint, quadratic_variation,
                         markov_integrand_series, representation_residual,
                         sigma_integrand)
from .config import OUTPUT_ROOT_ENV, ExperimentConfig
from .gaussian import (ConditionalLaw, DetQReport, DrivingPath, FbmPath,
                       conditional_law, conditional_variance_given,
                       det_q_factorized, driving_increments, fbm_covariance,
                       lnd_certificate, midpoints, simulate_cholesky,
                       simulate_volterra, uniform_grid)
from .kernel import FbmKernel, PowerKernel
from .localtime import (alpha_n_oracle, diverges_on_schedule, ensemble_l_eps,
                        heat_kernel, l_eps_pathwise, l_eps_schedule_pathwise,
                        mean_l_eps, mean_l_eps_limit, renormalized_l_eps)
from .params import (EstimateRecord, HurstParams, MollifierConfig,
                     ToleranceError, ValidationError, fingerprint,
                     merge_partials)
from .store import ResultStore, record_from_dict

__version__ = "0.1.0"

__all__ = [
    "ConditionalLaw", "DetQReport", "DrivingPath", "EstimateRecord",
    "ExperimentConfig", "FbmKernel", "FbmPath", "HurstParams",
    "IntegrandGrid", "MollifierConfig", "OUTPUT_ROOT_ENV", "PowerKernel",
    "ResultStore", "SimplexIntegralSpec", "ToleranceError",
    "ValidationError", "alpha_n_oracle", "conditional_law",
    "conditional_variance_given", "convergence_study", "det_q_factorized",
    "diverges_on_schedule", "driving_increments", "ensemble_l_eps",
    "exp_moment_transfer_check", "fbm_covariance", "fingerprint",
    "heat_kernel", "inner_integral", "integrand_series", "ito_assemble",
    "l_eps_pathwise", "l_eps_schedule_pathwise", "lemma1_integral",
    "lemma1_scan", "lhs_centered", "lnd_certificate", "mean_l_eps",
    "mean_l_eps_limit", "merge_partials", "midpoints",
    "moment_bound_exponent", "path_fingerprint", "quadratic_variation",
    "record_from_dict", "markov_integrand_series", "renormalized_l_eps",
    "representation_residual", "sigma_integrand", "simplex_integral",
    "simplex_integral_mc", "simulate_cholesky", "simulate_volterra",
    "uniform_grid",
]
