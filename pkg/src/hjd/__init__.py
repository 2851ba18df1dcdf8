"""Simulation and nonparametric estimation for diffusions driven by Hawkes jumps."""

__version__ = "0.1.0"

from .condexp import NadarayaWatson, estimate_a2, estimate_f, loo_cv_bandwidth
from .estimators import (EstimationConfig, GFunctionEstimator, VolatilityEstimator,
                         select_g, select_sigma2, truncation_phi)
from .exceptions import (ConfigError, EvaluationError, ExprSyntaxError, HJDError,
                         ParameterError, RankDeficientError, SimulationError,
                         StationarityError)
from .expr import compile_expr, eval_expr, parse_expr, to_source
from .harness import ExperimentConfig, run_mise
from .hawkes import (HawkesParams, JumpRecords, fit_hawkes_mle, hawkes_loglik,
                     simulate_hawkes, time_change_residuals)
from .projection import Interval, TrigSpace, least_squares_fit
from .sde import DiffusionModel, builtin_model, simulate_path, subsample

__all__ = [
    "NadarayaWatson", "estimate_a2", "estimate_f", "loo_cv_bandwidth",
    "EstimationConfig", "GFunctionEstimator", "VolatilityEstimator", "select_g",
    "select_sigma2", "truncation_phi", "ConfigError", "EvaluationError", "ExprSyntaxError",
    "HJDError", "ParameterError", "RankDeficientError", "SimulationError", "StationarityError",
    "compile_expr", "eval_expr", "parse_expr", "to_source", "ExperimentConfig", "run_mise",
    "HawkesParams", "JumpRecords", "fit_hawkes_mle", "hawkes_loglik", "simulate_hawkes",
    "time_change_residuals", "Interval", "TrigSpace", "least_squares_fit", "DiffusionModel",
    "builtin_model", "simulate_path", "subsample",
]
