"""Optimizer choice and group fairness: analytic densities, Monte-Carlo
dynamics, fairness metrics and a small training harness."""
from fairopt.analytic import StationaryParams, delta_threshold, density_rmsprop, density_sgd, ratio_at_fair_min
from fairopt.dynamics import (
    WarmupConfig,
    check_theorem2,
    check_theorem3,
    integrate_rmsprop_sde,
    integrate_sgd_sde,
    run_warmup,
    simulate_warmup,
    stationary_histogram,
    weak_approximation,
)
from fairopt.errors import FairoptError, NumericError, ValidationError
from fairopt.fairness import GroupedConfusion, fairness_report, f_dpa, f_eod, f_eop, gap_metrics
from fairopt.optimizers import Algorithm, OptimizerConfig, OptimizerState, step
from fairopt.stats import Histogram, SeededStream, wilcoxon_signed_rank
from fairopt.subgroups import NgosSpec, QuadraticSubgroups

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "FairoptError", "GroupedConfusion", "Histogram", "NgosSpec", "NumericError",
    "OptimizerConfig", "OptimizerState", "QuadraticSubgroups", "SeededStream", "StationaryParams",
    "ValidationError", "WarmupConfig", "check_theorem2", "check_theorem3", "delta_threshold",
    "density_rmsprop", "density_sgd", "f_dpa", "f_eod", "f_eop", "fairness_report", "gap_metrics",
    "integrate_rmsprop_sde", "integrate_sgd_sde", "ratio_at_fair_min", "run_warmup", "simulate_warmup",
    "stationary_histogram", "step", "weak_approximation", "wilcoxon_signed_rank",
]
