"""Synthetic data generation, the cohort bias demo and simulation-based calibration."""

from .bias import BiasResult, SlopeEstimate, age_slopes, bias_demo, drift_matrix, pooled_age_slope
from .sbc import SbcResult, rank_statistic, run_sbc, sbc_model_config, uniformity_test
from .simulator import (
    TRUTH_FILE,
    SimulatedDataset,
    SimulatedLocations,
    gen_dataset,
    gen_locations,
    load_truth,
    prior_predictive,
    scaled_distances,
    simulate_responses,
    write_truth,
)

__all__ = [
    "BiasResult",
    "SbcResult",
    "SimulatedDataset",
    "SimulatedLocations",
    "SlopeEstimate",
    "TRUTH_FILE",
    "age_slopes",
    "bias_demo",
    "drift_matrix",
    "gen_dataset",
    "gen_locations",
    "load_truth",
    "pooled_age_slope",
    "prior_predictive",
    "rank_statistic",
    "run_sbc",
    "sbc_model_config",
    "scaled_distances",
    "simulate_responses",
    "uniformity_test",
    "write_truth",
]
