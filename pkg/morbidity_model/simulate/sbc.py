"""Simulation-based calibration of the fixed-effects model."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from ..config import ModelConfig, SamplerConfig, SimConfig, toy_model_config
from ..model.posterior import PosteriorTarget
from ..model.priors import from_unconstrained
from ..sampler.runner import run
from ..schemas import ModelVariant
from .simulator import gen_dataset, gen_locations

logger = logging.getLogger(__name__)


@dataclass
class SbcResult:
    """Ranks of the true B0 entries among thinned posterior draws, one row per replicate."""

    ranks: np.ndarray
    num_draws: int
    statistic: float
    p_value: float

    def uniform(self, alpha: float = 0.01) -> bool:
        return self.p_value >= alpha


def sbc_model_config(**overrides) -> ModelConfig:
    """One disease, three predictors, fixed effects only."""
    base = dict(num_diseases=1, covariates=["intercept", "sex", "age"], num_cohorts=1,
                variant=ModelVariant.FE)
    base.update(overrides)
    return toy_model_config(**base)


def rank_statistic(draws: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Number of draws below the truth, per entry."""
    return np.sum(draws < truth[None, :], axis=0)


def uniformity_test(ranks: np.ndarray, num_draws: int, bins: int = 10) -> tuple:
    """Chi-square test of ranks in 0..num_draws against the discrete uniform."""
    bins = min(bins, num_draws + 1)
    edges = np.linspace(0, num_draws + 1, bins + 1)
    counts, _ = np.histogram(ranks.ravel(), bins=edges)
    expected = ranks.size * np.diff(edges) / (num_draws + 1)
    result = stats.chisquare(counts, expected)
    return float(result.statistic), float(result.pvalue)


def run_sbc(sim: SimConfig, sampler: SamplerConfig, config: Optional[ModelConfig] = None,
            replicates: int = 100, thin: int = 5, bins: int = 10) -> SbcResult:
    """
    Repeat (draw truth from the prior, simulate, fit) and rank the true B0.

    Args:
        sim: Simulation settings; replicate r uses seed ``sim.seed + r``
        sampler: Sampler settings for every fit
        config: Fixed-effects model, defaulting to ``sbc_model_config()``
        replicates: Number of (simulate, fit) rounds
        thin: Keep every ``thin``-th pooled draw before ranking
        bins: Histogram bins of the uniformity test

    Returns:
        SbcResult
    """
    config = config or sbc_model_config()
    sim = sim.model_copy(update={"num_cohorts": config.num_cohorts, "parameter_source": "prior",
                                 "cohort_drift": []})
    ranks = []
    num_draws = 0
    for r in range(replicates):
        replicate_sim = sim.model_copy(update={"seed": sim.seed + r})
        table = gen_locations(replicate_sim).table
        dataset = gen_dataset(replicate_sim, config, table)
        target = PosteriorTarget(dataset.records, table, config)
        fit = run(target, sampler.model_copy(update={"seed": sampler.seed + r}))
        draws = fit.flat_draws()[::thin]
        B0 = np.stack([from_unconstrained(vec, target.layout).B0.ravel() for vec in draws])
        ranks.append(rank_statistic(B0, dataset.state.B0.ravel()))
        num_draws = B0.shape[0]
        logger.debug(f"SBC replicate {r}: ranks {ranks[-1].tolist()} of {num_draws}")
    ranks = np.asarray(ranks)
    statistic, p_value = uniformity_test(ranks, num_draws, bins)
    logger.info(f"SBC over {replicates} replicates: chi-square {statistic:.2f}, p = {p_value:.3f}")
    return SbcResult(ranks=ranks, num_draws=num_draws, statistic=statistic, p_value=p_value)
