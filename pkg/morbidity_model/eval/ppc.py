"""Posterior predictive checks of per-location disease prevalence."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import sparse

from ..errors import EmptyGroup
from ..model.coefficients import inverse_logit
from .summaries import SUMMARY_COLUMNS, quantile_summary

logger = logging.getLogger(__name__)

PPC_COLUMNS = ["location", "disease", "respondents", "observed"] + SUMMARY_COLUMNS + ["p_value"]


@dataclass
class PrevalenceCheck:
    """Observed and replicated prevalence per (location, disease) with Bayesian p-values."""

    locations: np.ndarray
    counts: np.ndarray
    observed: np.ndarray
    replicated: np.ndarray
    p_values: np.ndarray

    def calibrated_fraction(self, low: float = 0.05, high: float = 0.95) -> float:
        """Share of p-values strictly inside (low, high)."""
        inside = (self.p_values > low) & (self.p_values < high)
        return float(inside.mean())

    def rows(self) -> List[Dict[str, float]]:
        out = []
        for g, location in enumerate(self.locations):
            for j in range(self.observed.shape[1]):
                row = {"location": int(location), "disease": j, "respondents": int(self.counts[g]),
                       "observed": float(self.observed[g, j])}
                row.update(quantile_summary(self.replicated[:, g, j]))
                row["p_value"] = float(self.p_values[g, j])
                out.append(row)
        return out


def bayesian_p_values(replicated: np.ndarray, observed: np.ndarray) -> np.ndarray:
    """P(T_rep > T_obs) + 0.5 * P(T_rep == T_obs) over the leading draw axis."""
    above = (replicated > observed[None]).mean(axis=0)
    ties = (replicated == observed[None]).mean(axis=0)
    return above + 0.5 * ties


def posterior_predictive_prevalence(target, draws: np.ndarray, rng: np.random.Generator,
                                    resample_epsilon: bool = True,
                                    locations: Optional[Sequence[int]] = None) -> PrevalenceCheck:
    """
    Replicate every respondent's diseases at each draw and compare prevalences.

    Args:
        target: PosteriorTarget the draws were taken from
        draws: Unconstrained draws shaped (draws, dim)
        rng: Random generator for the replicated responses
        resample_epsilon: Draw each eps_i afresh from N(0, 1) (new individuals);
            False keeps the sampled eps_i (same individuals)
        locations: Locations to check, defaulting to every observed location

    Returns:
        PrevalenceCheck

    Raises:
        EmptyGroup: If a requested location has no respondents
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if target.num_respondents == 0:
        raise EmptyGroup("all")
    if locations is None:
        locations = np.unique(target.location)
    locations = np.asarray(locations, dtype=int)
    counts = np.asarray([np.sum(target.location == l) for l in locations])
    for l, n in zip(locations, counts):
        if n == 0:
            raise EmptyGroup(int(l))

    group_of = {int(l): g for g, l in enumerate(locations)}
    members = np.flatnonzero(np.isin(target.location, locations))
    rows = np.asarray([group_of[int(l)] for l in target.location[members]])
    averaging = sparse.csr_matrix((1.0 / counts[rows], (rows, members)),
                                  shape=(locations.size, target.num_respondents))

    observed = averaging @ target.Y
    replicated = np.empty((draws.shape[0],) + observed.shape)
    for s, vec in enumerate(draws):
        fwd = target.forward(vec)
        eta = fwd.eta
        if resample_epsilon:
            fresh = rng.standard_normal(target.num_respondents)
            eta = eta + np.outer(fresh - fwd.state.epsilon, fwd.state.gamma)
        y_rep = (rng.uniform(size=eta.shape) < inverse_logit(eta)).astype(float)
        replicated[s] = averaging @ y_rep

    p_values = bayesian_p_values(replicated, observed)
    check = PrevalenceCheck(locations=locations, counts=counts, observed=observed, replicated=replicated,
                            p_values=p_values)
    logger.info(f"Posterior predictive check over {locations.size} locations: "
                f"{check.calibrated_fraction():.1%} of p-values in (0.05, 0.95)")
    return check
