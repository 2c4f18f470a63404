"""Age-slope bias of fixed-survey-year morbidity curves under cohort drift."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, special

from ..config import ModelConfig, SimConfig
from ..errors import InsufficientCrossing
from ..model.state import ParameterState
from ..schemas import ModelVariant, RespondentRecord
from .simulator import gen_dataset, gen_locations

logger = logging.getLogger(__name__)

# Keeps group intercepts finite when a group is all 0 or all 1
INTERCEPT_RIDGE = 1e-6


@dataclass
class SlopeEstimate:
    slope: float
    se: float


@dataclass
class BiasResult:
    """Age slopes (per unit of standardized age) under the two poolings."""

    by_survey_year: SlopeEstimate
    by_cohort: SlopeEstimate
    num_respondents: int
    num_survey_years: int

    @property
    def difference(self) -> float:
        return self.by_survey_year.slope - self.by_cohort.slope

    @property
    def combined_se(self) -> float:
        return float(np.hypot(self.by_survey_year.se, self.by_cohort.se))


def _negative_loglik(params: np.ndarray, Z: np.ndarray, y: np.ndarray, ridge: np.ndarray):
    eta = Z @ params
    value = np.sum(np.logaddexp(0.0, eta) - y * eta) + 0.5 * np.sum(ridge * params ** 2)
    grad = Z.T @ (special.expit(eta) - y) + ridge * params
    return value, grad


def _hessian(params: np.ndarray, Z: np.ndarray, y: np.ndarray, ridge: np.ndarray) -> np.ndarray:
    p = special.expit(Z @ params)
    return (Z * (p * (1.0 - p))[:, None]).T @ Z + np.diag(ridge)


def pooled_age_slope(age: np.ndarray, y: np.ndarray, groups: np.ndarray) -> SlopeEstimate:
    """
    Logistic fit of y on standardized age with one intercept per group.

    Args:
        age: Standardized ages
        y: Binary outcomes
        groups: Group label per respondent

    Returns:
        SlopeEstimate with the inverse-Hessian standard error
    """
    labels, index = np.unique(groups, return_inverse=True)
    Z = np.zeros((age.size, labels.size + 1))
    Z[np.arange(age.size), index] = 1.0
    Z[:, -1] = age
    ridge = np.full(Z.shape[1], INTERCEPT_RIDGE)
    ridge[-1] = 0.0
    fit = optimize.minimize(_negative_loglik, np.zeros(Z.shape[1]), args=(Z, y, ridge), jac=True,
                            hess=lambda x, *args: _hessian(x, *args), method="Newton-CG")
    if not fit.success:
        logger.warning(f"Pooled logistic fit did not converge: {fit.message}")
    covariance = np.linalg.inv(_hessian(fit.x, Z, y, ridge))
    return SlopeEstimate(slope=float(fit.x[-1]), se=float(np.sqrt(covariance[-1, -1])))


def survey_years(records: Sequence[RespondentRecord], first_cohort_year: int) -> np.ndarray:
    """Calendar survey year = birth year + completed age."""
    return np.asarray([first_cohort_year + r.cohort + int(np.floor(r.raw["age"])) for r in records])


def age_slopes(records: Sequence[RespondentRecord], config: ModelConfig, disease: int = 0) -> BiasResult:
    """
    Age slopes pooled within survey year and within birth cohort.

    Raises:
        InsufficientCrossing: If no survey year holds more than one cohort
    """
    cohorts = np.asarray([r.cohort for r in records])
    if np.unique(cohorts).size < 2:
        raise InsufficientCrossing("a single birth cohort")
    years = survey_years(records, config.first_cohort_year)
    if all(np.unique(cohorts[years == year]).size < 2 for year in np.unique(years)):
        raise InsufficientCrossing("no survey year contains more than one cohort")

    age = np.asarray([(r.raw["age"] - config.min_age) / config.age_span for r in records])
    y = np.asarray([r.responses[disease] for r in records], dtype=float)
    result = BiasResult(by_survey_year=pooled_age_slope(age, y, years),
                        by_cohort=pooled_age_slope(age, y, cohorts),
                        num_respondents=len(records), num_survey_years=int(np.unique(years).size))
    logger.info(f"Age slope by survey year {result.by_survey_year.slope:.3f} "
                f"({result.by_survey_year.se:.3f}), by cohort {result.by_cohort.slope:.3f} "
                f"({result.by_cohort.se:.3f})")
    return result


def bias_demo(sim: SimConfig, config: ModelConfig, disease: int = 0,
              state: Optional[ParameterState] = None) -> BiasResult:
    """
    Simulate a fixed-effects population with the configured cohort drift and
    compare the two age-slope estimators.

    ``sim.cohort_drift`` is on the logit scale per cohort step, so later
    cohorts being healthier is a negative intercept entry. ``state`` fixes the
    fixed-effects parameters instead of drawing them per ``sim.parameter_source``.
    """
    config = config.model_copy(update={"variant": ModelVariant.FE})
    locations = gen_locations(sim)
    dataset = gen_dataset(sim, config, locations.table, state=state)
    return age_slopes(dataset.records, config, disease)


def drift_matrix(config: ModelConfig, intercept_drift: float, disease: int = 0) -> list:
    """cohort_drift with a single intercept entry set."""
    drift = np.zeros((config.num_diseases, config.num_predictors))
    drift[disease, 0] = intercept_drift
    return drift.tolist()
