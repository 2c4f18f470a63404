"""Derived epidemiological summaries of posterior draws."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from ..config import ModelConfig
from ..errors import ConfigError, UnknownProfileField
from ..ingest.design import build_design
from ..model.coefficients import CoefficientField, inverse_logit, state_coefficients
from ..model.priors import from_unconstrained
from ..model.state import ParameterState
from ..schemas import BINARY_RAW_FIELDS, RAW_FIELDS

SUMMARY_COLUMNS = ["mean", "q05", "q25", "q75", "q95"]
SUMMARY_QUANTILES = (0.05, 0.25, 0.75, 0.95)
QUANTITIES = ("curve", "or", "cohort-or", "comorbidity", "theta", "b0")
PROFILE_FIELDS = tuple(RAW_FIELDS) + ("location", "cohort")
REFERENCE_PROFILE = {"sex": 0.0, "edu": 0.0, "eco": 0.0, "smoke": 0.0, "location": 0, "cohort": 0}
LOGISTIC_VARIANCE = np.pi ** 2 / 3.0


@dataclass
class SummaryTable:
    """Long-format table ready for CSV output."""

    quantity: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)


def quantile_summary(values) -> Dict[str, float]:
    values = np.asarray(values, dtype=float)
    q = np.quantile(values, SUMMARY_QUANTILES)
    return {"mean": float(values.mean()), "q05": float(q[0]), "q25": float(q[1]),
            "q75": float(q[2]), "q95": float(q[3])}


def credible_interval(values, level: float) -> tuple:
    tail = (1.0 - level) / 2.0
    low, high = np.quantile(np.asarray(values, dtype=float), [tail, 1.0 - tail])
    return float(low), float(high)


def posterior_states(target, draws: np.ndarray) -> List[ParameterState]:
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    return [from_unconstrained(vec, target.layout) for vec in draws]


def posterior_fields(target, states: Sequence[ParameterState]) -> List[CoefficientField]:
    return [state_coefficients(state, target.layout, target.basis) for state in states]


def latent_correlation(gamma: np.ndarray) -> np.ndarray:
    """Correlation of the logistic latent traits implied by the shared factor loadings."""
    scale = np.sqrt(gamma ** 2 + LOGISTIC_VARIANCE)
    corr = np.outer(gamma, gamma) / np.outer(scale, scale)
    np.fill_diagonal(corr, 1.0)
    return corr


def comorbidity_summary(states: Sequence[ParameterState]) -> SummaryTable:
    """Posterior of gamma gamma^T and the latent correlation, every (j, k) pair."""
    outer = np.stack([np.outer(s.gamma, s.gamma) for s in states])
    corr = np.stack([latent_correlation(s.gamma) for s in states])
    n_d = outer.shape[1]
    rows = []
    for j in range(n_d):
        for k in range(n_d):
            row = {"disease_j": j, "disease_k": k}
            row.update(quantile_summary(outer[:, j, k]))
            row["correlation_mean"] = float(corr[:, j, k].mean())
            rows.append(row)
    columns = ["disease_j", "disease_k"] + SUMMARY_COLUMNS + ["correlation_mean"]
    return SummaryTable(quantity="comorbidity", columns=columns, rows=rows)


def b0_summary(states: Sequence[ParameterState], covariates: Sequence[str], level: float = 0.95) -> SummaryTable:
    """
    National coefficients with credible intervals.

    ``significant`` marks intervals that exclude zero.
    """
    B0 = np.stack([s.B0 for s in states])
    rows = []
    for j in range(B0.shape[1]):
        for h, name in enumerate(covariates):
            low, high = credible_interval(B0[:, j, h], level)
            row = {"disease": j, "covariate": name}
            row.update(quantile_summary(B0[:, j, h]))
            row.update({"ci_low": low, "ci_high": high, "significant": bool(low > 0 or high < 0)})
            rows.append(row)
    columns = ["disease", "covariate"] + SUMMARY_COLUMNS + ["ci_low", "ci_high", "significant"]
    return SummaryTable(quantity="b0", columns=columns, rows=rows)


def odds_ratio_summary(fields: Sequence[CoefficientField], disease: int, predictor: int, cohort: int,
                       level: float = 0.90) -> SummaryTable:
    """Per-location odds ratio exp(beta_jh(l, c))."""
    odds = np.exp(np.stack([f.beta[disease, predictor, :, cohort] for f in fields]))
    rows = []
    for l in range(odds.shape[1]):
        low, high = credible_interval(odds[:, l], level)
        row = {"location": l, "disease": disease, "predictor": predictor, "cohort": cohort}
        row.update(quantile_summary(odds[:, l]))
        row.update({"ci_low": low, "ci_high": high})
        rows.append(row)
    columns = ["location", "disease", "predictor", "cohort"] + SUMMARY_COLUMNS + ["ci_low", "ci_high"]
    return SummaryTable(quantity="or", columns=columns, rows=rows)


def cohort_odds_ratio_summary(fields: Sequence[CoefficientField], disease: int, predictor: int,
                              cohort: int = 0, level: float = 0.90) -> SummaryTable:
    """
    Odds ratio between two subsequent cohorts, exp(beta(l, c + 1) - beta(l, c)).

    Under linear dynamics this is exp(lambda1 * xi1(l)) for every c.
    """
    num_cohorts = fields[0].beta.shape[3]
    if not 0 <= cohort < num_cohorts - 1:
        raise ConfigError(f"cohort step {cohort} -> {cohort + 1} outside 0..{num_cohorts - 1}", key="cohort")
    odds = np.exp(np.stack([f.beta[disease, predictor, :, cohort + 1] - f.beta[disease, predictor, :, cohort]
                            for f in fields]))
    rows = []
    for l in range(odds.shape[1]):
        low, high = credible_interval(odds[:, l], level)
        row = {"location": l, "disease": disease, "predictor": predictor, "cohort": cohort}
        row.update(quantile_summary(odds[:, l]))
        row.update({"ci_low": low, "ci_high": high})
        rows.append(row)
    columns = ["location", "disease", "predictor", "cohort"] + SUMMARY_COLUMNS + ["ci_low", "ci_high"]
    return SummaryTable(quantity="cohort-or", columns=columns, rows=rows)


def theta_summary(states: Sequence[ParameterState]) -> SummaryTable:
    """Regional and contiguity kernel parameters."""
    rows = []
    if states and states[0].theta_region is not None:
        theta = np.stack([s.theta_region for s in states])
        for r in range(theta.shape[1]):
            row = {"parameter": f"theta_region[{r}]"}
            row.update(quantile_summary(theta[:, r]))
            rows.append(row)
    if states and states[0].theta_contiguity is not None:
        row = {"parameter": "theta_contiguity"}
        row.update(quantile_summary([s.theta_contiguity for s in states]))
        rows.append(row)
    return SummaryTable(quantity="theta", columns=["parameter"] + SUMMARY_COLUMNS, rows=rows)


def parse_profile(pairs: Mapping[str, str], config: ModelConfig, num_locations: int) -> Dict[str, float]:
    """
    Covariate profile from key=value pairs over the reference profile.

    Raises:
        UnknownProfileField: If a key is not a raw field, location or cohort
        ConfigError: If a value is not a number or out of range
    """
    profile = dict(REFERENCE_PROFILE)
    profile["age"] = config.min_age
    for key, value in pairs.items():
        if key not in PROFILE_FIELDS:
            raise UnknownProfileField(key)
        try:
            profile[key] = float(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"profile field '{key}' must be numeric, got '{value}'", key=key) from e
    for flag in BINARY_RAW_FIELDS:
        if profile[flag] not in (0.0, 1.0):
            raise ConfigError(f"profile field '{flag}' must be 0 or 1", key=flag)
    profile["location"] = int(profile["location"])
    profile["cohort"] = int(profile["cohort"])
    if not 0 <= profile["location"] < num_locations:
        raise ConfigError(f"profile location {profile['location']} outside 0..{num_locations - 1}", key="location")
    if not 0 <= profile["cohort"] < config.num_cohorts:
        raise ConfigError(f"profile cohort {profile['cohort']} outside 0..{config.num_cohorts - 1}", key="cohort")
    return profile


def default_ages(config: ModelConfig) -> np.ndarray:
    return np.arange(np.ceil(config.min_age), np.floor(config.max_age) + 1.0)


def morbidity_curves(states: Sequence[ParameterState], fields: Sequence[CoefficientField], config: ModelConfig,
                     profile: Mapping[str, float], ages: Optional[Sequence[float]] = None,
                     conditional: bool = False, quadrature_points: int = 20) -> SummaryTable:
    """
    Disease probability against age for one profile, location and cohort.

    By default eps is integrated over its N(0, 1) prior by Gauss-Hermite
    quadrature; ``conditional`` fixes eps = 0.
    """
    ages = default_ages(config) if ages is None else np.asarray(ages, dtype=float)
    X = np.stack([build_design({**profile, "age": age}, config) for age in ages])
    location, cohort = int(profile["location"]), int(profile["cohort"])
    if conditional:
        nodes, weights = np.zeros(1), np.ones(1)
    else:
        nodes, weights = hermegauss(quadrature_points)
        weights = weights / np.sqrt(2.0 * np.pi)

    curves = []
    for state, coef in zip(states, fields):
        eta = X @ coef.beta[:, :, location, cohort].T
        shifted = eta[:, :, None] + state.gamma[None, :, None] * nodes[None, None, :]
        curves.append(inverse_logit(shifted) @ weights)
    curves = np.stack(curves)

    rows = []
    for a, age in enumerate(ages):
        for j in range(curves.shape[2]):
            row = {"age": float(age), "disease": j, "location": location, "cohort": cohort}
            row.update(quantile_summary(curves[:, a, j]))
            rows.append(row)
    columns = ["age", "disease", "location", "cohort"] + SUMMARY_COLUMNS
    return SummaryTable(quantity="curve", columns=columns, rows=rows)


def _predictor_index(config: ModelConfig, name: str) -> int:
    if name not in config.covariates:
        raise ConfigError(f"predictor '{name}' not in covariates {config.covariates}", key="predictor")
    return config.covariates.index(name)


def derived_summaries(target, draws: np.ndarray, quantity: str, profile: Optional[Mapping[str, str]] = None,
                      disease: int = 0, predictor: str = "eco", conditional: bool = False) -> SummaryTable:
    """
    One summary table computed from posterior draws.

    Args:
        target: PosteriorTarget the draws belong to
        draws: Unconstrained draws shaped (draws, dim)
        quantity: One of curve, or, cohort-or, comorbidity, theta, b0
        profile: key=value overrides of the reference profile (curve, or, cohort-or)
        disease: Disease index for odds ratios
        predictor: Covariate name for odds ratios
        conditional: Morbidity curves at eps = 0

    Returns:
        SummaryTable

    Raises:
        UnknownProfileField: If the profile names an unknown field
    """
    config = target.config
    parsed = parse_profile(profile or {}, config, target.table.num_locations)
    if not 0 <= disease < config.num_diseases:
        raise ConfigError(f"disease {disease} outside 0..{config.num_diseases - 1}", key="disease")
    states = posterior_states(target, draws)
    if quantity == "comorbidity":
        return comorbidity_summary(states)
    if quantity == "theta":
        return theta_summary(states)
    if quantity == "b0":
        return b0_summary(states, config.covariates)
    fields = posterior_fields(target, states)
    if quantity == "curve":
        return morbidity_curves(states, fields, config, parsed, conditional=conditional)
    if quantity == "or":
        return odds_ratio_summary(fields, disease, _predictor_index(config, predictor), parsed["cohort"])
    if quantity == "cohort-or":
        return cohort_odds_ratio_summary(fields, disease, _predictor_index(config, predictor), parsed["cohort"])
    raise ConfigError(f"unknown quantity '{quantity}', expected one of {', '.join(QUANTITIES)}", key="quantity")
