"""Design vectors from raw respondent fields."""

from typing import Mapping

import numpy as np

from ..config import ModelConfig
from ..errors import AgeOutOfRange, MissingValue, NonpositiveSpan


def standardize_age(age_years: float, min_age: float, span: float) -> float:
    """
    Map age in years onto the unit age scale.

    Args:
        age_years: Age in years
        min_age: Minimum age considered (maps to 0)
        span: Age span (min_age + span maps to 1)

    Returns:
        (age_years - min_age) / span
    """
    if not span > 0:
        raise NonpositiveSpan(span)
    return (age_years - min_age) / span


def build_design(raw: Mapping[str, float], config: ModelConfig) -> np.ndarray:
    """
    Build the covariate vector for one respondent.

    Entries follow ``config.covariates``, a canonical-order subset of
    (intercept, sex, edu, eco, smoke, age, age_sex).

    Args:
        raw: Raw fields sex, edu, eco, smoke (0/1 flags) and age (years)
        config: Model configuration

    Returns:
        Length-n_p design vector with intercept 1.0 first
    """
    needed = set()
    for name in config.covariates:
        if name == "age_sex":
            needed.update(("age", "sex"))
        elif name != "intercept":
            needed.add(name)
    for field in sorted(needed):
        if field not in raw or raw[field] is None:
            raise MissingValue(field, 0)

    age = None
    if "age" in needed:
        age_years = float(raw["age"])
        if not (config.min_age <= age_years <= config.max_age):
            raise AgeOutOfRange(age_years, config.min_age, config.max_age)
        age = standardize_age(age_years, config.min_age, config.age_span)

    values = []
    for name in config.covariates:
        if name == "intercept":
            values.append(1.0)
        elif name == "age":
            values.append(age)
        elif name == "age_sex":
            values.append(age * float(raw["sex"]))
        else:
            values.append(float(raw[name]))
    return np.asarray(values, dtype=float)
