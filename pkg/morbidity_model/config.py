"""Configuration settings for the morbidity model engine."""

import configparser
import hashlib
import json
import os
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .schemas import (
    CANONICAL_COVARIATES,
    DynamicsMode,
    KernelKind,
    KernelSpec,
    MetricKind,
    ModelVariant,
    OmegaSharing,
    Topology,
)


DEFAULT_KERNELS = [
    KernelSpec(kind=KernelKind.PARTITION),
    KernelSpec(kind=KernelKind.CONTIGUITY),
    KernelSpec(kind=KernelKind.DISTANCE, distance_index=0),
    KernelSpec(kind=KernelKind.DISTANCE, distance_index=1),
    KernelSpec(kind=KernelKind.DISTANCE, distance_index=2),
]


class PriorHyperparameters(BaseModel):
    """Fixed prior constants."""

    model_config = ConfigDict(extra="forbid")

    a_delta: float = Field(default=0.3, gt=0, description="Gamma shape on the factor scales delta")
    b_delta: float = Field(default=0.6, gt=0, description="Gamma rate on the factor scales delta")
    sigma2_zeta: float = Field(default=0.5, gt=0, description="Variance of the local deviation coefficients")
    rho: Optional[float] = Field(default=None, gt=0, description="Expected non-shrunk share of Lambda (None = 1/n_p)")
    a_omega: float = Field(default=2.0, gt=0, description="Symmetric Dirichlet concentration on kernel weights")
    beta_a: float = Field(default=2.0, gt=0, description="Beta prior first shape on theta")
    beta_b: float = Field(default=2.0, gt=0, description="Beta prior second shape on theta")
    gamma1_scale: float = Field(default=1.0, gt=0, description="Half-normal scale on gamma_1")


class ModelConfig(BaseModel):
    """Model structure and prior configuration."""

    model_config = ConfigDict(extra="forbid")

    num_diseases: int = Field(default=5, ge=1, description="Number of diseases n_d")
    covariates: List[str] = Field(default_factory=lambda: list(CANONICAL_COVARIATES),
                                  description="Ordered covariate roster; intercept first")
    num_cohorts: int = Field(default=5, ge=1, description="Number of birth cohorts n_c")
    first_cohort_year: int = Field(default=1956, description="Calendar year of cohort 0 (metadata)")
    min_age: float = Field(default=51.0, description="Minimum age in years")
    age_span: float = Field(default=11.0, gt=0, description="Age span in years")
    kernels: List[KernelSpec] = Field(default_factory=lambda: list(DEFAULT_KERNELS),
                                      description="Kernel roster (one partition, one contiguity, any distance)")
    dynamics: DynamicsMode = Field(default=DynamicsMode.LINEAR, description="Cohort dynamics of coefficients")
    omega_sharing: OmegaSharing = Field(default=OmegaSharing.SHARED, description="Share kernel weights across scale levels")
    variant: ModelVariant = Field(default=ModelVariant.FULL_ST, description="Model variant mask")
    priors: PriorHyperparameters = Field(default_factory=PriorHyperparameters)
    seed: int = Field(default=20240601, description="Root RNG seed")

    @field_validator("covariates")
    @classmethod
    def _canonical_order(cls, value: List[str]) -> List[str]:
        unknown = [c for c in value if c not in CANONICAL_COVARIATES]
        if unknown:
            raise ValueError(f"unknown covariates {unknown}")
        if not value or value[0] != "intercept":
            raise ValueError("covariates must start with 'intercept'")
        positions = [CANONICAL_COVARIATES.index(c) for c in value]
        if positions != sorted(set(positions)):
            raise ValueError("covariates must follow the canonical order without repeats")
        if "age_sex" in value and not {"age", "sex"} <= set(value):
            raise ValueError("age_sex requires both age and sex")
        return value

    @field_validator("kernels")
    @classmethod
    def _roster(cls, value: List[KernelSpec]) -> List[KernelSpec]:
        kinds = [k.kind for k in value]
        if kinds.count(KernelKind.PARTITION) != 1 or kinds.count(KernelKind.CONTIGUITY) != 1:
            raise ValueError("kernel roster needs exactly one partition and one contiguity kernel")
        indices = [k.distance_index for k in value if k.kind == KernelKind.DISTANCE]
        if len(set(indices)) != len(indices):
            raise ValueError("distance kernels must reference distinct matrices")
        return value

    @property
    def num_predictors(self) -> int:
        return len(self.covariates)

    @property
    def num_kernels(self) -> int:
        return len(self.kernels)

    @property
    def num_distance_kernels(self) -> int:
        return sum(1 for k in self.kernels if k.kind == KernelKind.DISTANCE)

    @property
    def max_age(self) -> float:
        return self.min_age + self.age_span

    @property
    def rho(self) -> float:
        return self.priors.rho if self.priors.rho is not None else 1.0 / self.num_predictors


class SamplerConfig(BaseModel):
    """NUTS settings."""

    model_config = ConfigDict(extra="forbid")

    chains: int = Field(default=4, ge=1)
    warmup: int = Field(default=1500, ge=0)
    sampling: int = Field(default=1500, ge=1)
    target_accept: float = Field(default=0.8, gt=0, lt=1)
    max_depth: int = Field(default=10, ge=1)
    metric: MetricKind = Field(default=MetricKind.DIAG)
    init_radius: float = Field(default=2.0, gt=0, description="Initial points uniform in [-r, r]")
    max_energy_error: float = Field(default=1000.0, gt=0, description="Divergence threshold")
    initial_step_size: float = Field(default=1.0, gt=0)
    workers: int = Field(default=1, ge=1, description="Parallel chain processes")
    seed: int = Field(default=20240601)
    progress: bool = Field(default=False)


class SimConfig(BaseModel):
    """Synthetic data generation settings."""

    model_config = ConfigDict(extra="forbid")

    num_locations: int = Field(default=16, ge=1)
    num_regions: int = Field(default=4, ge=1)
    num_cohorts: int = Field(default=5, ge=1)
    respondents_per_cell: int = Field(default=50, ge=1, description="Respondents per location-cohort cell")
    topology: Topology = Field(default=Topology.GRID)
    num_distance_kernels: int = Field(default=3, ge=0, description="Synthetic distance matrices (the default kernel roster uses three)")
    feature_dim: int = Field(default=2, ge=1, description="Dimension of synthetic contextual features")
    parameter_source: str = Field(default="prior", description="'prior' or path to a truth.json")
    cohort_drift: List[List[float]] = Field(default_factory=list, description="Per-(j,h) slope added per cohort step")
    edu_rate: float = Field(default=0.3, ge=0, le=1)
    eco_rate: float = Field(default=0.4, ge=0, le=1)
    smoke_rate: float = Field(default=0.45, ge=0, le=1)
    seed: int = Field(default=7)

    @model_validator(mode="after")
    def _regions(self) -> "SimConfig":
        if self.num_regions > self.num_locations:
            raise ValueError("num_regions cannot exceed num_locations")
        return self


class RunConfig(BaseModel):
    """Everything one config file drives: simulate, fit and evaluate."""

    model_config = ConfigDict(extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    simulation: SimConfig = Field(default_factory=SimConfig)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        """Parse an INI-style file with [model], [priors], [sampler], [simulation] sections."""
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, "r", encoding="utf-8") as f:
                parser.read_file(f)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e

        known = {"model", "priors", "sampler", "simulation"}
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"unknown config section [{section}]", key=section)

        raw = {name: dict(parser.items(name)) if parser.has_section(name) else {} for name in known}
        model = _coerce_model_section(raw["model"])
        model["priors"] = raw["priors"]
        simulation = dict(raw["simulation"])
        if "cohort_drift" in simulation:
            simulation["cohort_drift"] = _parse_matrix(simulation["cohort_drift"])
        return cls.from_dict({"model": model, "sampler": raw["sampler"], "simulation": simulation})

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"invalid config key '{key}': {first['msg']}", key=key) from e

    @classmethod
    def from_env(cls, base: Optional["RunConfig"] = None) -> "RunConfig":
        """Apply the MORBIDITY_WORKERS environment override."""
        config = base or cls()
        workers = os.getenv("MORBIDITY_WORKERS")
        if workers:
            try:
                config.sampler.workers = max(1, int(workers))
            except ValueError as e:
                raise ConfigError(f"MORBIDITY_WORKERS must be an integer, got '{workers}'",
                                  key="MORBIDITY_WORKERS") from e
        return config

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _coerce_model_section(section: dict) -> dict:
    out = dict(section)
    if "covariates" in out:
        out["covariates"] = _split(out["covariates"])
    if "kernels" in out:
        try:
            out["kernels"] = [KernelSpec.parse(token) for token in _split(out["kernels"])]
        except ValueError as e:
            raise ConfigError(f"invalid config key 'model.kernels': {e}", key="model.kernels") from e
    return out


def _split(value: str) -> List[str]:
    return [token.strip() for token in value.split(",") if token.strip()]


def _parse_matrix(value: str) -> List[List[float]]:
    """Rows separated by ';', entries by ','."""
    try:
        return [[float(v) for v in _split(row)] for row in value.split(";") if row.strip()]
    except ValueError as e:
        raise ConfigError(f"invalid config key 'simulation.cohort_drift': {e}",
                          key="simulation.cohort_drift") from e


def toy_model_config(**overrides) -> ModelConfig:
    """Desk-scale configuration: n_d=3, n_p=5, n_f=3."""
    base = dict(
        num_diseases=3,
        covariates=["intercept", "sex", "eco", "age", "age_sex"],
        num_cohorts=5,
        kernels=[
            KernelSpec(kind=KernelKind.PARTITION),
            KernelSpec(kind=KernelKind.CONTIGUITY),
            KernelSpec(kind=KernelKind.DISTANCE, distance_index=0),
        ],
    )
    base.update(overrides)
    return ModelConfig(**base)


def load_run_config(path: Optional[str]) -> RunConfig:
    """Load a config file, or defaults when no path is given."""
    config = RunConfig.from_file(path) if path else RunConfig()
    return RunConfig.from_env(config)
