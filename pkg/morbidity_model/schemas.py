"""Pydantic schemas for survey records, kernel specifications and run metadata."""

import math
from enum import Enum
from typing import Dict, List, Optional, Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# Canonical covariate roster; configured rosters are ordered subsets of this list.
CANONICAL_COVARIATES = ["intercept", "sex", "edu", "eco", "smoke", "age", "age_sex"]

# Raw respondent fields the design is built from.
RAW_FIELDS = ["sex", "edu", "eco", "smoke", "age"]

BINARY_RAW_FIELDS = ["sex", "edu", "eco", "smoke"]


class KernelKind(str, Enum):
    """Families of location kernels."""
    PARTITION = "partition"
    CONTIGUITY = "contiguity"
    DISTANCE = "distance"


class DynamicsMode(str, Enum):
    """Cohort dynamics of the regression coefficients."""
    LINEAR = "linear"
    RANDOM_WALK = "random_walk"


class OmegaSharing(str, Enum):
    """Whether kernel weights are shared across the two scale levels."""
    SHARED = "shared"
    PER_LEVEL = "per_level"


class ModelVariant(str, Enum):
    """Model-comparison roster; each variant is a mask over the full model."""
    FULL_ST = "full_st"
    FULL_NS = "full_ns"
    FULL_NST = "full_nst"
    IL = "il"
    FE = "fe"

    @classmethod
    def parse(cls, name: str) -> "ModelVariant":
        return cls(name.strip().lower().replace("-", "_"))


class MetricKind(str, Enum):
    """Mass matrix used by the sampler."""
    UNIT = "unit"
    DIAG = "diag"


class Topology(str, Enum):
    """Adjacency topology for synthetic locations."""
    GRID = "grid"
    RANDOM_GEOMETRIC = "random_geometric"


class KernelSpec(BaseModel):
    """One entry of the kernel roster."""

    model_config = ConfigDict(frozen=True)

    kind: KernelKind = Field(description="Kernel family")
    distance_index: Optional[int] = Field(default=None, ge=0, description="Distance matrix index for distance kernels")

    @model_validator(mode="after")
    def _check_index(self) -> "KernelSpec":
        if self.kind == KernelKind.DISTANCE and self.distance_index is None:
            raise ValueError("distance kernels need a distance_index")
        if self.kind != KernelKind.DISTANCE and self.distance_index is not None:
            raise ValueError(f"{self.kind.value} kernels take no distance_index")
        return self

    @classmethod
    def parse(cls, token: str) -> "KernelSpec":
        """Parse 'partition', 'contiguity' or 'distance:<m>'."""
        token = token.strip().lower()
        if token.startswith(KernelKind.DISTANCE.value):
            _, _, index = token.partition(":")
            return cls(kind=KernelKind.DISTANCE, distance_index=int(index) if index else None)
        return cls(kind=KernelKind(token))

    def label(self) -> str:
        if self.kind == KernelKind.DISTANCE:
            return f"distance:{self.distance_index}"
        return self.kind.value


class RespondentRecord(BaseModel):
    """One survey response."""

    model_config = ConfigDict(frozen=True)

    id: str = Field(description="Opaque respondent identifier")
    location: int = Field(ge=0, description="0-based location index")
    cohort: int = Field(ge=0, description="0-based offset from the earliest cohort")
    responses: List[int] = Field(description="Binary diagnosis flags, one per disease")
    covariates: List[float] = Field(description="Design vector; entry 0 is the intercept")
    raw: Dict[str, float] = Field(default_factory=dict, description="Raw covariate fields as read from file")

    @field_validator("responses")
    @classmethod
    def _binary(cls, value: List[int]) -> List[int]:
        if any(v not in (0, 1) for v in value):
            raise ValueError("responses must be 0 or 1")
        return value

    @field_validator("covariates")
    @classmethod
    def _finite_with_intercept(cls, value: List[float]) -> List[float]:
        if not value or value[0] != 1.0:
            raise ValueError("covariates[0] must be the intercept 1.0")
        if not all(math.isfinite(v) for v in value):
            raise ValueError("covariates must be finite")
        return value


class LayoutEntry(BaseModel):
    """Offsets of one parameter block inside the unconstrained vector."""

    name: str
    offset: int
    size: int
    shape: List[int]
    transform: str


class RunManifest(BaseModel):
    """Provenance record written next to every command's outputs."""

    command: str = Field(description="CLI command that produced the run")
    config_hash: str = Field(description="SHA-256 of the canonical configuration")
    seed: int
    engine_version: str
    rng_algorithm: str = Field(default="numpy.PCG64/SeedSequence")
    variant: Optional[str] = None
    parameter_layout: List[LayoutEntry] = Field(default_factory=list)
    input_digests: Dict[str, str] = Field(default_factory=dict)
    output_digests: Dict[str, str] = Field(default_factory=dict)
    dataset_digest: Optional[str] = None
    timing_seconds: float = 0.0
    warnings: List[str] = Field(default_factory=list)
    extra: Dict[str, Any] = Field(default_factory=dict)
