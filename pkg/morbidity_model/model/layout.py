"""Layout of the flat unconstrained parameter vector."""

from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..config import ModelConfig
from ..schemas import DynamicsMode, KernelKind, KernelSpec, LayoutEntry, ModelVariant, OmegaSharing


@dataclass(frozen=True)
class VariantMask:
    """Which parameter groups a model variant samples."""

    local: bool
    temporal: bool
    kernels: bool
    contiguity: bool

    @classmethod
    def for_variant(cls, variant: ModelVariant) -> "VariantMask":
        return {
            ModelVariant.FULL_ST: cls(local=True, temporal=True, kernels=True, contiguity=True),
            ModelVariant.FULL_NS: cls(local=True, temporal=True, kernels=True, contiguity=False),
            ModelVariant.FULL_NST: cls(local=True, temporal=False, kernels=True, contiguity=False),
            ModelVariant.IL: cls(local=True, temporal=True, kernels=False, contiguity=False),
            ModelVariant.FE: cls(local=False, temporal=False, kernels=False, contiguity=False),
        }[variant]


class ParameterLayout:
    """
    Named blocks of the unconstrained vector for one configuration and dataset size.

    Blocks fixed by the variant mask are absent. Scalar blocks have shape ().
    """

    def __init__(self, config: ModelConfig, num_locations: int, num_regions: int, num_respondents: int):
        self.config = config
        self.num_diseases = config.num_diseases
        self.num_predictors = config.num_predictors
        self.rank = min(config.num_diseases, config.num_predictors)
        self.num_locations = num_locations
        self.num_regions = num_regions
        self.num_cohorts = config.num_cohorts
        self.num_respondents = num_respondents
        self.dynamics = config.dynamics

        mask = VariantMask.for_variant(config.variant)
        temporal = mask.temporal and (config.dynamics == DynamicsMode.LINEAR or config.num_cohorts > 1)
        self.mask = VariantMask(local=mask.local, temporal=temporal, kernels=mask.kernels,
                                contiguity=mask.contiguity)

        if self.mask.kernels:
            self.active_kernels: List[KernelSpec] = [
                k for k in config.kernels if self.mask.contiguity or k.kind != KernelKind.CONTIGUITY
            ]
        else:
            self.active_kernels = []
        per_level = config.omega_sharing == OmegaSharing.PER_LEVEL and self.mask.temporal
        self.omega_levels = 2 if per_level else 1

        self._blocks: "OrderedDict[str, LayoutEntry]" = OrderedDict()
        n_d, n_p, r, n_l = self.num_diseases, self.num_predictors, self.rank, num_locations
        self._add("phi", (n_d, r), "identity")
        self._add("psi", (r, n_p), "identity")
        self._add("log_delta", (r,), "log")
        if self.mask.local:
            self._add("log_lambda0", (n_d, n_p), "log")
            self._add("log_alpha_lambda0", (), "log")
        if self.mask.temporal:
            self._add("log_lambda1", (n_d, n_p), "log")
            self._add("log_alpha_lambda1", (), "log")
        if self.mask.kernels and self.has_kernel(KernelKind.PARTITION):
            self._add("logit_theta_region", (num_regions,), "logit")
        if self.mask.kernels and self.has_kernel(KernelKind.CONTIGUITY):
            self._add("logit_theta_contiguity", (), "logit")
        if self.num_active_kernels > 1:
            self._add("alr_omega", (n_d, self.omega_levels, self.num_active_kernels - 1), "alr")
        self._add("log_gamma1", (), "log")
        self._add("gamma_rest", (n_d - 1,), "identity")
        if self.mask.local:
            self._add("z0", (n_d, n_p, n_l), "identity")
        if self.mask.temporal:
            self._add("z1", self.z1_shape, "identity")
        self._add("epsilon", (num_respondents,), "identity")

    def _add(self, name: str, shape: Tuple[int, ...], transform: str) -> None:
        size = int(np.prod(shape)) if shape else 1
        if size == 0:
            return
        offset = self.dim
        self._blocks[name] = LayoutEntry(name=name, offset=offset, size=size, shape=list(shape),
                                         transform=transform)

    @property
    def z1_shape(self) -> Tuple[int, ...]:
        n_d, n_p, n_l = self.num_diseases, self.num_predictors, self.num_locations
        if self.dynamics == DynamicsMode.RANDOM_WALK:
            return (n_d, n_p, self.num_cohorts - 1, n_l)
        return (n_d, n_p, n_l)

    @property
    def num_active_kernels(self) -> int:
        return len(self.active_kernels)

    def has_kernel(self, kind: KernelKind) -> bool:
        return any(k.kind == kind for k in self.active_kernels)

    def kernel_position(self, kind: KernelKind) -> int:
        return next(i for i, k in enumerate(self.active_kernels) if k.kind == kind)

    def omega_level(self, s: int) -> int:
        """Weight level used by scale level s (0 for xi0, 1 for xi1)."""
        return s if self.omega_levels == 2 else 0

    @property
    def dim(self) -> int:
        return sum(e.size for e in self._blocks.values())

    @property
    def entries(self) -> List[LayoutEntry]:
        return list(self._blocks.values())

    def has(self, name: str) -> bool:
        return name in self._blocks

    def entry(self, name: str) -> LayoutEntry:
        return self._blocks[name]

    def block(self, vec: np.ndarray, name: str) -> np.ndarray:
        e = self._blocks[name]
        return np.asarray(vec[e.offset:e.offset + e.size]).reshape(e.shape)

    def unpack(self, vec: np.ndarray) -> Dict[str, np.ndarray]:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got shape {vec.shape}")
        return {name: self.block(vec, name) for name in self._blocks}

    def pack(self, blocks: Dict[str, np.ndarray]) -> np.ndarray:
        vec = np.empty(self.dim)
        for name, e in self._blocks.items():
            vec[e.offset:e.offset + e.size] = np.asarray(blocks[name], dtype=float).reshape(-1)
        return vec

    def coordinate_names(self) -> List[str]:
        names = []
        for name, e in self._blocks.items():
            if not e.shape:
                names.append(name)
                continue
            for index in np.ndindex(*e.shape):
                names.append(f"{name}[{','.join(str(i) for i in index)}]")
        return names

    def block_names(self) -> Sequence[str]:
        return list(self._blocks)
