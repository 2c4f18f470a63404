"""Location kernels: partition, contiguity (spatial moving average) and distance."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConstraintViolation, ZeroDegreeNeighbor
from ..ingest.locations import LocationTable
from ..schemas import KernelKind, KernelSpec


@dataclass(frozen=True)
class KernelParams:
    """Kernel parameters theta_r (per region) and theta_c, all inside (0, 1)."""

    theta_region: Optional[np.ndarray] = None
    theta_contiguity: Optional[float] = None

    def __post_init__(self):
        if self.theta_region is not None:
            theta = np.asarray(self.theta_region, dtype=float)
            if not np.all((theta > 0) & (theta < 1)):
                raise ConstraintViolation("theta_region", "must lie strictly inside (0, 1)")
            object.__setattr__(self, "theta_region", theta)
        if self.theta_contiguity is not None and not (0 < self.theta_contiguity < 1):
            raise ConstraintViolation("theta_contiguity", "must lie strictly inside (0, 1)")


def partition_kernel(l: int, l_prime: int, table: LocationTable, theta: np.ndarray) -> float:
    """1 on the diagonal, theta_r within region r, 0 across regions."""
    if l == l_prime:
        return 1.0
    r = table.region_of[l]
    if r == table.region_of[l_prime]:
        return float(theta[r])
    return 0.0


def contiguity_kernel(l: int, l_prime: int, table: LocationTable, theta_c: float) -> float:
    """1 on the diagonal, theta_c / sqrt(deg(l) deg(l')) between neighbours, 0 otherwise."""
    if l == l_prime:
        return 1.0
    if not table.are_neighbors(l, l_prime):
        return 0.0
    degree = table.degree
    if degree[l] == 0 or degree[l_prime] == 0:
        raise ZeroDegreeNeighbor(l, l_prime)
    return float(theta_c / np.sqrt(degree[l] * degree[l_prime]))


def distance_kernel(l: int, l_prime: int, D: np.ndarray) -> float:
    """exp(-D(l, l'))."""
    return float(np.exp(-D[l, l_prime]))


class KernelBasis:
    """
    Parameter-free structure of every kernel over one location table.

    The partition and contiguity kernels are linear in their theta, so each
    is stored as the matrix multiplying theta; distance kernels are fixed.
    """

    def __init__(self, table: LocationTable):
        self.table = table
        n = table.num_locations
        region = table.region_of
        same = (region[:, None] == region[None, :]) & ~np.eye(n, dtype=bool)
        # region_pairs[r] marks off-diagonal pairs inside region r
        self.region_pairs = np.stack([same & (region[:, None] == r) for r in range(table.num_regions)]).astype(float)

        adjacency = np.zeros((n, n))
        for a, b in table.edges():
            adjacency[a, b] = adjacency[b, a] = 1.0
        degree = table.degree.astype(float)
        both = np.outer(degree, degree)
        if np.any((adjacency > 0) & (both == 0)):
            a, b = np.argwhere((adjacency > 0) & (both == 0))[0]
            raise ZeroDegreeNeighbor(int(a), int(b))
        with np.errstate(divide="ignore", invalid="ignore"):
            self.contiguity_weights = np.where(adjacency > 0, adjacency / np.sqrt(both), 0.0)

        self.distance_kernels = tuple(np.exp(-D) for D in table.distance_matrices)

    @property
    def num_locations(self) -> int:
        return self.table.num_locations

    def partition(self, theta_region: np.ndarray) -> np.ndarray:
        K = np.tensordot(np.asarray(theta_region, dtype=float), self.region_pairs, axes=1)
        np.fill_diagonal(K, 1.0)
        return K

    def contiguity(self, theta_c: float) -> np.ndarray:
        K = theta_c * self.contiguity_weights
        np.fill_diagonal(K, 1.0)
        return K

    def distance(self, m: int) -> np.ndarray:
        return self.distance_kernels[m]

    def matrix(self, spec: KernelSpec, params: KernelParams) -> np.ndarray:
        if spec.kind == KernelKind.PARTITION:
            if params.theta_region is None:
                raise ConstraintViolation("theta_region", "required by the partition kernel")
            return self.partition(params.theta_region)
        if spec.kind == KernelKind.CONTIGUITY:
            if params.theta_contiguity is None:
                raise ConstraintViolation("theta_contiguity", "required by the contiguity kernel")
            return self.contiguity(params.theta_contiguity)
        return self.distance(spec.distance_index)


def kernel_matrix(spec: KernelSpec, params: KernelParams, table: LocationTable) -> np.ndarray:
    """
    Full num_locations x num_locations kernel matrix.

    Args:
        spec: Kernel roster entry
        params: theta_r and theta_c
        table: Location metadata

    Returns:
        Symmetric matrix with unit diagonal
    """
    return KernelBasis(table).matrix(spec, params)
