"""Location metadata: region partition, adjacency and contextual distances."""

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..errors import (
    AsymmetricMatrix,
    DanglingAdjacency,
    DataValidationError,
    IncompletePartition,
    InvalidDistance,
    NonzeroDiagonal,
)

SYMMETRY_RTOL = 1e-9


@dataclass(frozen=True)
class LocationTable:
    """
    Immutable location metadata.

    ``num_locations`` is the global location count; ``degree[l]`` is the
    neighbour count of location l used by the contiguity kernel.
    """

    region_of: np.ndarray
    adjacency: Tuple[Tuple[int, ...], ...]
    distance_matrices: Tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __post_init__(self):
        region_of = np.asarray(self.region_of)
        if region_of.ndim != 1 or region_of.size == 0:
            raise DataValidationError("region_of must be a non-empty vector")
        n = region_of.size
        for l, r in enumerate(region_of):
            if not float(r).is_integer() or r < 0:
                raise IncompletePartition(l)
        region_of = region_of.astype(int)
        region_of.setflags(write=False)
        object.__setattr__(self, "region_of", region_of)

        if len(self.adjacency) != n:
            raise DataValidationError(f"adjacency has {len(self.adjacency)} lists for {n} locations")
        adjacency = tuple(tuple(sorted(int(v) for v in nbrs)) for nbrs in self.adjacency)
        neighbor_sets = [set(nbrs) for nbrs in adjacency]
        for l, nbrs in enumerate(adjacency):
            if len(nbrs) != len(neighbor_sets[l]):
                raise DanglingAdjacency(l, nbrs[0])
            for other in nbrs:
                if other == l or not (0 <= other < n) or l not in neighbor_sets[other]:
                    raise DanglingAdjacency(l, other)
        object.__setattr__(self, "adjacency", adjacency)

        matrices = []
        for m, matrix in enumerate(self.distance_matrices):
            matrices.append(validate_distance_matrix(matrix, m, n))
        object.__setattr__(self, "distance_matrices", tuple(matrices))

    @property
    def num_locations(self) -> int:
        return int(self.region_of.size)

    @property
    def num_regions(self) -> int:
        return int(self.region_of.max()) + 1

    @property
    def num_distance_matrices(self) -> int:
        return len(self.distance_matrices)

    @property
    def degree(self) -> np.ndarray:
        return np.asarray([len(nbrs) for nbrs in self.adjacency], dtype=int)

    def are_neighbors(self, l: int, l_prime: int) -> bool:
        return l_prime in self.adjacency[l]

    def edges(self) -> Sequence[Tuple[int, int]]:
        """Each undirected edge once, as (low, high)."""
        return [(l, other) for l, nbrs in enumerate(self.adjacency) for other in nbrs if l < other]

    def region_members(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.region_of == r)


def validate_distance_matrix(matrix, m: int, n: int) -> np.ndarray:
    """Reject (never repair) a distance matrix that is not a valid D_m."""
    D = np.array(matrix, dtype=float)
    if D.shape != (n, n):
        raise DataValidationError(f"distance matrix {m} has shape {D.shape}, expected {(n, n)}")
    bad = ~np.isfinite(D) | (D < 0)
    if bad.any():
        l, l_prime = np.argwhere(bad)[0]
        raise InvalidDistance(m, int(l), int(l_prime))
    diag = np.flatnonzero(np.diag(D) != 0)
    if diag.size:
        raise NonzeroDiagonal(m, int(diag[0]))
    scale = np.maximum(np.abs(D), np.abs(D.T))
    asym = np.abs(D - D.T) > SYMMETRY_RTOL * scale
    if asym.any():
        l, l_prime = np.argwhere(asym)[0]
        raise AsymmetricMatrix(m, int(l), int(l_prime))
    D.setflags(write=False)
    return D


def adjacency_from_edges(num_locations: int, edges: Sequence[Tuple[int, int]]) -> Tuple[Tuple[int, ...], ...]:
    """Symmetric neighbour lists from undirected edges."""
    lists = [set() for _ in range(num_locations)]
    for a, b in edges:
        if a == b or not (0 <= a < num_locations) or not (0 <= b < num_locations):
            raise DanglingAdjacency(a, b)
        lists[a].add(b)
        lists[b].add(a)
    return tuple(tuple(sorted(s)) for s in lists)
