"""Synthetic locations, parameters and pseudo-panel survey datasets."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..config import ModelConfig, SimConfig
from ..errors import ConfigError
from ..ingest.design import build_design
from ..ingest.locations import LocationTable, adjacency_from_edges
from ..kernels.functions import KernelBasis
from ..model.coefficients import inverse_logit, state_coefficients
from ..model.layout import ParameterLayout
from ..model.priors import from_unconstrained, sample_prior, to_unconstrained
from ..model.state import ParameterState
from ..schemas import RespondentRecord, Topology
from ..utils.io import load_json, save_json
from ..utils.rng import make_rng

logger = logging.getLogger(__name__)

ETA_CLIP = 40.0
TRUTH_FILE = "truth.json"

# Derived stream keys under the simulation seed
LOCATION_STREAM = 0
PARAMETER_STREAM = 1
CELL_STREAM = 2


@dataclass
class SimulatedLocations:
    """Location table plus the synthetic geometry it was built from."""

    table: LocationTable
    coordinates: np.ndarray
    features: List[np.ndarray] = field(default_factory=list)


@dataclass
class SimulatedDataset:
    """Generated respondents with every latent value used to generate them."""

    records: List[RespondentRecord]
    state: ParameterState
    layout: ParameterLayout
    beta: np.ndarray
    truth: Dict[str, Any]


def _grid(num_locations: int):
    side = int(np.ceil(np.sqrt(num_locations)))
    coordinates = np.asarray([divmod(l, side) for l in range(num_locations)], dtype=float)
    edges = []
    for l in range(num_locations):
        row, col = divmod(l, side)
        if col + 1 < side and l + 1 < num_locations:
            edges.append((l, l + 1))
        if l + side < num_locations:
            edges.append((l, l + side))
    return coordinates, edges


def _random_geometric(num_locations: int, rng: np.random.Generator):
    coordinates = rng.uniform(size=(num_locations, 2))
    radius = np.sqrt(2.0 * np.log(max(num_locations, 2)) / num_locations)
    distances = cdist(coordinates, coordinates)
    edges = {(l, k) for l in range(num_locations) for k in range(l + 1, num_locations)
             if distances[l, k] <= radius}
    if num_locations > 1:
        np.fill_diagonal(distances, np.inf)
        for l in range(num_locations):
            nearest = int(np.argmin(distances[l]))
            edges.add((min(l, nearest), max(l, nearest)))
    return coordinates, sorted(edges)


def _contiguous_regions(coordinates: np.ndarray, num_regions: int) -> np.ndarray:
    order = np.lexsort((coordinates[:, 1], coordinates[:, 0]))
    region_of = np.empty(len(order), dtype=int)
    region_of[order] = np.arange(len(order)) * num_regions // len(order)
    return region_of


def scaled_distances(features: np.ndarray) -> np.ndarray:
    """Euclidean distances rescaled to mean 1 over the off-diagonal entries."""
    D = cdist(features, features)
    n = D.shape[0]
    if n < 2:
        return D
    mean = D[~np.eye(n, dtype=bool)].mean()
    return D / mean if mean > 0 else D


def gen_locations(sim: SimConfig, rng: Optional[np.random.Generator] = None) -> SimulatedLocations:
    """
    Lay out locations, regions and contextual distance matrices.

    Grid topology puts locations on a ceil(sqrt(n)) lattice in row-major order
    with 4-neighbourhood adjacency; regions are contiguous row-major blocks.
    """
    rng = rng or make_rng(sim.seed, spawn_key=(LOCATION_STREAM,))
    n = sim.num_locations
    if sim.topology == Topology.GRID:
        coordinates, edges = _grid(n)
    else:
        coordinates, edges = _random_geometric(n, rng)
    region_of = _contiguous_regions(coordinates, sim.num_regions)
    features = [rng.standard_normal((n, sim.feature_dim)) for _ in range(sim.num_distance_kernels)]
    table = LocationTable(region_of=region_of, adjacency=adjacency_from_edges(n, edges),
                          distance_matrices=tuple(scaled_distances(f) for f in features))
    logger.info(f"Generated {n} locations in {sim.num_regions} regions ({sim.topology.value}), "
                f"{len(edges)} adjacent pairs, {len(features)} distance matrices")
    return SimulatedLocations(table=table, coordinates=coordinates, features=features)


def _check_compatible(sim: SimConfig, config: ModelConfig, table: LocationTable) -> None:
    if sim.num_cohorts != config.num_cohorts:
        raise ConfigError(f"simulation has {sim.num_cohorts} cohorts but the model has {config.num_cohorts}",
                          key="simulation.num_cohorts")
    if sim.cohort_drift:
        shape = np.asarray(sim.cohort_drift, dtype=float).shape
        if shape != (config.num_diseases, config.num_predictors):
            raise ConfigError(f"cohort_drift must be {config.num_diseases} x {config.num_predictors}, got {shape}",
                              key="simulation.cohort_drift")
    needed = {spec.distance_index for spec in config.kernels if spec.distance_index is not None}
    if needed and max(needed) >= table.num_distance_matrices:
        raise ConfigError(f"model uses distance matrix {max(needed)} but only "
                          f"{table.num_distance_matrices} were generated", key="simulation.num_distance_kernels")


def _truth_state(sim: SimConfig, layout: ParameterLayout, rng: np.random.Generator) -> ParameterState:
    if sim.parameter_source == "prior":
        return sample_prior(layout, rng=rng)
    return load_truth(sim.parameter_source, layout)


def simulate_responses(X: np.ndarray, beta: np.ndarray, gamma: np.ndarray, epsilon: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """
    Bernoulli draws for respondents sharing one (location, cohort) coefficient block.

    Args:
        X: Design matrix (n, n_p)
        beta: Coefficients (n_d, n_p)
        gamma: Factor loadings (n_d,)
        epsilon: Respondent effects (n,)
        rng: Random generator

    Returns:
        Integer array (n, n_d)
    """
    eta = np.clip(X @ beta.T + np.outer(epsilon, gamma), -ETA_CLIP, ETA_CLIP)
    return (rng.uniform(size=eta.shape) < inverse_logit(eta)).astype(int)


def truth_record(state: ParameterState, layout: ParameterLayout, beta: np.ndarray,
                 sim: SimConfig) -> Dict[str, Any]:
    """Every latent value, keyed by the parameter layout."""
    vec = to_unconstrained(state, layout)
    return {
        "coordinate_names": layout.coordinate_names(),
        "unconstrained": vec,
        "blocks": {name: np.asarray(value) for name, value in layout.unpack(vec).items()},
        "constrained": {
            "B0": state.B0,
            "phi": state.phi,
            "psi": state.psi,
            "delta": state.delta,
            "lambda0": state.lambda0,
            "lambda1": state.lambda1,
            "gamma": state.gamma,
            "alpha_lambda0": state.alpha_lambda0,
            "alpha_lambda1": state.alpha_lambda1,
            "theta_region": state.theta_region,
            "theta_contiguity": state.theta_contiguity,
            "omega": state.omega,
            "epsilon": state.epsilon,
        },
        "beta": beta,
        "cohort_drift": sim.cohort_drift,
        "seed": sim.seed,
    }


def gen_dataset(sim: SimConfig, config: ModelConfig, table: LocationTable,
                state: Optional[ParameterState] = None) -> SimulatedDataset:
    """
    Draw a pseudo-panel survey from the generative model.

    Respondents are generated cell by cell over (location, cohort), each cell
    on its own derived random stream; ids and row order follow cell order.

    Args:
        sim: Simulation settings
        config: Model configuration (covariate roster, variant, priors)
        table: Location table
        state: Fixed parameters; drawn per ``sim.parameter_source`` when omitted

    Returns:
        SimulatedDataset
    """
    _check_compatible(sim, config, table)
    per_cell = sim.respondents_per_cell
    num_cells = table.num_locations * config.num_cohorts
    layout = ParameterLayout(config, table.num_locations, table.num_regions, num_cells * per_cell)
    if state is None:
        state = _truth_state(sim, layout, make_rng(sim.seed, spawn_key=(PARAMETER_STREAM,)))

    basis = KernelBasis(table) if layout.mask.kernels else None
    beta = state_coefficients(state, layout, basis).beta.copy()
    if sim.cohort_drift:
        drift = np.asarray(sim.cohort_drift, dtype=float)
        beta += drift[:, :, None, None] * np.arange(config.num_cohorts, dtype=float)

    records = []
    for cell in range(num_cells):
        l, c = divmod(cell, config.num_cohorts)
        rng = make_rng(sim.seed, spawn_key=(CELL_STREAM, cell))
        raws = [{
            "sex": float(rng.uniform() < 0.5),
            "edu": float(rng.uniform() < sim.edu_rate),
            "eco": float(rng.uniform() < sim.eco_rate),
            "smoke": float(rng.uniform() < sim.smoke_rate),
            "age": float(rng.uniform(config.min_age, config.max_age)),
        } for _ in range(per_cell)]
        X = np.stack([build_design(raw, config) for raw in raws])
        first = cell * per_cell
        Y = simulate_responses(X, beta[:, :, l, c], state.gamma, state.epsilon[first:first + per_cell], rng)
        for k, raw in enumerate(raws):
            records.append(RespondentRecord(id=f"r{first + k:06d}", location=l, cohort=c,
                                            responses=Y[k].tolist(), covariates=X[k].tolist(), raw=raw))

    logger.info(f"Generated {len(records)} respondents over {num_cells} location-cohort cells")
    return SimulatedDataset(records=records, state=state, layout=layout, beta=beta,
                            truth=truth_record(state, layout, beta, sim))


def write_truth(dataset: SimulatedDataset, directory: str) -> str:
    path = f"{directory}/{TRUTH_FILE}"
    save_json(dataset.truth, path)
    return path


def load_truth(path: str, layout: ParameterLayout) -> ParameterState:
    """Constrained state from a truth.json written for the same layout."""
    truth = load_json(path)
    if truth.get("coordinate_names") != layout.coordinate_names():
        raise ConfigError(f"truth file {path} does not match the parameter layout", key="truth")
    return from_unconstrained(np.asarray(truth["unconstrained"], dtype=float), layout)


def prior_predictive(sim: SimConfig, config: ModelConfig, table: LocationTable,
                     seeds: Sequence[int]) -> List[SimulatedDataset]:
    """One dataset per seed, each at a fresh prior draw."""
    return [gen_dataset(sim.model_copy(update={"seed": seed, "parameter_source": "prior"}), config, table)
            for seed in seeds]
