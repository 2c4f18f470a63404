"""Shared fixtures: small location tables, toy configurations and simulated datasets."""

import numpy as np
import pytest

from morbidity_model.config import SamplerConfig, SimConfig, toy_model_config
from morbidity_model.ingest.locations import LocationTable
from morbidity_model.model.posterior import PosteriorTarget
from morbidity_model.simulate import gen_dataset, gen_locations


@pytest.fixture
def two_location_table():
    return LocationTable(region_of=np.array([0, 0]), adjacency=((1,), (0,)),
                         distance_matrices=(np.array([[0.0, 1.0], [1.0, 0.0]]),))


@pytest.fixture
def gradient_config():
    """n_d=2, n_p=3, n_f=3 (partition, contiguity, one distance)."""
    return toy_model_config(num_diseases=2, covariates=["intercept", "sex", "age"], num_cohorts=2)


@pytest.fixture
def gradient_sim(gradient_config):
    return SimConfig(num_locations=4, num_regions=2, num_cohorts=gradient_config.num_cohorts,
                     respondents_per_cell=4, num_distance_kernels=1, seed=3)


@pytest.fixture
def gradient_data(gradient_sim, gradient_config):
    """32 respondents over a 2x2 grid."""
    locations = gen_locations(gradient_sim)
    dataset = gen_dataset(gradient_sim, gradient_config, locations.table)
    return dataset.records, locations.table


@pytest.fixture
def gradient_target(gradient_data, gradient_config):
    records, table = gradient_data
    return PosteriorTarget(records, table, gradient_config)


@pytest.fixture
def toy_sim():
    return SimConfig(num_locations=16, num_regions=4, num_cohorts=5, respondents_per_cell=6,
                     num_distance_kernels=1, seed=11)


@pytest.fixture
def quick_sampler():
    return SamplerConfig(chains=2, warmup=150, sampling=100, max_depth=6, seed=5)


class StandardNormal:
    """Isotropic Gaussian log density with its gradient, scaled per coordinate."""

    def __init__(self, scales):
        self.scales = np.asarray(scales, dtype=float)
        self.dim = self.scales.size

    def __call__(self, x):
        z = x / self.scales
        return -0.5 * float(z @ z), -z / self.scales


@pytest.fixture
def standard_normal():
    return StandardNormal(np.ones(2))
