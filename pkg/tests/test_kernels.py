import math

import numpy as np
import pytest

from morbidity_model.config import SimConfig
from morbidity_model.errors import ConstraintViolation, NotPositiveDefinite
from morbidity_model.ingest.locations import LocationTable
from morbidity_model.kernels import (
    KernelBasis,
    KernelParams,
    cholesky_psd,
    contiguity_kernel,
    distance_kernel,
    kernel_matrix,
    mixture_covariance,
    partition_kernel,
)
from morbidity_model.schemas import KernelKind, KernelSpec
from morbidity_model.simulate import gen_locations


@pytest.fixture
def star_table():
    """Location 0 neighbours 1..4; two regions."""
    return LocationTable(region_of=np.array([0, 0, 0, 1, 1]),
                         adjacency=((1, 2, 3, 4), (0,), (0,), (0,), (0,)))


def test_partition_kernel(star_table):
    theta = np.array([0.4, 0.7])
    assert partition_kernel(2, 2, star_table, theta) == 1.0
    assert partition_kernel(0, 2, star_table, theta) == pytest.approx(0.4)
    assert partition_kernel(3, 4, star_table, theta) == pytest.approx(0.7)
    assert partition_kernel(0, 3, star_table, theta) == 0.0


def test_contiguity_kernel(star_table):
    assert contiguity_kernel(1, 1, star_table, 0.5) == 1.0
    assert contiguity_kernel(0, 1, star_table, 0.5) == pytest.approx(0.25)
    assert contiguity_kernel(1, 2, star_table, 0.5) == 0.0


def test_distance_kernel():
    D = np.array([[0.0, math.log(2.0), 1e6], [math.log(2.0), 0.0, 1.0], [1e6, 1.0, 0.0]])
    assert distance_kernel(0, 0, D) == 1.0
    assert distance_kernel(0, 1, D) == pytest.approx(0.5)
    assert distance_kernel(0, 2, D) == 0.0


def test_single_region_partition_is_compound_symmetric():
    table = LocationTable(region_of=np.zeros(3, dtype=int), adjacency=((1,), (0, 2), (1,)))
    K = kernel_matrix(KernelSpec(kind=KernelKind.PARTITION), KernelParams(theta_region=np.array([0.4])), table)
    expected = np.full((3, 3), 0.4)
    np.fill_diagonal(expected, 1.0)
    np.testing.assert_allclose(K, expected)


def test_contiguity_on_two_cycle(two_location_table):
    K = kernel_matrix(KernelSpec(kind=KernelKind.CONTIGUITY), KernelParams(theta_contiguity=0.3),
                      two_location_table)
    np.testing.assert_allclose(K, [[1.0, 0.3], [0.3, 1.0]])


def test_zero_distance_gives_all_ones():
    table = LocationTable(region_of=np.zeros(3, dtype=int), adjacency=((), (), ()),
                          distance_matrices=(np.zeros((3, 3)),))
    K = kernel_matrix(KernelSpec(kind=KernelKind.DISTANCE, distance_index=0), KernelParams(), table)
    np.testing.assert_allclose(K, np.ones((3, 3)))


def test_basis_matches_pointwise_kernels(star_table):
    basis = KernelBasis(star_table)
    theta = np.array([0.2, 0.9])
    K = basis.partition(theta)
    C = basis.contiguity(0.6)
    for l in range(5):
        for k in range(5):
            assert K[l, k] == pytest.approx(partition_kernel(l, k, star_table, theta))
            assert C[l, k] == pytest.approx(contiguity_kernel(l, k, star_table, 0.6))


def test_theta_outside_unit_interval():
    with pytest.raises(ConstraintViolation):
        KernelParams(theta_region=np.array([0.5, 1.0]))


class TestMixture:
    def test_vertex_weight_selects_one_kernel(self):
        K1 = np.array([[1.0, 0.3], [0.3, 1.0]])
        model = mixture_covariance([1.0, 0.0], [K1, np.eye(2)])
        np.testing.assert_allclose(model.mixture, K1)

    def test_identical_kernels(self):
        K = np.array([[1.0, 0.6], [0.6, 1.0]])
        model = mixture_covariance([0.5, 0.5], [K, K])
        np.testing.assert_allclose(model.mixture, K)

    def test_identity_and_ones(self):
        model = mixture_covariance([0.5, 0.5], [np.eye(2), np.ones((2, 2))])
        np.testing.assert_allclose(model.mixture, [[1.0, 0.5], [0.5, 1.0]])
        assert model.reconstruction_error() < 1e-12

    def test_unit_diagonal_for_random_weights(self, star_table):
        basis = KernelBasis(star_table)
        rng = np.random.default_rng(1)
        for _ in range(10):
            w = rng.dirichlet(np.ones(2))
            model = mixture_covariance(w, [basis.partition(np.array([0.3, 0.8])), basis.contiguity(0.9)])
            np.testing.assert_allclose(np.diag(model.mixture), 1.0, atol=1e-12)

    def test_weights_off_simplex(self):
        with pytest.raises(ConstraintViolation):
            mixture_covariance([0.7, 0.7], [np.eye(2), np.eye(2)])


class TestCholesky:
    def test_identity(self):
        L, jitter = cholesky_psd(np.eye(3))
        np.testing.assert_allclose(L, np.eye(3))
        assert jitter == 0.0

    def test_two_by_two(self):
        L, jitter = cholesky_psd(np.array([[1.0, 0.5], [0.5, 1.0]]))
        np.testing.assert_allclose(L, [[1.0, 0.0], [0.5, math.sqrt(0.75)]])
        assert jitter == 0.0

    def test_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_singular_matrix_gets_jitter(self):
        L, jitter = cholesky_psd(np.ones((3, 3)))
        assert jitter > 0
        np.testing.assert_allclose(L @ L.T, np.ones((3, 3)) + jitter * np.eye(3), atol=1e-12)


def test_random_mixtures_factor_or_fail_cleanly():
    table = gen_locations(SimConfig(num_locations=16, num_regions=4, num_distance_kernels=2, seed=8)).table
    basis = KernelBasis(table)
    distances = [kernel_matrix(KernelSpec(kind=KernelKind.DISTANCE, distance_index=m), KernelParams(), table)
                 for m in range(2)]
    rng = np.random.default_rng(12)
    for _ in range(100):
        kernels = [basis.partition(rng.uniform(0.0, 0.99, size=4)), basis.contiguity(rng.uniform(0.0, 0.99))]
        kernels += distances
        weights = rng.dirichlet(np.full(len(kernels), 0.5))
        try:
            model = mixture_covariance(weights, kernels)
        except NotPositiveDefinite:
            continue
        assert model.reconstruction_error() <= 1e-8
        np.testing.assert_allclose(np.diag(model.mixture), 1.0, atol=1e-12)
