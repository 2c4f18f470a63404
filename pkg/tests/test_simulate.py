import numpy as np
import pytest

from morbidity_model.config import SamplerConfig, SimConfig, toy_model_config
from morbidity_model.errors import ConfigError, InsufficientCrossing
from morbidity_model.model import ParameterLayout, ParameterState, PosteriorTarget, from_unconstrained
from morbidity_model.sampler import run
from morbidity_model.schemas import ModelVariant, RespondentRecord, Topology
from morbidity_model.simulate import (
    age_slopes,
    bias_demo,
    drift_matrix,
    gen_dataset,
    gen_locations,
    load_truth,
    prior_predictive,
    rank_statistic,
    run_sbc,
    scaled_distances,
    uniformity_test,
    write_truth,
)


def _fixed_state(config, table, num_respondents, psi):
    layout = ParameterLayout(config, table.num_locations, table.num_regions, num_respondents)
    state = ParameterState.zeros(layout)
    state.phi = np.zeros_like(state.phi)
    state.phi[:, 0] = 1.0
    state.psi = np.zeros_like(state.psi)
    state.psi[0] = psi
    return state


class TestLocations:
    def test_two_by_two_grid(self):
        locations = gen_locations(SimConfig(num_locations=4, num_regions=2, num_distance_kernels=1))
        table = locations.table
        np.testing.assert_array_equal(table.degree, [2, 2, 2, 2])
        np.testing.assert_array_equal(table.region_of, [0, 0, 1, 1])
        assert table.edges() == [(0, 1), (0, 2), (1, 3), (2, 3)]

    def test_distances_have_unit_mean(self):
        D = scaled_distances(np.random.default_rng(0).standard_normal((6, 2)))
        off_diagonal = D[~np.eye(6, dtype=bool)]
        assert off_diagonal.mean() == pytest.approx(1.0)
        np.testing.assert_array_equal(np.diag(D), 0.0)
        np.testing.assert_allclose(D, D.T)

    def test_random_geometric_is_connected_to_someone(self):
        table = gen_locations(SimConfig(num_locations=12, num_regions=3, topology=Topology.RANDOM_GEOMETRIC,
                                        num_distance_kernels=2)).table
        assert np.all(table.degree >= 1)
        assert table.num_distance_matrices == 2
        assert table.num_regions == 3


class TestDataset:
    def test_cell_layout(self, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        dataset = gen_dataset(gradient_sim, gradient_config, table)
        assert len(dataset.records) == 4 * 2 * 4
        assert dataset.records[0].id == "r000000"
        assert [(r.location, r.cohort) for r in dataset.records[:5:4]] == [(0, 0), (0, 1)]
        assert all(51.0 <= r.raw["age"] <= 62.0 for r in dataset.records)

    def test_same_seed_same_data(self, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        first = gen_dataset(gradient_sim, gradient_config, table)
        second = gen_dataset(gradient_sim, gradient_config, table)
        assert first.records == second.records
        other = gen_dataset(gradient_sim.model_copy(update={"seed": 4}), gradient_config, table)
        assert other.records != first.records

    def test_saturated_predictor_gives_no_disease(self, gradient_sim, gradient_config):
        config = gradient_config.model_copy(update={"variant": ModelVariant.FE})
        table = gen_locations(gradient_sim).table
        state = _fixed_state(config, table, 32, [-60.0, 0.0, 0.0])
        dataset = gen_dataset(gradient_sim, config, table, state=state)
        assert all(r.responses == [0, 0] for r in dataset.records)

    def test_cohort_mismatch(self, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        with pytest.raises(ConfigError):
            gen_dataset(gradient_sim.model_copy(update={"num_cohorts": 3}), gradient_config, table)

    def test_drift_shape_mismatch(self, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        with pytest.raises(ConfigError):
            gen_dataset(gradient_sim.model_copy(update={"cohort_drift": [[0.1]]}), gradient_config, table)

    def test_drift_shifts_later_cohorts(self, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        drift = drift_matrix(gradient_config, -0.5, disease=1)
        plain = gen_dataset(gradient_sim, gradient_config, table)
        drifted = gen_dataset(gradient_sim.model_copy(update={"cohort_drift": drift}), gradient_config, table)
        np.testing.assert_allclose(drifted.beta[1, 0, :, 1] - plain.beta[1, 0, :, 1], -0.5)
        np.testing.assert_allclose(drifted.beta[:, :, :, 0], plain.beta[:, :, :, 0])

    def test_truth_file_round_trip(self, tmp_path, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        dataset = gen_dataset(gradient_sim, gradient_config, table)
        path = write_truth(dataset, str(tmp_path))
        state = load_truth(path, dataset.layout)
        np.testing.assert_allclose(state.B0, dataset.state.B0, atol=1e-12)
        np.testing.assert_allclose(state.gamma, dataset.state.gamma, atol=1e-12)

    def test_truth_file_for_other_layout(self, tmp_path, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        dataset = gen_dataset(gradient_sim, gradient_config, table)
        path = write_truth(dataset, str(tmp_path))
        other = ParameterLayout(gradient_config.model_copy(update={"variant": ModelVariant.FE}), 4, 2, 32)
        with pytest.raises(ConfigError):
            load_truth(path, other)

    def test_prior_predictive_draws_fresh_parameters(self, gradient_sim, gradient_config):
        table = gen_locations(gradient_sim).table
        a, b = prior_predictive(gradient_sim, gradient_config, table, seeds=[1, 2])
        assert not np.allclose(a.state.B0, b.state.B0)


class TestCohortBias:
    @pytest.fixture
    def bias_config(self):
        return toy_model_config(num_diseases=1, covariates=["intercept", "sex", "age"], num_cohorts=10,
                                variant=ModelVariant.FE)

    @pytest.fixture
    def bias_sim(self):
        return SimConfig(num_locations=4, num_regions=1, num_cohorts=10, respondents_per_cell=400,
                         num_distance_kernels=1, seed=3)

    def _run(self, bias_sim, bias_config, drift):
        table = gen_locations(bias_sim).table
        state = _fixed_state(bias_config, table, 4 * 10 * 400, [-1.0, 0.3, 1.0])
        sim = bias_sim.model_copy(update={"cohort_drift": drift_matrix(bias_config, drift)})
        return bias_demo(sim, bias_config, state=state)

    @pytest.mark.slow
    def test_no_drift_no_bias(self, bias_sim, bias_config):
        result = self._run(bias_sim, bias_config, 0.0)
        assert abs(result.difference) < 2.0 * result.combined_se

    @pytest.mark.slow
    def test_healthier_later_cohorts_steepen_survey_year_curves(self, bias_sim, bias_config):
        result = self._run(bias_sim, bias_config, -0.4)
        assert result.by_survey_year.slope > result.by_cohort.slope
        assert result.difference > 2.0 * result.combined_se

    @pytest.mark.slow
    def test_flipped_drift_reverses_bias(self, bias_sim, bias_config):
        result = self._run(bias_sim, bias_config, 0.4)
        assert result.by_survey_year.slope < result.by_cohort.slope

    def test_single_cohort(self, bias_config):
        records = [RespondentRecord(id=str(i), location=0, cohort=0, responses=[i % 2],
                                    covariates=[1.0, 0.0, 0.5], raw={"age": 56.5}) for i in range(4)]
        with pytest.raises(InsufficientCrossing):
            age_slopes(records, bias_config)

    def test_cohorts_never_share_a_survey_year(self, bias_config):
        records = [RespondentRecord(id="a", location=0, cohort=0, responses=[1], covariates=[1.0, 0.0, 0.0],
                                    raw={"age": 51.2}),
                   RespondentRecord(id="b", location=0, cohort=1, responses=[0], covariates=[1.0, 0.0, 0.8],
                                    raw={"age": 60.0})]
        with pytest.raises(InsufficientCrossing):
            age_slopes(records, bias_config)


class TestCalibration:
    def test_rank_statistic(self):
        draws = np.array([[1.0, 5.0], [2.0, 6.0], [3.0, 7.0]])
        np.testing.assert_array_equal(rank_statistic(draws, np.array([2.5, 0.0])), [2, 0])

    def test_uniform_ranks_pass(self):
        ranks = np.tile(np.arange(20), 10)
        _, p_value = uniformity_test(ranks, num_draws=19, bins=10)
        assert p_value > 0.99

    def test_piled_up_ranks_fail(self):
        _, p_value = uniformity_test(np.zeros(200, dtype=int), num_draws=19, bins=10)
        assert p_value < 1e-6

    @pytest.mark.slow
    def test_fixed_effects_posterior_is_calibrated(self):
        sim = SimConfig(num_locations=4, num_regions=1, respondents_per_cell=30, num_distance_kernels=1, seed=1)
        sampler = SamplerConfig(chains=1, warmup=200, sampling=200, max_depth=6, seed=2)
        result = run_sbc(sim, sampler, replicates=30, thin=10)
        assert result.ranks.shape == (30, 3)
        assert result.num_draws == 20
        assert result.uniform(alpha=0.001)


@pytest.mark.slow
def test_national_coefficients_are_recovered(gradient_config):
    sim = SimConfig(num_locations=4, num_regions=2, num_cohorts=2, respondents_per_cell=100,
                    num_distance_kernels=1, seed=8)
    table = gen_locations(sim).table
    dataset = gen_dataset(sim, gradient_config, table)
    target = PosteriorTarget(dataset.records, table, gradient_config)
    fit = run(target, SamplerConfig(chains=2, warmup=300, sampling=300, max_depth=8, seed=6))

    B0 = np.stack([from_unconstrained(vec, target.layout).B0 for vec in fit.flat_draws()])
    lower, upper = np.quantile(B0, [0.05, 0.95], axis=0)
    covered = (lower <= dataset.state.B0) & (dataset.state.B0 <= upper)
    assert covered.shape == (2, 3)
    assert covered.sum() >= 4
