import math

import numpy as np
import pytest
from scipy import stats

from morbidity_model.config import SamplerConfig, SimConfig, toy_model_config
from morbidity_model.errors import ConfigError, MismatchedPoints, TailTooSmall, UnknownProfileField
from morbidity_model.eval import (
    ElpdReport,
    bayesian_p_values,
    compare,
    comparison_table,
    derived_summaries,
    exact_loo,
    latent_correlation,
    logsumexp,
    paired_difference,
    parse_profile,
    posterior_predictive_prevalence,
    psis_loo,
    psis_smooth,
    quantile_summary,
    waic,
)
from morbidity_model.eval.metrics import tail_length
from morbidity_model.model import ParameterState, PosteriorTarget, to_unconstrained
from morbidity_model.sampler import run
from morbidity_model.schemas import ModelVariant
from morbidity_model.simulate import gen_dataset, gen_locations, sbc_model_config
from morbidity_model.utils.rng import make_rng


@pytest.fixture
def random_loglik():
    rng = np.random.default_rng(0)
    return np.log(rng.uniform(0.2, 0.9, size=(400, 12)))


def _draw(target, **values):
    """One unconstrained draw from a neutral state with the given groups overridden."""
    state = ParameterState.zeros(target.layout)
    state.lambda0 = np.ones_like(state.lambda0)
    state.lambda1 = np.ones_like(state.lambda1)
    for name, value in values.items():
        setattr(state, name, np.broadcast_to(value, np.shape(getattr(state, name))).astype(float))
    return to_unconstrained(state, target.layout)[None, :]


def _report(per_point, kind="waic", digest=None):
    per_point = np.asarray(per_point, dtype=float)
    return ElpdReport(kind=kind, elpd=float(per_point.sum()), p_eff=0.0, se=0.0, per_point=per_point,
                      p_eff_per_point=np.zeros_like(per_point), num_draws=100, dataset_digest=digest)


class TestWaic:
    def test_constant_draws_have_no_penalty(self):
        report = waic(np.full((50, 3), math.log(0.5)))
        assert report.p_eff == 0.0
        assert report.elpd == pytest.approx(3.0 * math.log(0.5))
        assert report.ic == pytest.approx(-6.0 * math.log(0.5))

    def test_constant_point_among_varying_points(self, random_loglik):
        ll = random_loglik.copy()
        ll[:, 4] = -0.7
        report = waic(ll)
        assert report.p_eff_per_point[4] == 0.0
        assert np.all(np.delete(report.p_eff_per_point, 4) > 0.0)

    def test_two_draws_one_point(self):
        ll = np.log([[0.25], [0.75]])
        report = waic(ll)
        penalty = (math.log(3.0)) ** 2 / 2.0
        assert report.p_eff == pytest.approx(penalty)
        assert report.elpd == pytest.approx(math.log(0.5) - penalty)
        assert report.se == 0.0

    def test_matches_definition(self, random_loglik):
        report = waic(random_loglik)
        lppd = np.log(np.exp(random_loglik).mean(axis=0))
        penalty = random_loglik.var(axis=0, ddof=1)
        np.testing.assert_allclose(report.per_point, lppd - penalty)
        assert report.elpd == pytest.approx(report.per_point.sum())
        n = random_loglik.shape[1]
        assert report.se == pytest.approx(math.sqrt(n * np.var(report.per_point, ddof=1)))

    def test_single_point_vector(self):
        report = waic(np.log(np.full(10, 0.3)))
        assert report.num_points == 1


class TestPsis:
    def test_constant_ratios_are_not_smoothed(self):
        ll = np.full((200, 4), math.log(0.4))
        report = psis_loo(ll)
        np.testing.assert_array_equal(report.pareto_k, 0.0)
        assert report.elpd == pytest.approx(4.0 * math.log(0.4))
        np.testing.assert_allclose(report.p_eff_per_point, 0.0, atol=1e-12)

    def test_smoothing_keeps_order(self, random_loglik):
        log_weights, _ = psis_smooth(-random_loglik)
        for i in range(random_loglik.shape[1]):
            order = np.argsort(-random_loglik[:, i], kind="stable")
            assert np.all(np.diff(log_weights[order, i]) >= -1e-12)
        np.testing.assert_allclose(logsumexp(log_weights, axis=0), 0.0, atol=1e-12)

    def test_shape_estimate_on_pareto_tails(self):
        samples = stats.genpareto(c=0.3).rvs(size=(4000, 10), random_state=4)
        _, k_hat = psis_smooth(np.log1p(samples))
        assert abs(k_hat.mean() - 0.3) < 0.1

    def test_tail_length(self):
        assert tail_length(4000) == 190
        assert tail_length(100) == 20

    def test_too_few_draws(self):
        with pytest.raises(TailTooSmall):
            psis_loo(np.log(np.full((20, 2), 0.5)))

    def test_loo_is_below_lppd(self, random_loglik):
        report = psis_loo(random_loglik)
        lppd = logsumexp(random_loglik, axis=0) - np.log(random_loglik.shape[0])
        assert np.all(report.per_point <= lppd + 1e-12)
        assert report.p_eff == pytest.approx(np.sum(lppd - report.per_point))

    def test_report_round_trip(self, random_loglik):
        report = psis_loo(random_loglik, dataset_digest="abc")
        back = ElpdReport.from_dict(report.to_dict())
        assert back.kind == "psis_loo"
        assert back.dataset_digest == "abc"
        np.testing.assert_array_equal(back.pareto_k, report.pareto_k)
        assert report.to_dict()["k_counts"] == report.k_counts()


class TestCompare:
    def test_self_comparison(self):
        a = _report([-1.0, -2.0, -0.5])
        assert paired_difference(a, a) == (0.0, 0.0)

    def test_constant_shift(self):
        a = _report([-1.0, -2.0, -0.5, -1.5])
        b = _report(a.per_point + 0.25)
        delta, se = paired_difference(b, a)
        assert delta == pytest.approx(4 * 0.25)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_antisymmetric(self):
        a = _report([-1.0, -2.0, -0.5])
        b = _report([-1.2, -1.7, -0.4])
        d_ab, se_ab = paired_difference(a, b)
        d_ba, se_ba = paired_difference(b, a)
        assert d_ab == pytest.approx(-d_ba)
        assert se_ab == pytest.approx(se_ba)

    def test_ranking(self):
        worse = _report([-2.0, -2.0])
        best = _report([-1.0, -1.5])
        rows = compare([worse, best], names=["fe", "full_st"])
        assert [r.name for r in rows] == ["full_st", "fe"]
        assert rows[0].delta_elpd == 0.0
        assert rows[1].delta_elpd == pytest.approx(1.5)
        assert rows[1].delta_ic == pytest.approx(3.0)

    def test_mismatched_sizes(self):
        with pytest.raises(MismatchedPoints):
            compare([_report([-1.0]), _report([-1.0, -2.0])])

    def test_mismatched_datasets(self):
        with pytest.raises(MismatchedPoints):
            paired_difference(_report([-1.0], digest="a"), _report([-1.0], digest="b"))

    def test_table_uses_loo_reference(self):
        loo = [_report([-2.0, -2.0], "psis_loo"), _report([-1.0, -1.0], "psis_loo")]
        waics = [_report([-2.1, -2.0]), _report([-1.0, -1.1])]
        table = comparison_table(loo, waics, ["fe", "il"])
        assert [row["model"] for row in table] == ["il", "fe"]
        assert table[0]["delta_elpd_waic"] == 0.0
        assert table[1]["delta_waic"] == pytest.approx(4.0)


def test_logsumexp_shift_invariance():
    x = np.array([-1000.0, -1001.0, -1002.0])
    assert logsumexp(x) == pytest.approx(logsumexp(x + 1000.0) - 1000.0)
    assert np.isfinite(logsumexp(x))


class TestPredictiveCheck:
    def test_ties_count_half(self):
        replicated = np.array([[0.5], [0.5], [0.7], [0.3]])
        np.testing.assert_allclose(bayesian_p_values(replicated, np.array([0.5])), [0.5])

    def test_calibrated_at_truth(self, toy_sim):
        config = toy_model_config()
        locations = gen_locations(toy_sim)
        dataset = gen_dataset(toy_sim, config, locations.table)
        target = PosteriorTarget(dataset.records, locations.table, config)
        truth = to_unconstrained(dataset.state, target.layout)
        check = posterior_predictive_prevalence(target, np.tile(truth, (200, 1)), make_rng(1))
        assert check.observed.shape == (16, 3)
        assert check.calibrated_fraction() > 0.75
        assert len(check.rows()) == 16 * 3


class TestSummaries:
    def test_quantile_summary(self):
        summary = quantile_summary(np.arange(101.0))
        assert summary["mean"] == 50.0
        assert summary["q05"] == pytest.approx(5.0)
        assert summary["q95"] == pytest.approx(95.0)

    def test_latent_correlation(self):
        corr = latent_correlation(np.array([1.0, 2.0]))
        np.testing.assert_allclose(np.diag(corr), 1.0)
        expected = 2.0 / math.sqrt((1.0 + math.pi ** 2 / 3.0) * (4.0 + math.pi ** 2 / 3.0))
        assert corr[0, 1] == pytest.approx(expected)
        np.testing.assert_array_equal(latent_correlation(np.zeros(2)), np.eye(2))

    def test_comorbidity_outer_product(self, gradient_target):
        draws = _draw(gradient_target, gamma=[1.0, 2.0])
        table = derived_summaries(gradient_target, draws, "comorbidity")
        cell = next(row for row in table.rows if row["disease_j"] == 0 and row["disease_k"] == 1)
        assert cell["mean"] == pytest.approx(2.0)

    def test_fixed_effects_odds_ratio_is_uniform(self, gradient_data, gradient_config):
        records, table = gradient_data
        target = PosteriorTarget(records, table, gradient_config.model_copy(update={"variant": ModelVariant.FE}))
        draws = np.random.default_rng(5).normal(scale=0.5, size=(20, target.layout.dim))
        summary = derived_summaries(target, draws, "or", predictor="sex")
        means = [row["mean"] for row in summary.rows]
        assert len(means) == table.num_locations
        np.testing.assert_allclose(means, means[0])

    def test_cohort_odds_ratio_without_temporal_scale(self, gradient_target):
        draws = _draw(gradient_target, phi=1.0, lambda0=0.5, lambda1=1e-300, z0=1.0, z1=1.0)
        summary = derived_summaries(gradient_target, draws, "cohort-or", predictor="sex")
        np.testing.assert_allclose([row["mean"] for row in summary.rows], 1.0)

    def test_curve_rows(self, gradient_target):
        draws = np.zeros((3, gradient_target.layout.dim))
        summary = derived_summaries(gradient_target, draws, "curve", profile={"sex": "1", "location": "2"})
        assert {row["location"] for row in summary.rows} == {2}
        assert len(summary.rows) == 12 * 2
        np.testing.assert_allclose([row["mean"] for row in summary.rows], 0.5)

    def test_conditional_curve_differs(self, gradient_target):
        draws = _draw(gradient_target, phi=1.0, psi=1.0, gamma=3.0)
        marginal = derived_summaries(gradient_target, draws, "curve")
        conditional = derived_summaries(gradient_target, draws, "curve", conditional=True)
        assert marginal.rows[0]["mean"] < conditional.rows[0]["mean"]

    def test_unknown_profile_field(self, gradient_config):
        with pytest.raises(UnknownProfileField):
            parse_profile({"income": "3"}, gradient_config, 4)

    def test_profile_out_of_range(self, gradient_config):
        with pytest.raises(ConfigError):
            parse_profile({"location": "9"}, gradient_config, 4)
        with pytest.raises(ConfigError):
            parse_profile({"sex": "2"}, gradient_config, 4)

    def test_unknown_quantity(self, gradient_target):
        with pytest.raises(ConfigError):
            derived_summaries(gradient_target, np.zeros((1, gradient_target.layout.dim)), "hazard")


@pytest.mark.slow
class TestAgainstRefits:
    def test_psis_matches_exact_loo(self):
        config = sbc_model_config()
        sim = SimConfig(num_locations=2, num_regions=1, num_cohorts=1, respondents_per_cell=20,
                        num_distance_kernels=1, seed=5)
        table = gen_locations(sim).table
        records = gen_dataset(sim, config, table).records
        sampler = SamplerConfig(chains=2, warmup=300, sampling=500, seed=9)

        fit = run(PosteriorTarget(records, table, config), sampler)
        loo = psis_loo(fit.flat_pointwise())
        exact = exact_loo(records, table, config, sampler)
        assert len(records) == 40
        assert abs(loo.elpd - exact.elpd) <= 0.3
        assert np.all(loo.pareto_k < 0.7)
        waic_report = waic(fit.flat_pointwise())
        assert abs(waic_report.elpd - loo.elpd) <= max(waic_report.se, loo.se)

    def test_spatio_temporal_model_beats_fixed_effects(self, toy_sim):
        config = toy_model_config()
        drift = np.zeros((config.num_diseases, config.num_predictors))
        drift[:, 0] = -0.5
        sim = toy_sim.model_copy(update={"cohort_drift": drift.tolist()})
        table = gen_locations(sim).table
        records = gen_dataset(sim, config, table).records
        sampler = SamplerConfig(chains=2, warmup=300, sampling=300, max_depth=8, seed=4)

        reports = []
        for variant in (ModelVariant.FE, ModelVariant.FULL_ST):
            target = PosteriorTarget(records, table, config.model_copy(update={"variant": variant}))
            reports.append(psis_loo(run(target, sampler).flat_pointwise()))
        rows = compare(reports, names=["fe", "full_st"])
        assert rows[0].name == "full_st"
        assert rows[1].delta_elpd > 0
