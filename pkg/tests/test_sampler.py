import numpy as np
import pytest

from morbidity_model.config import SamplerConfig
from morbidity_model.errors import InitializationFailed, InsufficientDraws, NonFiniteDensity
from morbidity_model.sampler import (
    diagnostics,
    ess_bulk,
    leapfrog,
    nuts_transition,
    run,
    run_chain,
    split_rhat,
    window_ends,
)
from morbidity_model.sampler.nuts import Point
from morbidity_model.utils.rng import make_rng
from tests.conftest import StandardNormal


class WithPointwise(StandardNormal):
    def pointwise(self, x):
        return -0.5 * (x / self.scales) ** 2


class Nowhere:
    dim = 2

    def __call__(self, x):
        return -np.inf, np.zeros(2)


class TestLeapfrog:
    @staticmethod
    def _integrate(step, x0=1.0, r0=0.0):
        target = StandardNormal(np.ones(1))
        logp, grad = target(np.array([x0]))
        point = Point(theta=np.array([x0]), r=np.array([r0]), logp=logp, grad=grad)
        for _ in range(int(round(1.0 / step))):
            point = leapfrog(point, step, np.ones(1), target)
        h_end = -point.logp + 0.5 * float(point.r @ point.r)
        return h_end - (0.5 * x0 ** 2 + 0.5 * r0 ** 2), float(point.theta[0])

    def test_energy_error_matches_shadow_hamiltonian(self):
        step = 0.1
        error, x_end = self._integrate(step)
        assert error == pytest.approx(step ** 2 / 8.0 * (x_end ** 2 - 1.0), rel=1e-8)

    def test_energy_error_is_second_order(self):
        steps = np.array([0.1, 0.05, 0.025, 0.0125])
        errors = np.array([abs(self._integrate(h)[0]) for h in steps])
        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        assert 1.8 <= slope <= 2.2

    def test_negative_step_reverses(self):
        target = StandardNormal(np.ones(2))
        logp, grad = target(np.array([0.3, -1.0]))
        start = Point(theta=np.array([0.3, -1.0]), r=np.array([0.5, 0.2]), logp=logp, grad=grad)
        forward = leapfrog(start, 0.2, np.ones(2), target)
        back = leapfrog(forward, -0.2, np.ones(2), target)
        np.testing.assert_allclose(back.theta, start.theta, atol=1e-12)
        np.testing.assert_allclose(back.r, start.r, atol=1e-12)


class TestTransition:
    def test_non_finite_start(self, standard_normal):
        with pytest.raises(NonFiniteDensity):
            nuts_transition(np.zeros(2), make_rng(0), 0.5, np.ones(2), standard_normal,
                            current=(-np.inf, np.zeros(2)))

    def test_transition_stats(self, standard_normal):
        position, stats = nuts_transition(np.zeros(2), make_rng(1), 0.5, np.ones(2), standard_normal, max_depth=4)
        assert position.shape == (2,)
        assert 1 <= stats.tree_depth <= 4
        assert stats.n_leapfrog <= 2 ** 4
        assert 0.0 <= stats.accept_stat <= 1.0
        assert not stats.divergent

    def test_initialization_gives_up(self):
        with pytest.raises(InitializationFailed):
            run_chain(Nowhere(), SamplerConfig(chains=1, warmup=10, sampling=10), 0, make_rng(0))


class TestRun:
    @pytest.mark.slow
    def test_standard_normal_moments(self, standard_normal):
        fit = run(standard_normal, SamplerConfig(chains=4, warmup=500, sampling=1000, seed=1))
        draws = fit.flat_draws()
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=0.1)
        np.testing.assert_allclose(draws.var(axis=0), 1.0, atol=0.15)
        assert fit.diagnostics.max_rhat() < 1.01

    @pytest.mark.slow
    def test_metric_learns_scales(self):
        config = SamplerConfig(chains=1, warmup=1000, sampling=200, seed=2)
        chain = run_chain(StandardNormal([1.0, 10.0]), config, 0, make_rng(2))
        ratio = chain.inv_metric[1] / chain.inv_metric[0]
        assert 100.0 / 3.0 < ratio < 300.0

    def test_same_seed_same_draws(self, standard_normal, quick_sampler):
        a = run(standard_normal, quick_sampler)
        b = run(standard_normal, quick_sampler)
        np.testing.assert_array_equal(a.draws, b.draws)
        c = run(standard_normal, quick_sampler.model_copy(update={"seed": quick_sampler.seed + 1}))
        assert not np.array_equal(a.draws, c.draws)

    @pytest.mark.slow
    def test_workers_do_not_change_draws(self, standard_normal, quick_sampler):
        serial = run(standard_normal, quick_sampler)
        parallel = run(standard_normal, quick_sampler.model_copy(update={"workers": 2}))
        np.testing.assert_array_equal(serial.draws, parallel.draws)

    def test_pointwise_is_collected(self, quick_sampler):
        fit = run(WithPointwise(np.ones(3)), quick_sampler, names=["a", "b", "c"])
        assert fit.flat_pointwise().shape == (quick_sampler.chains * quick_sampler.sampling, 3)
        assert fit.draws.shape == (quick_sampler.chains, quick_sampler.sampling, 3)
        assert fit.names == ["a", "b", "c"]
        assert len(fit.divergence_counts()) == quick_sampler.chains


class TestDiagnostics:
    def test_iid_chains_converge(self):
        draws = np.random.default_rng(0).standard_normal((4, 500))
        assert 0.99 <= split_rhat(draws) <= 1.01

    def test_shifted_chain_is_flagged(self):
        draws = np.random.default_rng(1).standard_normal((4, 500))
        draws[0] += 3.0
        assert split_rhat(draws) > 1.1

    def test_constant_parameter(self):
        rng = np.random.default_rng(2)
        draws = np.stack([rng.standard_normal((4, 100)), np.full((4, 100), 3.0)], axis=-1)
        diag = diagnostics(draws)
        assert diag.rhat_defined.tolist() == [True, False]
        assert np.isnan(diag.rhat[1])
        assert diag.max_rhat() == diag.rhat[0]

    def test_repeated_draws_lower_ess(self):
        rng = np.random.default_rng(3)
        iid = rng.standard_normal((4, 500))
        sticky = np.repeat(rng.standard_normal((4, 250)), 2, axis=1)
        assert ess_bulk(sticky) < ess_bulk(iid)
        assert ess_bulk(iid) > 1000

    def test_single_chain_has_no_rhat(self):
        diag = diagnostics(np.random.default_rng(4).standard_normal((1, 100, 2)))
        assert not diag.rhat_defined.any()
        assert np.all(np.isfinite(diag.ess_bulk))

    def test_insufficient_draws(self):
        with pytest.raises(InsufficientDraws):
            diagnostics(np.zeros((2, 7, 1)))


class TestWindows:
    def test_doubling_windows(self):
        assert window_ends(1000) == [99, 149, 249, 449, 949]

    def test_minimal_windowed_warmup(self):
        assert window_ends(150) == [99]

    def test_short_warmup_has_no_windows(self):
        assert window_ends(100) == []
