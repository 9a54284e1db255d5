"""Evolutionary-strategies gradient estimation and prior training."""

import numpy as np
import pytest

from gaitcert.environments import EnvDistributionParams, sample_environment
from gaitcert.errors import InvalidParameterError
from gaitcert.es import ESConfig, estimate_gradient, train_prior
from gaitcert.policy import PolicyDistribution
from gaitcert.rng import make_stream
from gaitcert.simulate import SimConfig


def quadratic_cost(dim):
    def cost(w, env):
        return float(np.dot(w, w)) / dim
    return cost


def tiny_cfg(pair_count=1, env_count=1, minibatch=1):
    return ESConfig(env_count=env_count, minibatch=minibatch, pair_count=pair_count,
                    lr_mean=0.1, lr_logvar=0.01, epochs=1, seed=0)


class TestEstimateGradient:
    def test_constant_cost_gradient_is_exactly_zero(self):
        # antithetic pairs cancel offsets: 0.5 * (c - c) = 0 per pair
        dist = PolicyDistribution.standard(50)
        grad_mean, _, mean_cost = estimate_gradient(
            dist, list(range(16)), tiny_cfg(pair_count=4),
            make_stream(1, 0, 0), cost_fn=lambda w, env: 0.37,
        )
        np.testing.assert_array_equal(grad_mean, 0.0)
        assert mean_cost == pytest.approx(0.37)

    def test_offset_invariance_of_mean_gradient(self):
        dist = PolicyDistribution.standard(20)
        cost = quadratic_cost(20)
        g1, _, _ = estimate_gradient(dist, [0, 1], tiny_cfg(pair_count=8),
                                     make_stream(2, 0, 0), cost_fn=cost)
        g2, _, _ = estimate_gradient(dist, [0, 1], tiny_cfg(pair_count=8),
                                     make_stream(2, 0, 0),
                                     cost_fn=lambda w, e: cost(w, e) + 5.0)
        np.testing.assert_array_equal(g1, g2)

    def test_quadratic_gradient_within_five_percent(self):
        # smoothed quadratic |w|^2/d at sigma = 1: grad_mean -> 2 mu / d
        dim = 8
        rng = np.random.default_rng(3)
        mu = rng.normal(size=dim)
        mu *= 1.0 / np.linalg.norm(mu)
        dist = PolicyDistribution(mean=mu, log_var=np.zeros(dim))
        grad, _, _ = estimate_gradient(
            dist, list(range(10_000)), tiny_cfg(pair_count=1),
            make_stream(4, 0, 0), cost_fn=quadratic_cost(dim),
        )
        analytic = 2.0 * mu / dim
        rel_err = np.linalg.norm(grad - analytic) / np.linalg.norm(analytic)
        assert rel_err < 0.05

    def test_monte_carlo_rate(self):
        # error should shrink like 1/sqrt(n): ratio ~ sqrt(10) within 2x
        dim = 8
        rng = np.random.default_rng(5)
        mu = rng.normal(size=dim)
        mu *= 1.0 / np.linalg.norm(mu)
        dist = PolicyDistribution(mean=mu, log_var=np.zeros(dim))
        analytic = 2.0 * mu / dim
        errs = {}
        for n in (1000, 10_000):
            grad, _, _ = estimate_gradient(
                dist, list(range(n)), tiny_cfg(pair_count=1),
                make_stream(6, 0, 0), cost_fn=quadratic_cost(dim),
            )
            errs[n] = np.linalg.norm(grad - analytic)
        ratio = errs[1000] / errs[10_000]
        assert np.sqrt(10) / 2 < ratio < 2 * np.sqrt(10)

    def test_sigma_gradient_direction_on_quadratic(self):
        # for |w|^2/d the sigma gradient is 2 sigma / d > 0 (shrink sigma)
        dim = 6
        dist = PolicyDistribution.standard(dim)
        _, grad_sigma, _ = estimate_gradient(
            dist, list(range(20_000)), tiny_cfg(pair_count=1),
            make_stream(7, 0, 0), cost_fn=quadratic_cost(dim),
        )
        np.testing.assert_allclose(grad_sigma, 2.0 / dim, rtol=0.3)

    def test_requires_exactly_one_cost_callable(self):
        dist = PolicyDistribution.standard(4)
        with pytest.raises(InvalidParameterError):
            estimate_gradient(dist, [0], tiny_cfg(), make_stream(0, 0, 0))
        with pytest.raises(InvalidParameterError):
            estimate_gradient(dist, [0], tiny_cfg(), make_stream(0, 0, 0),
                              cost_fn=lambda w, e: 0.0,
                              batch_cost_fn=lambda jobs: [0.0] * len(jobs))

    def test_empty_minibatch_rejected(self):
        with pytest.raises(InvalidParameterError):
            estimate_gradient(PolicyDistribution.standard(4), [], tiny_cfg(),
                              make_stream(0, 0, 0), cost_fn=lambda w, e: 0.0)


class TestDescentOnSyntheticCost:
    def test_es_contracts_the_mean_on_a_quadratic(self):
        # replicate train_prior's update rule against the synthetic cost
        dim = 5
        rng = np.random.default_rng(11)
        mu = rng.normal(size=dim)
        mu *= 1.0 / np.linalg.norm(mu)
        dist = PolicyDistribution(mean=mu.copy(), log_var=np.zeros(dim))
        cfg = ESConfig(env_count=8, minibatch=8, pair_count=4,
                       lr_mean=0.1, lr_logvar=0.01, epochs=1, seed=0)
        stream = make_stream(12, 0, 0)
        for _ in range(200):
            grad_mean, grad_sigma, _ = estimate_gradient(
                dist, list(range(8)), cfg, stream, cost_fn=quadratic_cost(dim))
            grad_logvar = 0.5 * dist.sigma * grad_sigma
            dist = PolicyDistribution(mean=dist.mean - cfg.lr_mean * grad_mean,
                                      log_var=dist.log_var - cfg.lr_logvar * grad_logvar)
        assert np.linalg.norm(dist.mean) < 0.1
        assert np.all(dist.sigma > 0)


@pytest.fixture(scope="module")
def micro_setup(library):
    params = EnvDistributionParams(master_seed=200, duration=6.0, segment_count=3,
                                   segment_length=5.0)
    envs = [sample_environment(params, i) for i in range(4)]
    return envs, SimConfig()


class TestTrainPrior:
    def test_zero_epochs_returns_standard_normal(self, library, micro_setup):
        envs, sim = micro_setup
        cfg = ESConfig(env_count=4, minibatch=2, pair_count=1, epochs=0, seed=1)
        dist, trace = train_prior(cfg, envs, library, sim)
        np.testing.assert_array_equal(dist.mean, 0.0)
        np.testing.assert_array_equal(dist.log_var, 0.0)
        assert trace.records == []

    def test_determinism(self, library, micro_setup):
        envs, sim = micro_setup
        cfg = ESConfig(env_count=4, minibatch=2, pair_count=1, epochs=2, seed=5)
        d1, t1 = train_prior(cfg, envs, library, sim)
        d2, t2 = train_prior(cfg, envs, library, sim, workers=4)
        np.testing.assert_array_equal(d1.mean, d2.mean)
        np.testing.assert_array_equal(d1.log_var, d2.log_var)
        assert [r.mean_cost for r in t1.records] == [r.mean_cost for r in t2.records]

    def test_trace_shape_and_epochs(self, library, micro_setup):
        envs, sim = micro_setup
        cfg = ESConfig(env_count=4, minibatch=2, pair_count=1, epochs=3, seed=6)
        dist, trace = train_prior(cfg, envs, library, sim)
        assert len(trace.records) == 3 * 2  # epochs * (env_count // minibatch)
        assert len(trace.epoch_mean_costs()) == 3
        assert np.all(dist.sigma > 0)

    def test_dataset_size_mismatch_rejected(self, library, micro_setup):
        envs, sim = micro_setup
        cfg = ESConfig(env_count=10, minibatch=2, pair_count=1, epochs=1, seed=0)
        with pytest.raises(InvalidParameterError):
            train_prior(cfg, envs, library, sim)

    def test_config_validation(self):
        with pytest.raises(InvalidParameterError):
            ESConfig(minibatch=50, env_count=20)
        with pytest.raises(InvalidParameterError):
            ESConfig(lr_mean=0.0)
