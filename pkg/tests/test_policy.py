"""Policy network, weight distribution, checkpoints."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaitcert.errors import InvalidParameterError
from gaitcert.policy import (
    DiscretePolicySet,
    FeatureScales,
    PolicyArch,
    PolicyDistribution,
    forward,
    load_distribution,
    load_policy,
    load_policy_set,
    normalize_observation,
    param_count,
    sample_weights,
    save_distribution,
    save_policy,
    save_policy_set,
    select_primitive,
    softmax,
)
from gaitcert.rng import make_stream


class TestParamCount:
    def test_default_architecture_has_689_weights(self):
        assert param_count(PolicyArch(6, (10, 20), 19)) == 689

    def test_single_affine_map(self):
        assert param_count(PolicyArch(1, (), 1)) == 2

    def test_one_hidden_layer(self):
        assert param_count(PolicyArch(6, (10,), 19)) == 279


class TestForward:
    def test_zero_weights_give_uniform_scores(self):
        scores = forward(np.zeros(689), np.ones(6))
        np.testing.assert_array_equal(scores, np.full(19, 1.0 / 19.0))

    def test_scores_sum_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            scores = forward(rng.normal(size=689), rng.normal(size=6))
            assert abs(scores.sum() - 1.0) < 1e-12
            assert np.all(scores > 0)

    def test_final_bias_closed_form(self):
        # only the first output bias set to 10: softmax((10, 0, ..., 0))
        w = np.zeros(689)
        w[670] = 10.0
        scores = forward(w, np.zeros(6))
        expected = math.exp(10.0) / (math.exp(10.0) + 18.0)
        assert scores[0] == pytest.approx(expected, rel=1e-12)

    def test_non_finite_input_rejected(self):
        with pytest.raises(InvalidParameterError):
            forward(np.zeros(689), np.array([1.0, np.nan, 0, 0, 0, 0]))
        with pytest.raises(InvalidParameterError):
            forward(np.full(689, np.inf), np.zeros(6))

    def test_wrong_length_rejected(self):
        with pytest.raises(InvalidParameterError):
            forward(np.zeros(690), np.zeros(6))

    def test_continuity_probe(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=689)
        y = rng.normal(size=6)
        base = forward(w, y)
        w2 = w.copy()
        w2[123] += 1e-6
        delta = np.abs(forward(w2, y) - base).max()
        assert 0.0 <= delta < 1e-5

    @settings(max_examples=50, deadline=None)
    @given(shift=st.floats(-30.0, 30.0), seed=st.integers(0, 10_000))
    def test_softmax_shift_invariance(self, shift, seed):
        rng = np.random.default_rng(seed)
        logits = rng.normal(size=19)
        a = softmax(logits)
        b = softmax(logits + shift)
        assert np.abs(a - b).max() < 1e-12
        assert select_primitive(a) == select_primitive(b)


class TestSelectPrimitive:
    def test_uniform_scores_pick_lowest_index(self):
        assert select_primitive(np.full(19, 1.0 / 19.0)) == 0

    def test_peaked_scores(self):
        scores = np.full(19, 0.01)
        scores[12] = 0.82
        assert select_primitive(scores) == 12

    def test_exact_tie_breaks_low(self):
        scores = np.zeros(19)
        scores[3] = scores[7] = 0.5
        assert select_primitive(scores) == 3

    def test_invariance_under_increasing_transform(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            scores = rng.random(19)
            assert select_primitive(scores) == select_primitive(3.0 * scores + 1.0)
            assert select_primitive(scores) == select_primitive(np.exp(scores))


class TestSampleWeights:
    def test_antithetic_symmetry(self):
        dist = PolicyDistribution(mean=np.linspace(-1, 1, 689), log_var=np.zeros(689))
        w_plus, w_minus, eps = sample_weights(dist, make_stream(0, 0, 0))
        # exact up to one rounding of (mean+d)+(mean-d)
        np.testing.assert_allclose((w_plus + w_minus) / 2.0, dist.mean,
                                   rtol=0.0, atol=1e-15)
        assert eps.shape == (689,)

    def test_zero_sigma_collapses_to_mean(self):
        dist = PolicyDistribution(mean=np.ones(10), log_var=np.full(10, -1e9))
        w_plus, w_minus, _ = sample_weights(dist, make_stream(0, 0, 0))
        np.testing.assert_array_equal(w_plus, dist.mean)
        np.testing.assert_array_equal(w_minus, dist.mean)

    def test_monte_carlo_component_variance(self):
        dist = PolicyDistribution.standard(689)
        stream = make_stream(42, 0, 0)
        n = 100_000
        acc = np.zeros(689)
        acc2 = np.zeros(689)
        for _ in range(n):
            w_plus, _, _ = sample_weights(dist, stream)
            acc += w_plus
            acc2 += w_plus * w_plus
        var = acc2 / n - (acc / n) ** 2
        assert var.min() > 0.98 and var.max() < 1.02


class TestNormalization:
    def test_scales(self):
        scales = FeatureScales.for_stride(0.5)
        obs = np.array([math.pi / 4, 0.5, math.pi / 4, 0.5, 10.0, -10.0])
        np.testing.assert_allclose(normalize_observation(obs, scales),
                                   [1, 1, 1, 1, 1, -1], atol=1e-15)


class TestDistributions:
    def test_sigma_positive(self):
        dist = PolicyDistribution(mean=np.zeros(5), log_var=np.array([-50.0, -1, 0, 1, 50]))
        assert np.all(dist.sigma > 0)

    def test_standard(self):
        dist = PolicyDistribution.standard(689)
        np.testing.assert_array_equal(dist.mean, 0.0)
        np.testing.assert_array_equal(dist.sigma, 1.0)

    def test_policy_set_simplex_validation(self):
        with pytest.raises(InvalidParameterError):
            DiscretePolicySet(weights=np.zeros((3, 5)), probs=np.array([0.5, 0.3, 0.3]))
        with pytest.raises(InvalidParameterError):
            DiscretePolicySet(weights=np.zeros((3, 5)), probs=np.array([0.5, 0.6, -0.1]))


class TestCheckpoints:
    def test_policy_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        w = rng.normal(size=689)
        path = tmp_path / "p.ckpt"
        save_policy(path, w, extra={"config_hash": "abc"})
        loaded, header = load_policy(path)
        np.testing.assert_array_equal(loaded, w)
        assert header["config_hash"] == "abc"
        assert header["hidden_dims"] == [10, 20]

    def test_distribution_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        dist = PolicyDistribution(mean=rng.normal(size=689), log_var=rng.normal(size=689))
        path = tmp_path / "d.ckpt"
        save_distribution(path, dist)
        loaded, _ = load_distribution(path)
        np.testing.assert_array_equal(loaded.mean, dist.mean)
        np.testing.assert_array_equal(loaded.log_var, dist.log_var)

    def test_policy_set_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        pset = DiscretePolicySet(weights=rng.normal(size=(4, 689)),
                                 probs=np.array([0.1, 0.2, 0.3, 0.4]))
        path = tmp_path / "s.ckpt"
        save_policy_set(path, pset)
        loaded, _ = load_policy_set(path)
        np.testing.assert_array_equal(loaded.weights, pset.weights)
        np.testing.assert_array_equal(loaded.probs, pset.probs)

    def test_kind_mismatch_rejected(self, tmp_path):
        path = tmp_path / "p.ckpt"
        save_policy(path, np.zeros(689))
        with pytest.raises(InvalidParameterError):
            load_distribution(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "p.ckpt"
        save_policy(path, np.zeros(689))
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(InvalidParameterError):
            load_policy(path)
