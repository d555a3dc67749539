import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from maopac.environment import RangeSensors
from maopac.errors import BeliefError
from maopac.social_learning import (
    adapt_belief,
    combine_beliefs,
    estimate_belief,
    estimate_from_observations,
    is_belief,
    local_belief,
)
from maopac.topology import Graph, build_metropolis_matrix
from oracles import atc_probability_space, bayes_posterior


def test_adapt_uninformative():
    np.testing.assert_allclose(adapt_belief(np.full(4, 0.25), np.full(4, 0.3)), 0.25, atol=1e-15)


def test_adapt_hand_example():
    np.testing.assert_allclose(adapt_belief([0.5, 0.5], [0.8, 0.2]), [0.8, 0.2], atol=1e-15)


def test_adapt_point_mass_is_absorbing():
    np.testing.assert_array_equal(adapt_belief([0, 1, 0], [0.2, 0.1, 0.7]), [0, 1, 0])


def test_adapt_degenerate():
    with pytest.raises(BeliefError):
        adapt_belief([1, 0], [0, 0.5])


def test_combine_identical_neighbours():
    psi = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(combine_beliefs([psi, psi, psi], [0.2, 0.3, 0.5]), psi, atol=1e-15)


def test_combine_hand_example():
    out = combine_beliefs([[0.9, 0.1], [0.5, 0.5]], [0.5, 0.5])
    a, b = math.sqrt(0.45), math.sqrt(0.05)
    np.testing.assert_allclose(out, [a / (a + b), b / (a + b)], atol=1e-15)
    np.testing.assert_allclose(out, [0.75, 0.25], atol=1e-15)


def test_combine_zero_factor_propagates():
    out = combine_beliefs([[0.0, 0.4, 0.6], [0.5, 0.25, 0.25]], [0.5, 0.5])
    assert out[0] == 0.0
    assert is_belief(out)


def test_combine_all_zero_is_degenerate():
    with pytest.raises(BeliefError):
        combine_beliefs([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])


def test_one_round_one_agent_equals_adapt():
    lik = np.array([0.1, 0.5, 0.2, 0.9])
    out = estimate_belief(np.log(lik)[None, None, :], np.eye(1))
    np.testing.assert_allclose(out[0], adapt_belief(np.full(4, 0.25), lik), atol=1e-15)


@given(arrays(np.float64, (12, 1, 5), elements=st.floats(-6, 0)))
def test_single_agent_rounds_equal_bayes_posterior(loglik):
    out = estimate_belief(loglik, np.eye(1))[0]
    ref = bayes_posterior(np.exp(loglik[:, 0, :]).tolist(), [0.2] * 5)
    np.testing.assert_allclose(out, ref, atol=1e-10)


@given(
    arrays(np.float64, (4, 3, 4), elements=st.floats(-4, 0)),
    st.sampled_from(["ring", "path", "complete"]),
)
def test_network_rounds_match_probability_space_oracle(loglik, name):
    C = build_metropolis_matrix(getattr(Graph, name)(3))
    out = estimate_belief(loglik, C)
    ref = atc_probability_space(np.exp(loglik).tolist(), C.tolist())
    np.testing.assert_allclose(out, ref, atol=1e-12)
    assert is_belief(out)


@given(arrays(np.float64, (6, 3, 5), elements=st.floats(-30, 0)), st.permutations(range(5)))
def test_relabeling_equivariance(loglik, perm):
    C = build_metropolis_matrix(Graph.path(3))
    perm = list(perm)
    a = estimate_belief(loglik, C)[:, perm]
    b = estimate_belief(loglik[:, :, perm], C)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_long_runs_do_not_underflow():
    rng = np.random.default_rng(1)
    loglik = -rng.uniform(0, 50, size=(400, 4, 64))
    out = estimate_belief(loglik, build_metropolis_matrix(Graph.ring(4)))
    assert is_belief(out)
    assert np.all(np.isfinite(out))


def test_noiseless_like_observations_concentrate_two_agents():
    # tiny sigma stands in for sigma -> 0 (a zero-width density is undefined)
    sensors = RangeSensors(2, [0, 1], 1e-2)
    C = build_metropolis_matrix(Graph.complete(2))
    for true in range(4):
        obs = sensors.sample(np.random.default_rng(true), true, 25)
        assert np.all(estimate_from_observations(sensors, obs, C)[:, true] >= 0.99)


def _rounds_to_threshold(sensors, C, true, rng, max_rounds=300):
    obs = sensors.sample(rng, true, max_rounds)
    ll = sensors.log_likelihood(obs)
    for t in range(1, max_rounds + 1):
        if np.all(estimate_belief(ll[:t], C)[:, true] >= 0.99):
            return t
    return max_rounds + 1


def test_faster_mixing_converges_no_slower():
    sensors = RangeSensors(3, [0, 2, 6, 8, 4], 1.5)
    graph = Graph.ring(5)
    fast = build_metropolis_matrix(graph)
    lazy = 0.9 * np.eye(5) + 0.1 * fast  # same support, larger |lambda_2|
    fast_t, lazy_t = [], []
    for seed in range(20):
        true = seed % 9
        fast_t.append(_rounds_to_threshold(sensors, fast, true, np.random.default_rng(seed)))
        lazy_t.append(_rounds_to_threshold(sensors, lazy, true, np.random.default_rng(seed)))
    assert np.median(fast_t) <= np.median(lazy_t)


def test_local_belief_ignores_neighbours():
    rng = np.random.default_rng(0)
    ll = -rng.uniform(0, 3, size=(5, 3, 4))
    out = local_belief(ll)
    for k in range(3):
        np.testing.assert_allclose(out[k], estimate_belief(ll[:, k:k + 1, :], np.eye(1))[0], atol=1e-15)
