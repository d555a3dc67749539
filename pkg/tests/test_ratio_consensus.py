import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from maopac.errors import AssumptionViolation
from maopac.ratio_consensus import (
    ClampStats,
    auto_rounds,
    diffuse_log_ratios,
    estimate_joint_ratios,
    local_log_ratio,
    recover_ratio,
)
from maopac.topology import Graph, build_metropolis_matrix, second_eigenvalue_magnitude


def test_local_log_ratio_examples():
    assert local_log_ratio(0.3, 0.3, 0.01) == 0.0
    assert local_log_ratio(0.8, 0.4, 0.01) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(AssumptionViolation, match="Assumption 4"):
        local_log_ratio(0.5, 0.0, 0.0)
    with pytest.raises(AssumptionViolation):
        local_log_ratio(0.5, 0.005, 0.01)


def test_consensus_fixed_point():
    C = build_metropolis_matrix(Graph.ring(5))
    np.testing.assert_allclose(diffuse_log_ratios(np.full(5, 0.3), C, 17), 0.3, atol=1e-15)


def test_two_agent_one_round():
    C = build_metropolis_matrix(Graph.complete(2))
    np.testing.assert_allclose(diffuse_log_ratios([math.log(2), math.log(0.5)], C, 1), [0, 0], atol=1e-15)


def test_ring_converges():
    p = np.random.default_rng(3).normal(size=5)
    out = diffuse_log_ratios(p, build_metropolis_matrix(Graph.ring(5)), 200)
    assert np.abs(out - p.mean()).max() < 1e-6


def test_recover_examples():
    assert recover_ratio(math.log(0.7 / 0.5), 1) == pytest.approx(0.7 / 0.5, rel=1e-15)
    assert recover_ratio(0.0, 2) == 1.0
    C = build_metropolis_matrix(Graph.complete(3))
    p = [math.log(0.5), 0.0, math.log(2.0)]
    np.testing.assert_allclose(estimate_joint_ratios(p, C, 100), 1.0, atol=1e-9)


def test_clamp_counts():
    stats = ClampStats()
    assert recover_ratio(math.log(5.0), 1, b_eps=0.5, stats=stats) == 2.0
    assert recover_ratio(math.log(1.5), 1, b_eps=0.5, stats=stats) == pytest.approx(1.5)
    assert (stats.clamps, stats.recovered) == (1, 2)


@given(arrays(np.float64, 6, elements=st.floats(-3, 3)), st.integers(0, 40))
def test_mean_preserved(p, rounds):
    C = build_metropolis_matrix(Graph.path(6))
    assert abs(diffuse_log_ratios(p, C, rounds).sum() - p.sum()) < 1e-12


@given(st.integers(1, 8), st.data())
def test_complete_graph_one_round_is_exact(K, data):
    pi = data.draw(arrays(np.float64, K, elements=st.floats(0.05, 1.0)))
    b = data.draw(arrays(np.float64, K, elements=st.floats(0.3, 1.0)))
    p = [local_log_ratio(x, y, 0.3) for x, y in zip(pi, b)]
    out = estimate_joint_ratios(p, build_metropolis_matrix(Graph.complete(K)), 1)
    np.testing.assert_allclose(out, np.prod(pi / b), rtol=1e-12, atol=1e-12)


@given(st.sampled_from(["ring", "path"]), st.integers(2, 8), st.data())
def test_auto_rounds_reach_product(name, K, data):
    C = build_metropolis_matrix(getattr(Graph, name)(K))
    pi = data.draw(arrays(np.float64, K, elements=st.floats(0.2, 1.0)))
    b = data.draw(arrays(np.float64, K, elements=st.floats(0.5, 1.0)))
    p = np.log(pi / b)
    out = estimate_joint_ratios(p, C, auto_rounds(C))
    np.testing.assert_allclose(out, np.prod(pi / b), rtol=1e-6)


def test_auto_rounds_formula():
    C = build_metropolis_matrix(Graph.ring(5))
    lam = second_eigenvalue_magnitude(C)
    assert auto_rounds(C) == math.ceil(math.log(1e-8) / math.log(lam))
    assert auto_rounds(build_metropolis_matrix(Graph.complete(4))) == 1


@given(arrays(np.float64, 4, elements=st.floats(-5, 5)), st.floats(0.3, 1.0))
def test_clamped_ratios_respect_floor(p, b_eps):
    out = estimate_joint_ratios(p, build_metropolis_matrix(Graph.ring(4)), 3, b_eps=b_eps)
    assert np.all(out <= 1 / b_eps)
