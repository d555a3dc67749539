import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maopac.actor_critic import HyperParams
from maopac.bounds import (
    VacuousBoundWarning,
    constants,
    corollary1_bound,
    network_theorem2_bounds,
    policy_gap,
    recursive_critic_bound,
    recursive_critic_bounds,
    theorem2_bounds,
    trajectory_bounds,
)
from maopac.config import default_config
from maopac.errors import AssumptionViolation
from oracles import PlainBounds

# hand-evaluated reference setting
REF = HyperParams(gamma=0.25, lam=0.5, zeta=0.5, b_eps=0.5, beta0=0.1, beta_exponent=1.0)


def test_constants_hand_values():
    c = constants(REF)
    assert c.B_M == pytest.approx(1.5, abs=1e-12)
    assert c.B_e == pytest.approx(1.714286, abs=1e-6)
    assert c.B_M_theta == pytest.approx(1.5, abs=1e-12)
    assert c.Omega == pytest.approx(1.428571, abs=1e-6)
    assert c.I3 == pytest.approx(2.885390, abs=1e-6)
    assert all(v > 0 and math.isfinite(v) for v in c.as_dict().values())


def test_constants_preconditions():
    with pytest.raises(AssumptionViolation, match="Assumption 4"):
        constants(HyperParams(gamma=0.6, b_eps=0.5))


def test_trajectory_hand_values():
    tb = trajectory_bounds(REF, 1, 0.1)
    assert tb.B_omega == pytest.approx(0.048980, abs=1e-6)
    assert tb.B_delta == pytest.approx(1 + 1.25 * tb.B_omega, rel=1e-14)
    assert trajectory_bounds(REF, 2, 0.1).Phi == pytest.approx(59.2176, abs=1e-4)


def test_zero_critic_warns_and_delta_bound_is_reward():
    with pytest.warns(VacuousBoundWarning):
        tb = trajectory_bounds(REF, 3, 0.0)
    assert tb.B_omega == 0.0
    assert tb.B_delta == 1.0


def test_trajectory_bounds_nondecreasing():
    vals = [trajectory_bounds(REF, n, 0.2) for n in range(1, 30)]
    for a, b in zip(vals, vals[1:]):
        assert b.B_omega >= a.B_omega and b.B_delta >= a.B_delta and b.Phi >= a.Phi
        assert a.B_delta >= 1.0


def test_recursion_hand_values():
    assert recursive_critic_bound(REF, 0, 0.1) == 0.1
    assert recursive_critic_bound(REF, 1, 0.1) == pytest.approx(0.485714, abs=1e-6)


hyper_draws = st.builds(
    lambda g, gap, lam, z, b0, p: HyperParams(
        gamma=g, lam=lam, zeta=z, b_eps=min(1.0, g + gap), beta0=b0, beta_exponent=p
    ),
    st.floats(0.05, 0.6), st.floats(0.05, 0.4), st.floats(0.05, 0.95), st.floats(0.05, 0.95),
    st.floats(0.01, 1.0), st.floats(0.55, 1.0),
)


@given(hyper_draws, st.integers(2, 25), st.data())
def test_second_evaluator_agreement(h, n, data):
    j = data.draw(st.integers(1, n))
    eps = data.draw(st.floats(1e-3, 1.0))
    M = data.draw(st.floats(0.1, 3.0))
    F = data.draw(st.floats(1.0, 3.0))
    w0 = data.draw(st.floats(0.01, 2.0))
    ref = PlainBounds(h.gamma, h.lam, h.zeta, h.b_eps, h.beta0, h.beta_exponent)
    c = constants(h)
    for got, want in [(c.B_M, ref.B_M), (c.B_e, ref.B_e), (c.B_M_theta, ref.B_Mt), (c.Omega, ref.Omega),
                      (c.I1, ref.I1), (c.I2, ref.I2), (c.I3, ref.I3)]:
        assert got == pytest.approx(want, rel=1e-12)
    tb = trajectory_bounds(h, n, w0)
    assert tb.B_omega == pytest.approx(ref.B_omega(n, w0), rel=1e-12)
    assert tb.B_delta == pytest.approx(ref.B_delta(n, w0), rel=1e-12)
    assert tb.Phi == pytest.approx(ref.Phi(n), rel=1e-12)
    got = theorem2_bounds(h, n, j, eps, M, F, w0).values()
    want = ref.theorem2(n, j, eps, M, F, w0)
    for (name, g), w in zip(got.items(), want):
        if w > 1e-290:
            assert g == pytest.approx(w, rel=1e-12), name
    assert recursive_critic_bound(h, n, w0) == pytest.approx(ref.recursion(n, w0), rel=1e-12)


def _default_hyper():
    return default_config().hyper


def test_default_theorem2_positive():
    t = theorem2_bounds(_default_hyper(), 10, 5, 0.1, 1.2, 1.4, 0.3)
    assert all(v > 0 for v in t.values().values())


def test_bounds_decrease_when_n_doubles():
    h = _default_hyper()
    rows = [theorem2_bounds(h, n, 5, 0.1, 1.2, 1.4, 0.3).logs() for n in (10, 20, 40)]
    for name in rows[0]:
        assert rows[0][name] > rows[1][name] > rows[2][name]


def test_first_bound_vanishes_with_n():
    h = _default_hyper()
    logs = [theorem2_bounds(h, n, 1, 0.1, 1.2, 1.4, 0.3).log_B1_tilde for n in (10, 100, 1000)]
    assert logs[0] > logs[1] > logs[2]


def test_linear_in_eps():
    h = _default_hyper()
    a = theorem2_bounds(h, 10, 5, 0.01, 1.2, 1.4, 0.3).values()
    b = theorem2_bounds(h, 10, 5, 0.1, 1.2, 1.4, 0.3).values()
    for name in a:
        assert b[name] / a[name] == pytest.approx(10.0, rel=1e-12)


def test_theorem2_preconditions():
    with pytest.raises(ValueError):
        theorem2_bounds(REF, 5, 6, 0.1, 1, 1, 0.1)
    with pytest.raises(ValueError):
        theorem2_bounds(REF, 5, 2, 0.1, 0.0, 1, 0.1)


def test_network_bound_is_agentwise_minimum():
    h = REF
    per = [theorem2_bounds(h, 8, 3, 0.1, m, f, 0.2) for m, f in [(1.0, 1.2), (1.4, 1.9)]]
    net = network_theorem2_bounds(h, 8, 3, 0.1, [1.0, 1.4], [1.2, 1.9], 0.2)
    for name, v in net.values().items():
        assert v == min(p.values()[name] for p in per)


def test_corollary1_degenerate_gap():
    table = np.array([[1.0, 2.0]])
    with pytest.raises(ValueError, match="degenerate"):
        corollary1_bound(table, table, [0.5, 0.5], 1.0, 0.1, 0)


def test_corollary1_hand_instance():
    theta = np.array([[1.0, 0.0], [0.5, 2.0]])
    bar = np.array([[0.0, 1.0], [2.0, 0.0]])
    mu = np.array([0.3, 0.7])
    # a = 0: theta_0 - bar_0 + max(bar) - min(theta)
    gap = np.array([1.0 - 0.0 + 2.0 - 0.5, 0.0 - 1.0 + 1.0 - 0.0])
    np.testing.assert_allclose(policy_gap(theta, bar, 0), gap, atol=1e-15)
    want = (math.log(0.2 + 0.9) - (0.3 * 2.5 + 0.7 * 0.0)) / 2.5
    assert corollary1_bound(theta, bar, mu, 0.9, 0.2, 0) == pytest.approx(want, abs=1e-12)
    assert corollary1_bound(theta, bar, mu, 0.9, 0.5, 0) > corollary1_bound(theta, bar, mu, 0.9, 0.2, 0)


def test_recursion_array_matches_scalar():
    arr = recursive_critic_bounds(REF, 6, 0.3)
    assert arr[0] == 0.3
    for n in range(7):
        assert arr[n] == recursive_critic_bound(REF, n, 0.3)


def test_no_warning_for_nonzero_critic():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        trajectory_bounds(REF, 4, 0.1)
