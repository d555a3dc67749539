"""The compiled kernels and the numpy fallback must agree."""
import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from maopac import _backend, _fallback
from maopac.errors import BeliefError
from maopac.social_learning import LOG_FLOOR
from maopac.topology import Graph, build_metropolis_matrix

try:
    kernels = importlib.import_module("maopac._kernels")
except ImportError:  # pragma: no cover - depends on the build
    kernels = None

needs_ext = pytest.mark.skipif(kernels is None, reason="compiled kernels not built")


@needs_ext
def test_compiled_backend_selected_by_default():
    if os.environ.get("MAOPAC_BACKEND", "").lower() != "python":
        assert _backend.BACKEND == "cython"


def test_environment_variable_forces_fallback():
    out = subprocess.run(
        [sys.executable, "-c", "from maopac import _backend; print(_backend.BACKEND)"],
        env={**os.environ, "MAOPAC_BACKEND": "python"}, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@needs_ext
@given(
    arrays(np.float64, (7, 4, 6), elements=st.floats(-40, 0)),
    st.sampled_from(["ring", "path", "complete"]),
)
def test_belief_rounds_agree(loglik, name):
    C = build_metropolis_matrix(getattr(Graph, name)(4))
    prior = np.full((4, 6), -np.log(6))
    a = kernels.belief_rounds(loglik, C, prior, LOG_FLOOR)
    b = _fallback.belief_rounds(loglik, C, prior, LOG_FLOOR)
    np.testing.assert_allclose(a, b, atol=1e-10, rtol=0)


@needs_ext
def test_belief_rounds_agree_with_structural_zeros():
    rng = np.random.default_rng(5)
    loglik = -rng.uniform(0, 5, size=(5, 3, 4))
    loglik[2, 1, 0] = -np.inf
    C = build_metropolis_matrix(Graph.ring(3))
    prior = np.full((3, 4), -np.log(4))
    a = kernels.belief_rounds(loglik, C, prior, LOG_FLOOR)
    b = _fallback.belief_rounds(loglik, C, prior, LOG_FLOOR)
    np.testing.assert_array_equal(np.isinf(a), np.isinf(b))
    fin = np.isfinite(a)
    np.testing.assert_allclose(a[fin], b[fin], atol=1e-10, rtol=0)


@needs_ext
def test_both_backends_reject_degenerate_beliefs():
    loglik = np.full((1, 2, 2), -np.inf)
    prior = np.zeros((2, 2))
    C = np.full((2, 2), 0.5)
    for impl in (kernels, _fallback):
        with pytest.raises(BeliefError):
            impl.belief_rounds(loglik, C, prior, LOG_FLOOR)


@needs_ext
@given(arrays(np.float64, 5, elements=st.floats(-10, 10)), st.integers(0, 60))
def test_consensus_rounds_agree(p, rounds):
    C = build_metropolis_matrix(Graph.ring(5))
    np.testing.assert_allclose(
        kernels.consensus_rounds(p, C, rounds), _fallback.consensus_rounds(p, C, rounds), atol=1e-10, rtol=0
    )
