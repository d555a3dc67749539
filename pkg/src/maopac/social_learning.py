"""Adapt-then-combine social learning of the hidden global state.

Each round, every agent Bayes-updates its belief with one fresh private
observation (adapt) and then takes a normalized weighted geometric mean of its
neighbours' intermediate beliefs (combine). Beliefs are carried in log space
so long runs over many states do not underflow.
"""
from __future__ import annotations

import math

import numpy as np

from . import _backend
from .errors import BeliefError

LOG_FLOOR = math.log(1e-300)
SIMPLEX_TOL = 1e-10


def _log(p):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(p, dtype=np.float64))


def _read_out(logp):
    logp = np.asarray(logp, dtype=np.float64)
    peak = logp.max(axis=-1, keepdims=True)
    with np.errstate(under="ignore"):
        w = np.exp(logp - peak)
    return w / w.sum(axis=-1, keepdims=True)


def uniform_belief(state_count: int, agents: int | None = None) -> np.ndarray:
    shape = (state_count,) if agents is None else (agents, state_count)
    return np.full(shape, 1.0 / state_count)


def is_belief(p, tol: float = SIMPLEX_TOL) -> bool:
    p = np.asarray(p, dtype=float)
    return bool(np.all(p >= 0) and np.all(np.abs(p.sum(axis=-1) - 1.0) <= tol))


def adapt_belief(prior, likelihoods) -> np.ndarray:
    """Bayes update of ``prior`` by the likelihood of one observation under
    every state hypothesis."""
    logp = _log(likelihoods) + _log(prior)
    if not np.any(np.isfinite(logp)):
        raise BeliefError("adapt: no state has both positive prior and positive likelihood")
    return _read_out(logp)


def combine_beliefs(psis, weights) -> np.ndarray:
    """Normalized weighted geometric mean of neighbour beliefs.

    psis: (n, S) neighbour beliefs; weights: (n,) nonnegative, summing to 1.
    """
    psis = np.atleast_2d(np.asarray(psis, dtype=np.float64))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (psis.shape[0],):
        raise ValueError(f"{psis.shape[0]} beliefs but {weights.shape} weights")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("combination weights must be nonnegative and sum to 1")
    active = weights > 0
    logs = _log(psis[active])
    zero = np.isinf(logs).any(axis=0)
    acc = weights[active] @ np.where(np.isinf(logs), 0.0, logs)
    acc = np.where(zero, -np.inf, acc)
    if not np.any(np.isfinite(acc)):
        raise BeliefError("combine: every state has a neighbour assigning it zero belief")
    return _read_out(acc)


def estimate_belief(loglik, C, prior=None) -> np.ndarray:
    """Run one adapt/combine round per observation block and return the
    (K, S) beliefs after the last round.

    loglik: (T, K, S) log-likelihood of agent k's round-t observation under
    each state. ``prior`` defaults to uniform beliefs.
    """
    loglik = np.asarray(loglik, dtype=np.float64)
    if loglik.ndim != 3 or loglik.shape[0] < 1:
        raise ValueError(f"loglik must have shape (T>=1, K, S), got {loglik.shape}")
    _, K, S = loglik.shape
    log_prior = np.full((K, S), -math.log(S)) if prior is None else _log(prior).reshape(K, S)
    return _read_out(_backend.belief_rounds(loglik, C, log_prior, LOG_FLOOR))


def estimate_from_observations(sensors, observations, C, prior=None) -> np.ndarray:
    """Convenience wrapper: (T, K) raw observations through ``sensors``."""
    return estimate_belief(sensors.log_likelihood(observations), C, prior)


def local_belief(loglik, prior=None) -> np.ndarray:
    """Each agent's private Bayes posterior (no network exchange)."""
    loglik = np.asarray(loglik, dtype=np.float64)
    K = loglik.shape[1]
    return estimate_belief(loglik, np.eye(K), prior)
