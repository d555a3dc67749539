"""Pure numpy implementations of the hot loops.

These mirror ``_kernels.pyx`` operation for operation. Results agree with the
compiled path to rounding (the neighbour sums are accumulated in a different
order), which the test-suite checks at 1e-10.
"""
import numpy as np

from .errors import BeliefError

NEG_INF = -np.inf


def _normalize_rows(logp, what):
    peak = logp.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(peak)):
        bad = int(np.flatnonzero(~np.isfinite(peak[:, 0]))[0])
        raise BeliefError(f"{what}: agent {bad} has zero mass on every state")
    with np.errstate(under="ignore"):
        lse = peak + np.log(np.exp(logp - peak).sum(axis=1, keepdims=True))
    return logp - lse


def belief_rounds(loglik, C, log_prior, log_floor):
    """Run ``T`` adapt-then-combine rounds in log space.

    loglik: (T, K, S) log-likelihoods of each round's observation.
    C: (K, K) combination matrix, ``C[l, k]`` is the weight k gives l.
    log_prior: (K, S) starting log-beliefs.
    Returns the (K, S) normalized log-beliefs after the last round.
    """
    loglik = np.asarray(loglik, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    cur = np.array(log_prior, dtype=np.float64)
    mask = C > 0.0
    weights = np.where(mask, C, 0.0)
    for t in range(loglik.shape[0]):
        psi = _normalize_rows(loglik[t] + cur, "adapt")
        finite = np.isfinite(psi)
        if finite.all():
            out = weights.T @ np.maximum(psi, log_floor)
        else:
            out = _combine_with_zeros(psi, finite, mask, weights, log_floor)
        cur = _normalize_rows(out, "combine")
    return cur


def _combine_with_zeros(psi, finite, mask, weights, log_floor):
    # structural zeros propagate through any neighbour with positive weight;
    # zero-weight neighbours must not contribute 0 * -inf
    psi = np.where(finite, np.maximum(psi, log_floor), 0.0)
    out = np.empty_like(psi)
    for k in range(psi.shape[0]):
        nb = mask[:, k]
        hit = (~finite[nb]).any(axis=0)
        out[k] = np.where(hit, NEG_INF, weights[nb, k] @ psi[nb])
    return out


def consensus_rounds(p, C, rounds):
    """Apply ``rounds`` steps of ``p <- C^T p``."""
    cur = np.array(p, dtype=np.float64)
    Ct = np.asarray(C, dtype=np.float64).T
    for _ in range(int(rounds)):
        cur = Ct @ cur
    return cur
