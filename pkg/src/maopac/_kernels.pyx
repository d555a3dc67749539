# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: belief diffusion and log-ratio consensus."""
import numpy as np

from libc.math cimport exp, log, INFINITY, isfinite

from maopac.errors import BeliefError


cdef int _normalize(double[:, ::1] a, Py_ssize_t K, Py_ssize_t S) nogil:
    # returns the first agent with no finite entry, or -1
    cdef Py_ssize_t k, s
    cdef double peak, acc
    for k in range(K):
        peak = -INFINITY
        for s in range(S):
            if a[k, s] > peak:
                peak = a[k, s]
        if not isfinite(peak):
            return <int>k
        acc = 0.0
        for s in range(S):
            acc += exp(a[k, s] - peak)
        acc = peak + log(acc)
        for s in range(S):
            a[k, s] -= acc
    return -1


def belief_rounds(loglik, C, log_prior, double log_floor):
    """Run ``T`` adapt-then-combine rounds in log space (see ``_fallback``)."""
    cdef double[:, :, ::1] L = np.ascontiguousarray(loglik, dtype=np.float64)
    cdef double[:, ::1] W = np.ascontiguousarray(C, dtype=np.float64)
    out = np.array(log_prior, dtype=np.float64, order="C", copy=True)
    psi_arr = np.empty_like(out)
    cdef double[:, ::1] cur = out
    cdef double[:, ::1] psi = psi_arr
    cdef Py_ssize_t T = L.shape[0], K = L.shape[1], S = L.shape[2]
    cdef Py_ssize_t t, k, l, s
    cdef double w, v, acc
    cdef int bad = -1
    cdef int stage = 0
    if cur.shape[0] != K or cur.shape[1] != S or W.shape[0] != K or W.shape[1] != K:
        raise ValueError("shape mismatch between loglik, C and log_prior")
    with nogil:
        for t in range(T):
            for k in range(K):
                for s in range(S):
                    psi[k, s] = L[t, k, s] + cur[k, s]
            bad = _normalize(psi, K, S)
            if bad >= 0:
                stage = 1
                break
            for k in range(K):
                for s in range(S):
                    if isfinite(psi[k, s]) and psi[k, s] < log_floor:
                        psi[k, s] = log_floor
            for k in range(K):
                for s in range(S):
                    acc = 0.0
                    for l in range(K):
                        w = W[l, k]
                        if w > 0.0:
                            v = psi[l, s]
                            if not isfinite(v):
                                acc = -INFINITY
                                break
                            acc += w * v
                    cur[k, s] = acc
            bad = _normalize(cur, K, S)
            if bad >= 0:
                stage = 2
                break
    if stage == 1:
        raise BeliefError(f"adapt: agent {bad} has zero mass on every state")
    if stage == 2:
        raise BeliefError(f"combine: agent {bad} has zero mass on every state")
    return out


def consensus_rounds(p, C, Py_ssize_t rounds):
    """Apply ``rounds`` steps of ``p <- C^T p``."""
    cdef double[:, ::1] W = np.ascontiguousarray(C, dtype=np.float64)
    a_arr = np.array(p, dtype=np.float64, copy=True)
    b_arr = np.empty_like(a_arr)
    cdef double[::1] a = a_arr
    cdef double[::1] b = b_arr
    cdef double[::1] tmp
    cdef Py_ssize_t K = a.shape[0], r, k, l
    cdef double acc
    if W.shape[0] != K or W.shape[1] != K:
        raise ValueError("shape mismatch between p and C")
    with nogil:
        for r in range(rounds):
            for k in range(K):
                acc = 0.0
                for l in range(K):
                    acc += W[l, k] * a[l]
                b[k] = acc
            tmp = a
            a = b
            b = tmp
    return np.asarray(a).copy()
