"""Decentralized estimate of the joint importance-sampling ratio.

Each agent knows only its own target/behavioral probabilities. Agents average
their log ratios over the network; ``K`` times the consensus value is the log
of the joint product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import AssumptionViolation
from .topology import second_eigenvalue_magnitude


@dataclass
class ClampStats:
    """Counts ratios cut back to ``1 / b_eps``."""

    clamps: int = 0
    recovered: int = 0


def local_log_ratio(target_prob: float, behavioral_prob: float, floor: float) -> float:
    if not behavioral_prob >= floor or behavioral_prob <= 0:
        raise AssumptionViolation(
            f"behavioral probability {behavioral_prob:.6g} below floor {floor:.6g}: "
            "behavior policy must be time-invariant and nonzero (Assumption 4)"
        )
    if not target_prob > 0:
        raise AssumptionViolation(f"target probability must be positive, got {target_prob}")
    return math.log(target_prob / behavioral_prob)


def diffuse_log_ratios(p, C, rounds: int) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if p.ndim != 1 or C.shape != (p.size, p.size):
        raise ValueError(f"cannot diffuse {p.shape} log ratios with a {C.shape} matrix")
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    return _backend.consensus_rounds(p, C, int(rounds))


def recover_ratio(p_tilde: float, K: int, b_eps: float | None = None, stats: ClampStats | None = None) -> float:
    """``exp(K * p_tilde)``, capped at ``1 / b_eps`` when a floor is given."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rho = math.exp(K * p_tilde)
    if stats is not None:
        stats.recovered += 1
    if b_eps is not None and rho > 1.0 / b_eps:
        rho = 1.0 / b_eps
        if stats is not None:
            stats.clamps += 1
    return rho


def estimate_joint_ratios(p, C, rounds, b_eps=None, stats=None) -> np.ndarray:
    """Per-agent joint-ratio estimates after ``rounds`` of consensus."""
    tilde = diffuse_log_ratios(p, C, rounds)
    K = tilde.size
    return np.array([recover_ratio(v, K, b_eps, stats) for v in tilde])


def auto_rounds(C, tol: float = 1e-8) -> int:
    """Smallest ``T`` with ``|lambda_2|^T <= tol``."""
    lam = second_eigenvalue_magnitude(C)
    if lam <= 0.0:
        return 1
    if lam >= 1.0:
        raise AssumptionViolation("combination matrix does not mix (|lambda_2| = 1)")
    return max(1, math.ceil(math.log(tol) / math.log(lam)))
