"""Closed-form bounds on the learning variables and the admissible
state-estimation / ratio errors.

Everything is evaluated in log space and exponentiated at the end: the
admissible-error bounds involve ``Omega**n`` and ``n**3`` factors that leave
double range for n in the hundreds. ``math.pi`` here is the circle constant.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .actor_critic import HyperParams
from .environment import R_MAX
from .errors import AssumptionViolation


class VacuousBoundWarning(UserWarning):
    """The closed-form critic bound is identically zero for a zero critic."""


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class BoundConstants:
    B_M: float
    B_e: float
    B_M_theta: float
    Omega: float
    I1: float
    I2: float
    I3: float

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def constants(hyper: HyperParams) -> BoundConstants:
    g, lam, z, b, b0 = hyper.gamma, hyper.lam, hyper.zeta, hyper.b_eps, hyper.beta0
    if not b > g:
        raise AssumptionViolation(f"b_eps ({b}) must exceed gamma ({g}): Assumption 4")
    if not lam * g < 1:
        raise AssumptionViolation(f"lambda*gamma ({lam * g}) must be < 1")
    ratio = g / b
    B_M = lam + (1 - lam) / (1 - ratio)
    B_e = B_M / (1 - lam * g)
    B_M_theta = (1 - (1 - z) * ratio) / (1 - ratio)
    Omega = 1 + b0 * (1 + g) * B_e / b
    if not Omega > g * lam:
        raise AssumptionViolation(f"I1 undefined: Omega ({Omega}) must exceed gamma*lambda ({g * lam})")
    if not b * Omega / g > 1:
        raise AssumptionViolation(f"I2 undefined: b_eps*Omega/gamma ({b * Omega / g}) must exceed 1")
    I1 = 1 / math.log(Omega / (g * lam))
    I2 = 2 / math.log(b * Omega / g)
    I3 = 2 / math.log(b / g)
    return BoundConstants(B_M, B_e, B_M_theta, Omega, I1, I2, I3)


@dataclass(frozen=True)
class TrajectoryBounds:
    n: int
    B_omega: float
    B_delta: float
    Phi: float
    log_B_omega: float
    log_B_delta: float
    log_Phi: float


def _log_beta(hyper, i):
    return math.log(hyper.beta0) - hyper.beta_exponent * math.log1p(i)


def trajectory_bounds(hyper: HyperParams, n: int, omega0_max_norm: float, r_max: float = R_MAX) -> TrajectoryBounds:
    """Closed-form critic-norm bound, TD-error bound and the ``Phi_n`` factor."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if omega0_max_norm < 0:
        raise ValueError("omega0_max_norm must be nonnegative")
    c = constants(hyper)
    if omega0_max_norm == 0:
        warnings.warn(
            "closed-form critic bound is zero for a zero initial critic; use recursive_critic_bound",
            VacuousBoundWarning,
            stacklevel=2,
        )
        log_Bw = -math.inf
    else:
        log_scale = math.log(r_max) + math.log(c.B_e) + math.log(omega0_max_norm) - math.log(hyper.b_eps)
        i = np.arange(n)
        terms = (n - i) * math.log(c.Omega) + math.log(hyper.beta0) - hyper.beta_exponent * np.log1p(i)
        peak = terms.max()
        log_Bw = float(peak + math.log(np.exp(terms - peak).sum()) + log_scale)
    log_Bd = float(np.logaddexp(math.log(r_max), math.log1p(hyper.gamma) + log_Bw))
    log_Phi = (
        math.log(4 * hyper.beta0 * (1 + hyper.gamma))
        + 2 * math.log(math.pi)
        + math.log(c.B_M_theta)
        + 3 * math.log(n)
    )
    return TrajectoryBounds(n, _exp(log_Bw), _exp(log_Bd), _exp(log_Phi), log_Bw, log_Bd, log_Phi)


@dataclass(frozen=True)
class Theorem2Bounds:
    """Admissible belief error ``min(B1, B2)`` and ratio error ``min(D1, D2, D3)``.

    The ``log_*`` fields stay meaningful after the plain values underflow.
    """

    B1_tilde: float
    B2_tilde: float
    D1_tilde: float
    D2_tilde: float
    D3_tilde: float
    log_B1_tilde: float
    log_B2_tilde: float
    log_D1_tilde: float
    log_D2_tilde: float
    log_D3_tilde: float

    NAMES = ("B1_tilde", "B2_tilde", "D1_tilde", "D2_tilde", "D3_tilde")

    def values(self):
        return {k: getattr(self, k) for k in self.NAMES}

    def logs(self):
        return {k: getattr(self, "log_" + k) for k in self.NAMES}

    @property
    def belief_tolerance(self):
        return min(self.B1_tilde, self.B2_tilde)

    @property
    def log_belief_tolerance(self):
        return min(self.log_B1_tilde, self.log_B2_tilde)

    @property
    def ratio_tolerance(self):
        return min(self.D1_tilde, self.D2_tilde, self.D3_tilde)

    @property
    def log_ratio_tolerance(self):
        return min(self.log_D1_tilde, self.log_D2_tilde, self.log_D3_tilde)


def theorem2_bounds(
    hyper: HyperParams,
    n: int,
    j: int,
    eps: float,
    M_kj: float,
    F_kj: float,
    omega0_max_norm: float,
    r_max: float = R_MAX,
) -> Theorem2Bounds:
    """Admissible errors at step ``j`` for the actor error to stay within
    ``eps`` at horizon ``n``. ``M_kj`` and ``F_kj`` are the agent's current
    emphasis and follow-on trace."""
    if not 1 <= j <= n:
        raise ValueError(f"need 1 <= j <= n, got j={j}, n={n}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not (math.isfinite(M_kj) and math.isfinite(F_kj)) or M_kj == 0 or F_kj <= 0:
        raise ValueError(f"runtime snapshot must be finite with M != 0 and F > 0, got M={M_kj}, F={F_kj}")
    c = constants(hyper)
    g, lam, b, b0 = hyper.gamma, hyper.lam, hyper.b_eps, hyper.beta0
    tn = trajectory_bounds(hyper, n, omega0_max_norm, r_max)
    tj = trajectory_bounds(hyper, j, omega0_max_norm, r_max)
    lnO = math.log(c.Omega)
    le = math.log(eps)
    lb = math.log(b)
    lbg = math.log(b / g)

    lB1 = le + lb - math.log1p(g) - math.log(c.B_e) - tn.log_Phi - _log_beta(hyper, j) - tj.log_B_omega - (n - j) * lnO
    lB2 = (
        le - math.log(b0) - math.log(c.I1) - math.log(2) - tn.log_Phi - math.log(abs(M_kj))
        - tn.log_B_delta - (n - c.I1) * lnO - (c.I1 - j) * math.log(g * lam)
    )
    lD1 = le + lb - math.log(c.B_e) - tn.log_Phi - _log_beta(hyper, j) - tj.log_B_delta - (n - j) * lnO
    lD2 = (
        (c.I2 - j) * lbg + le - 2 * math.log(c.I2) - math.log(1 - lam) - math.log(b0) - math.log(2)
        - tn.log_Phi - math.log(F_kj) - tn.log_B_delta - (n - c.I2) * lnO
    )
    lD3 = (
        (c.I3 - j) * lbg + math.log(3) + le + lb - 2 * math.log(c.I3) - math.log(hyper.zeta) - math.log(8)
        - _log_beta(hyper, n) - 2 * math.log(math.pi) - tn.log_B_delta - math.log(F_kj)
    )
    logs = (lB1, lB2, lD1, lD2, lD3)
    return Theorem2Bounds(*(_exp(v) for v in logs), *logs)


def network_theorem2_bounds(hyper, n, j, eps, M, F, omega0_max_norm, r_max=R_MAX) -> Theorem2Bounds:
    """Per-agent bounds reduced to one network-level bound by taking the
    minimum of each entry over agents."""
    per_agent = [theorem2_bounds(hyper, n, j, eps, m, f, omega0_max_norm, r_max) for m, f in zip(M, F)]
    logs = [min(getattr(t, "log_" + k) for t in per_agent) for k in Theorem2Bounds.NAMES]
    return Theorem2Bounds(*(_exp(v) for v in logs), *logs)


def policy_gap(theta_table, behavioral_table, action: int) -> np.ndarray:
    """``theta_a - theta_bar_a + max_c theta_bar_c - min_c theta_c`` (entrywise)."""
    theta = np.asarray(theta_table, dtype=np.float64)
    bar = np.asarray(behavioral_table, dtype=np.float64)
    return theta[action] - bar[action] + bar.max(axis=0) - theta.min(axis=0)


def corollary1_bound(theta_table, behavioral_table, mu, rho_a: float, d_min: float, action: int) -> float:
    """Admissible belief error for Boltzmann target/behavior policies."""
    gap = policy_gap(theta_table, behavioral_table, action)
    norm = float(np.linalg.norm(gap))
    if norm == 0:
        raise ValueError("degenerate policy gap: target and behavioral tables leave no gap (||Theta|| = 0)")
    if not d_min + rho_a > 0:
        raise ValueError("d_min + rho_a must be positive")
    return (math.log(d_min + rho_a) - float(np.asarray(mu, dtype=np.float64) @ gap)) / norm


def recursive_critic_bounds(hyper: HyperParams, n: int, omega0_max_norm: float, r_max: float = R_MAX) -> np.ndarray:
    """``W_0..W_n`` from ``W_i = Omega W_{i-1} + beta_{i-1} R B_e / b_eps``."""
    c = constants(hyper)
    out = np.empty(n + 1)
    out[0] = omega0_max_norm
    drive = r_max * c.B_e / hyper.b_eps
    with np.errstate(over="ignore"):
        for i in range(1, n + 1):
            out[i] = c.Omega * out[i - 1] + hyper.beta(i - 1) * drive
    return out


def recursive_critic_bound(hyper: HyperParams, n: int, omega0_max_norm: float, r_max: float = R_MAX) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(recursive_critic_bounds(hyper, n, omega0_max_norm, r_max)[n])


def psi_condition_bound(hyper: HyperParams, i: int, eps: float, omega0_max_norm: float, r_max: float = R_MAX) -> float:
    """Belief error keeping the log-policy-gradient error admissible at step
    ``i``; depends on the policy's Lipschitz constant ``hyper.lipschitz``."""
    c = constants(hyper)
    tb = trajectory_bounds(hyper, i, omega0_max_norm, r_max)
    log_v = (
        math.log(3 * eps * hyper.b_eps)
        - math.log(2 * (2 + hyper.lipschitz))
        - _log_beta(hyper, i)
        - 2 * math.log(i)
        - 2 * math.log(math.pi)
        - math.log(c.B_M_theta)
        - tb.log_B_delta
    )
    return _exp(log_v)


def follow_on_bound(hyper: HyperParams) -> float:
    return 1.0 / (1.0 - hyper.gamma / hyper.b_eps)
