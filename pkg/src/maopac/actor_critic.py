"""Per-agent emphatic actor-critic updates with Boltzmann policies.

Agents use their belief vector as the feature vector: the critic is the linear
value ``omega @ mu`` and the actor keeps one parameter row per action, with
``pi(a | mu) = softmax(theta @ mu)[a]``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceError


@dataclass(frozen=True)
class HyperParams:
    gamma: float = 0.2
    lam: float = 0.5
    zeta: float = 0.5
    b_eps: float = 0.5
    beta0: float = 1.0
    beta_exponent: float = 0.6
    eps: float = 0.1
    T_state: int | str = 20
    T_rho: int | str = 50
    T_state_max: int = 200
    lipschitz: float = 1.0

    def beta(self, n):
        """Step size ``beta0 / (1 + n)^p``."""
        return self.beta0 / (1.0 + n) ** self.beta_exponent

    def violations(self) -> list[str]:
        out = []
        g, lam, z, b = self.gamma, self.lam, self.zeta, self.b_eps
        if not 0 < g < 1:
            out.append(f"gamma ({g}) must lie in (0, 1)")
        if not 0 < lam < 1:
            out.append(f"lambda ({lam}) must lie in (0, 1)")
        if not 0 < z < 1:
            out.append(f"zeta ({z}) must lie in (0, 1)")
        if not 0 < b <= 1:
            out.append(f"b_eps ({b}) must lie in (0, 1]: Assumption 4")
        if not b > g:
            out.append(f"b_eps ({b}) must exceed gamma ({g}): Assumption 4")
        if not lam * g < 1:
            out.append(f"lambda*gamma ({lam * g}) must be < 1")
        if not self.beta0 > 0:
            out.append(f"beta0 ({self.beta0}) must be positive: Assumption 5")
        if not 0.5 < self.beta_exponent <= 1:
            out.append(
                f"beta_exponent ({self.beta_exponent}) must lie in (0.5, 1] so that sum beta = inf "
                "and sum beta^2 < inf: Assumption 5"
            )
        if not self.eps > 0:
            out.append(f"eps ({self.eps}) must be positive")
        for name in ("T_state", "T_rho"):
            v = getattr(self, name)
            lo = 1 if name == "T_state" else 0
            if v != "auto" and not (isinstance(v, int) and not isinstance(v, bool) and v >= lo):
                out.append(f"{name} must be an integer >= {lo} or 'auto', got {v!r}")
        if not (isinstance(self.T_state_max, int) and self.T_state_max >= 1):
            out.append(f"T_state_max must be a positive integer, got {self.T_state_max!r}")
        if not self.lipschitz >= 0:
            out.append(f"lipschitz ({self.lipschitz}) must be nonnegative")
        return out


def boltzmann_probs(mu, table) -> np.ndarray:
    """Full action distribution ``softmax(table @ mu)``."""
    logits = np.asarray(table, dtype=np.float64) @ np.asarray(mu, dtype=np.float64)
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def boltzmann_prob(mu, table, a: int) -> float:
    return float(boltzmann_probs(mu, table)[a])


def log_policy_gradient(mu, table, a: int) -> np.ndarray:
    """Gradient of ``ln pi(a | mu)`` with respect to the chosen action's row."""
    mu = np.asarray(mu, dtype=np.float64)
    return mu * (1.0 - boltzmann_prob(mu, table, a))


def identity_table(state_count: int, action_count: int, scale: float) -> np.ndarray:
    """``scale`` on the action == state diagonal: prefers hitting the cell the
    belief favours."""
    table = np.zeros((action_count, state_count))
    n = min(state_count, action_count)
    table[np.arange(n), np.arange(n)] = scale
    return table


@dataclass(frozen=True)
class BehaviorPolicy:
    """Fixed Boltzmann policy mixed with a uniform floor:
    ``(1 - kappa) * softmax(table @ mu) + kappa / |A|``."""

    table: np.ndarray
    kappa: float = 0.05

    @property
    def action_count(self):
        return self.table.shape[0]

    @property
    def floor(self) -> float:
        return self.kappa / self.action_count

    def probs(self, mu) -> np.ndarray:
        return (1.0 - self.kappa) * boltzmann_probs(mu, self.table) + self.floor

    def prob(self, mu, a: int) -> float:
        return float(self.probs(mu)[a])


@dataclass
class AgentState:
    omega: np.ndarray
    theta: np.ndarray
    e: np.ndarray
    F: float = 0.0
    M: float = 0.0
    M_theta: float = 0.0
    rho_prev: float = 1.0

    @classmethod
    def initial(cls, omega, theta) -> "AgentState":
        omega = np.array(omega, dtype=np.float64)
        return cls(omega=omega, theta=np.array(theta, dtype=np.float64), e=np.zeros_like(omega))


@dataclass(frozen=True)
class StepDiagnostics:
    F: float
    M: float
    e_norm: float
    M_theta: float
    delta: float
    psi_norm: float


def _finite(name, value):
    if not np.all(np.isfinite(value)):
        raise DivergenceError(name)
    return value


def etd_update(state: AgentState, mu, eta, rho, r, a, beta, hyper: HyperParams):
    """One emphatic actor-critic step for a single agent.

    Returns a new state whose ``omega`` is the pre-combination critic and
    whose ``theta`` has row ``a`` moved along the log-policy gradient.
    """
    mu = np.asarray(mu, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    # non-finite values are caught and named below
    with np.errstate(invalid="ignore", over="ignore"):
        return _etd_core(state, mu, eta, rho, r, a, beta, hyper)


def _etd_core(state, mu, eta, rho, r, a, beta, hyper):
    g, lam = hyper.gamma, hyper.lam
    F_prev = state.F
    F = _finite("F", 1.0 + g * state.rho_prev * F_prev)
    M = _finite("M", lam + (1.0 - lam) * F)
    e = _finite("e", g * lam * state.e + M * mu)
    M_theta = _finite("M_theta", 1.0 + hyper.zeta * g * state.rho_prev * F_prev)
    delta = _finite("delta", r + g * float(state.omega @ eta) - float(state.omega @ mu))
    psi = _finite("psi", log_policy_gradient(mu, state.theta, a))
    omega = _finite("omega", state.omega + beta * rho * delta * e)
    theta = state.theta.copy()
    theta[a] += beta * rho * M_theta * delta * psi
    _finite("theta", theta[a])
    new = replace(state, omega=omega, theta=theta, e=e, F=F, M=M, M_theta=M_theta, rho_prev=float(rho))
    diag = StepDiagnostics(F, M, float(np.linalg.norm(e)), M_theta, delta, float(np.linalg.norm(psi)))
    return new, diag


def critic_combine(omega_tildes, C) -> np.ndarray:
    """``omega_k <- sum_l c[l, k] * omega_tilde_l`` for every agent."""
    W = np.asarray(omega_tildes, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if W.ndim != 2 or C.shape != (W.shape[0], W.shape[0]):
        raise ValueError(f"cannot combine {W.shape} critics with a {C.shape} matrix")
    return C.T @ W
