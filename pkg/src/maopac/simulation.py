"""Full MAOPAC loops: the decentralized run on estimated beliefs and the
privileged replay that sees the true state.

Per step the decentralized run acts from the behavior policy, steps the
environment, runs the belief loop on fresh observations, runs the ratio
consensus, applies the per-agent emphatic update and combines critics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actor_critic import AgentState, BehaviorPolicy, boltzmann_prob, critic_combine, etd_update, identity_table
from .bounds import constants, follow_on_bound, network_theorem2_bounds, recursive_critic_bounds
from .environment import R_MAX, GridWorld
from .errors import ConfigurationError, DivergenceError, PairingError
from .ratio_consensus import ClampStats, auto_rounds, estimate_joint_ratios, local_log_ratio
from .social_learning import estimate_belief
from .topology import second_eigenvalue_magnitude

BOUND_TOL = 1e-9
DIAG_NAMES = ("F", "M", "e_norm", "M_theta", "delta", "psi_norm", "omega_norm")


@dataclass
class Trajectory:
    """What the oracle replay needs from a decentralized run."""

    seed: int
    states: np.ndarray  # (N+1,) true cell before each step, plus the final one
    actions: np.ndarray  # (N, K)
    rewards: np.ndarray  # (N, K)
    betas: np.ndarray  # (N,)
    omega0: np.ndarray  # (K, S)
    theta0: np.ndarray  # (K, A, S)

    @property
    def steps(self):
        return len(self.actions)


@dataclass
class RunTrace:
    algorithm: str
    seed: int
    rewards: np.ndarray  # (N, K)
    actions: np.ndarray | None = None
    states: np.ndarray | None = None
    betas: np.ndarray | None = None
    mu: np.ndarray | None = None  # (N, K, S) belief used at step n
    rho: np.ndarray | None = None  # (N, K)
    omega: np.ndarray | None = None  # (N, K, S) critics after step n's combine
    theta: np.ndarray | None = None  # (N, K, A, S) actors after step n
    diagnostics: dict = field(default_factory=dict)  # name -> (N, K)
    flags: list = field(default_factory=list)  # per step, sorted violation labels
    clamps: int = 0
    t_state: np.ndarray | None = None  # (N,) belief rounds used after step n
    omega0: np.ndarray | None = None
    theta0: np.ndarray | None = None

    @property
    def steps(self):
        return len(self.rewards)

    @property
    def agent_count(self):
        return self.rewards.shape[1]

    def cumulative_average_reward(self) -> np.ndarray:
        """Running mean over steps of the network-average reward."""
        per_step = self.rewards.mean(axis=1)
        return np.cumsum(per_step) / np.arange(1, len(per_step) + 1)

    def violation_count(self) -> int:
        return sum(len(f) for f in self.flags)

    def trajectory(self) -> Trajectory:
        if self.actions is None or self.states is None:
            raise PairingError(f"{self.algorithm} trace carries no replayable trajectory")
        return Trajectory(self.seed, self.states, self.actions, self.rewards, self.betas, self.omega0, self.theta0)


class BoundChecker:
    """Compares runtime quantities against the closed-form bounds."""

    def __init__(self, hyper, steps, omega0_max_norm, r_max=R_MAX, tol=BOUND_TOL):
        self.hyper = hyper
        self.c = constants(hyper)
        self.tol = tol
        self.rho_max = 1.0 / hyper.b_eps
        self.F_max = follow_on_bound(hyper)
        self.W = recursive_critic_bounds(hyper, steps, omega0_max_norm, r_max)
        with np.errstate(over="ignore"):
            self.delta_max = r_max + (1 + hyper.gamma) * self.W

    def check(self, n, agent, rho, diag, omega_norm) -> list[str]:
        c, t = self.c, self.tol
        tests = (
            ("rho", rho <= self.rho_max + t),
            ("F", diag.F <= self.F_max + t),
            ("M", abs(diag.M) <= c.B_M + t),
            ("e", diag.e_norm <= c.B_e + t),
            ("M_theta", abs(diag.M_theta) <= c.B_M_theta + t),
            ("delta", abs(diag.delta) <= self.delta_max[n] + t),
            ("psi", diag.psi_norm <= 1.0 + t),
            ("omega", omega_norm <= self.W[n] + t),
        )
        return [f"{name}@{agent}" for name, ok in tests if not ok]


def _initial_parameters(cfg, S, A, rng):
    K = cfg.agent_count
    scale = cfg.policy.critic_init_scale
    omega0 = rng.uniform(-scale, scale, size=(K, S))
    table = identity_table(S, A, cfg.policy.temperature)
    if cfg.policy.actor_init == "behavior":
        theta0 = np.repeat(table[None], K, axis=0)
    else:
        theta0 = np.zeros((K, A, S))
    return omega0, theta0, BehaviorPolicy(table, cfg.policy.kappa)


def _sample_action(probs, u):
    a = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(a, len(probs) - 1)


def ratio_rounds(cfg, C) -> int:
    T = cfg.hyper.T_rho
    return auto_rounds(C) if T == "auto" else int(T)


class StateSchedule:
    """Belief-loop length per step: fixed, or the smallest ``t`` with
    ``|lambda_2|^t <= min(B1, B2) / S`` at the agents' upcoming emphasis."""

    def __init__(self, cfg, C, S, omega0_max_norm):
        self.cfg = cfg
        self.hyper = cfg.hyper
        self.S = S
        self.w0 = omega0_max_norm
        self.auto = cfg.auto_state_schedule
        self.lam2 = second_eigenvalue_magnitude(C)

    def rounds(self, n, agents) -> int:
        h = self.hyper
        if not self.auto:
            return int(h.T_state)
        if self.lam2 <= 0.0:
            return 1
        j = n + 1
        F = [1.0 + h.gamma * ag.rho_prev * ag.F for ag in agents]
        M = [h.lam + (1 - h.lam) * f for f in F]
        w0 = self.w0 if self.w0 > 0 else 1e-300
        tol = network_theorem2_bounds(h, j, j, h.eps, M, F, w0).log_belief_tolerance - math.log(self.S)
        t = math.ceil(tol / math.log(self.lam2))
        return int(min(max(t, 1), h.T_state_max))


def _spawn(seed):
    env_ss, act_ss, init_ss = np.random.SeedSequence(seed).spawn(3)
    return env_ss, np.random.default_rng(act_ss), np.random.default_rng(init_ss)


def _allocate(N, K, S, A, store_theta):
    return {
        "rewards": np.zeros((N, K)),
        "actions": np.zeros((N, K), dtype=np.int64),
        "mu": np.zeros((N, K, S)),
        "rho": np.zeros((N, K)),
        "omega": np.zeros((N, K, S)),
        "theta": np.zeros((N, K, A, S)) if store_theta else None,
        "diag": {name: np.zeros((N, K)) for name in DIAG_NAMES},
    }


def _record_diag(buf, n, k, diag, omega_norm):
    d = buf["diag"]
    d["F"][n, k] = diag.F
    d["M"][n, k] = diag.M
    d["e_norm"][n, k] = diag.e_norm
    d["M_theta"][n, k] = diag.M_theta
    d["delta"][n, k] = diag.delta
    d["psi_norm"][n, k] = diag.psi_norm
    d["omega_norm"][n, k] = omega_norm


def _agent_step(agents, C, n, mu, eta, rho, rewards, actions, beta, hyper, checker, buf, flags):
    K = len(agents)
    step_flags = []
    updated = []
    for k in range(K):
        omega_norm = float(np.linalg.norm(agents[k].omega))
        try:
            new, diag = etd_update(agents[k], mu[k], eta[k], rho[k], rewards[k], actions[k], beta, hyper)
        except DivergenceError as exc:
            raise DivergenceError(exc.quantity, step=n, agent=k) from None
        _record_diag(buf, n, k, diag, omega_norm)
        if checker is not None:
            step_flags += checker.check(n, k, rho[k], diag, omega_norm)
        updated.append(new)
    combined = critic_combine([ag.omega for ag in updated], C)
    for k in range(K):
        updated[k].omega = combined[k]
        agents[k] = updated[k]
    flags.append(sorted(step_flags))


def run_maopac_decpomdp(cfg, seed: int | None = None, store_theta: bool = True) -> RunTrace:
    """Decentralized run on estimated beliefs and consensus ratios."""
    seed = cfg.seeds[0] if seed is None else int(seed)
    env = GridWorld(cfg.env)
    hyper = cfg.hyper
    K, S, A, N = env.agent_count, env.state_count, env.action_count, cfg.steps
    C = cfg.combination_matrix()
    T_rho = ratio_rounds(cfg, C)
    env_ss, act_rng, init_rng = _spawn(seed)
    omega0, theta0, behavior = _initial_parameters(cfg, S, A, init_rng)
    w0 = float(np.linalg.norm(omega0, axis=1).max())
    checker = BoundChecker(hyper, N, w0) if cfg.diagnostics else None
    schedule = StateSchedule(cfg, C, S, w0)
    agents = [AgentState.initial(omega0[k], theta0[k]) for k in range(K)]
    stats = ClampStats()
    buf = _allocate(N, K, S, A, store_theta)
    states = np.zeros(N + 1, dtype=np.int64)
    betas = np.array([hyper.beta(n) for n in range(N)])
    t_state = np.zeros(N, dtype=np.int64)
    flags = []

    state = env.reset(env_ss)
    mu = estimate_belief(env.log_likelihood(env.observe_all(state, schedule.rounds(0, agents))), C)
    for n in range(N):
        probs = [behavior.probs(mu[k]) for k in range(K)]
        u = act_rng.random(K)
        actions = [_sample_action(probs[k], u[k]) for k in range(K)]
        states[n] = state.target_cell
        state, rewards = env.step(state, actions)
        t_state[n] = schedule.rounds(n, agents)
        eta = estimate_belief(env.log_likelihood(env.observe_all(state, t_state[n])), C)
        p = np.array([
            local_log_ratio(boltzmann_prob(mu[k], agents[k].theta, actions[k]), probs[k][actions[k]], behavior.floor)
            for k in range(K)
        ])
        rho = estimate_joint_ratios(p, C, T_rho, hyper.b_eps, stats)
        buf["rewards"][n] = rewards
        buf["actions"][n] = actions
        buf["mu"][n] = mu
        buf["rho"][n] = rho
        _agent_step(agents, C, n, mu, eta, rho, rewards, actions, betas[n], hyper, checker, buf, flags)
        buf["omega"][n] = [ag.omega for ag in agents]
        if store_theta:
            buf["theta"][n] = [ag.theta for ag in agents]
        mu = eta
    states[N] = state.target_cell
    return RunTrace(
        "decpomdp", seed, buf["rewards"], buf["actions"], states, betas, buf["mu"], buf["rho"], buf["omega"],
        buf["theta"], buf["diag"], flags, stats.clamps, t_state, omega0, theta0,
    )


def _one_hot(cell, S, K):
    out = np.zeros((K, S))
    out[:, cell] = 1.0
    return out


def _check_pairing(cfg, traj: Trajectory, K, S, A):
    problems = []
    if traj.actions.ndim != 2 or traj.actions.shape[1] != K:
        problems.append(f"trajectory has actions of shape {traj.actions.shape}, config has {K} agents")
    if len(traj.states) != traj.steps + 1:
        problems.append("trajectory must record one more state than steps")
    if np.any(traj.states < 0) or np.any(traj.states >= S):
        problems.append("trajectory states outside the configured grid")
    if np.any(traj.actions < 0) or np.any(traj.actions >= A):
        problems.append("trajectory actions outside the configured grid")
    if traj.omega0.shape != (K, S) or traj.theta0.shape != (K, A, S):
        problems.append("trajectory initial parameters do not match the config dimensions")
    if len(traj.betas) != traj.steps:
        problems.append("trajectory step sizes do not match its length")
    if problems:
        raise ConfigurationError(problems)


def run_maopac_oracle(cfg, trajectory: Trajectory, store_theta: bool = True) -> RunTrace:
    """Replay a recorded trajectory with one-hot beliefs at the true state and
    the exact joint ratio."""
    env = GridWorld(cfg.env)
    hyper = cfg.hyper
    K, S, A = env.agent_count, env.state_count, env.action_count
    _check_pairing(cfg, trajectory, K, S, A)
    N = trajectory.steps
    C = cfg.combination_matrix()
    _, _, init_rng = _spawn(trajectory.seed)
    _, _, behavior = _initial_parameters(cfg, S, A, init_rng)
    omega0, theta0 = trajectory.omega0, trajectory.theta0
    w0 = float(np.linalg.norm(omega0, axis=1).max())
    checker = BoundChecker(hyper, N, w0) if cfg.diagnostics else None
    agents = [AgentState.initial(omega0[k], theta0[k]) for k in range(K)]
    stats = ClampStats()
    buf = _allocate(N, K, S, A, store_theta)
    flags = []
    cap = 1.0 / hyper.b_eps

    for n in range(N):
        mu = _one_hot(trajectory.states[n], S, K)
        eta = _one_hot(trajectory.states[n + 1], S, K)
        actions = [int(a) for a in trajectory.actions[n]]
        p = [
            local_log_ratio(
                boltzmann_prob(mu[k], agents[k].theta, actions[k]), behavior.prob(mu[k], actions[k]), behavior.floor
            )
            for k in range(K)
        ]
        joint = math.exp(math.fsum(p))
        stats.recovered += 1
        if joint > cap:
            joint = cap
            stats.clamps += 1
        rho = np.full(K, joint)
        rewards = trajectory.rewards[n]
        buf["rewards"][n] = rewards
        buf["actions"][n] = actions
        buf["mu"][n] = mu
        buf["rho"][n] = rho
        _agent_step(agents, C, n, mu, eta, rho, rewards, actions, trajectory.betas[n], hyper, checker, buf, flags)
        buf["omega"][n] = [ag.omega for ag in agents]
        if store_theta:
            buf["theta"][n] = [ag.theta for ag in agents]
    return RunTrace(
        "oracle", trajectory.seed, buf["rewards"], buf["actions"], trajectory.states, trajectory.betas, buf["mu"],
        buf["rho"], buf["omega"], buf["theta"], buf["diag"], flags, stats.clamps, None, omega0, theta0,
    )
