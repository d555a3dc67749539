"""Zeroth-order policy optimization baseline.

Each agent keeps its own Boltzmann table over a private belief (its own
likelihood only, no network exchange) and climbs a two-point spherical
finite-difference estimate of its mean episode return.
"""
from __future__ import annotations

import numpy as np

from .actor_critic import boltzmann_probs
from .config import ZopoConfig
from .environment import GridWorld
from .errors import DivergenceError
from .simulation import RunTrace, _initial_parameters, _sample_action
from .social_learning import local_belief


def random_directions(rng, shape) -> np.ndarray:
    """One uniformly random unit direction per agent (first axis)."""
    u = rng.standard_normal(shape)
    flat = u.reshape(shape[0], -1)
    norms = np.linalg.norm(flat, axis=1)
    norms[norms == 0] = 1.0
    return (flat / norms[:, None]).reshape(shape)


def zopo_gradient_estimate(objective, theta, zcfg: ZopoConfig, rng) -> np.ndarray:
    """Two-point estimate ``d / (2r) * (J(theta + r u) - J(theta - r u)) * u``.

    ``objective(theta, episodes)`` returns each agent's mean return, shape (K,).
    ``theta`` has one table per agent along the first axis.
    """
    theta = np.asarray(theta, dtype=np.float64)
    K = theta.shape[0]
    d = theta[0].size
    r = zcfg.radius
    u = random_directions(rng, theta.shape)
    j_plus = np.asarray(objective(theta + r * u, zcfg.episodes), dtype=np.float64)
    j_minus = np.asarray(objective(theta - r * u, zcfg.episodes), dtype=np.float64)
    scale = (d / (2 * r)) * (j_plus - j_minus)
    return scale.reshape((K,) + (1,) * (theta.ndim - 1)) * u


class EpisodeObjective:
    """Mean undiscounted return over continuing episodes of the shared
    environment. Every environment step it takes is logged, so the run can
    charge it against the interaction budget."""

    def __init__(self, env: GridWorld, state, horizon, belief_rounds, act_rng):
        self.env = env
        self.state = state
        self.horizon = horizon
        self.belief_rounds = belief_rounds
        self.act_rng = act_rng
        self.rewards = []
        self.actions = []
        self.states = []

    def play(self, theta) -> np.ndarray:
        """One environment step under per-agent tables ``theta``."""
        env = self.env
        K = env.agent_count
        mu = local_belief(env.log_likelihood(env.observe_all(self.state, self.belief_rounds)))
        u = self.act_rng.random(K)
        actions = [_sample_action(boltzmann_probs(mu[k], theta[k]), u[k]) for k in range(K)]
        self.states.append(self.state.target_cell)
        self.state, rewards = env.step(self.state, actions)
        self.rewards.append(rewards)
        self.actions.append(actions)
        return rewards

    def __call__(self, theta, episodes) -> np.ndarray:
        total = np.zeros(self.env.agent_count)
        for _ in range(episodes):
            for _ in range(self.horizon):
                total += self.play(theta)
        return total / episodes


def run_zopo(cfg, seed: int | None = None, store_theta: bool = False) -> RunTrace:
    """ZOPO over exactly ``cfg.steps`` environment steps.

    Updates take ``2 * episodes * horizon`` steps each; a remainder too short
    for one more update is played with the current tables.
    """
    seed = cfg.seeds[0] if seed is None else int(seed)
    zcfg = cfg.zopo
    env = GridWorld(cfg.env)
    S, A, N = env.state_count, env.action_count, cfg.steps
    env_ss, act_ss, init_ss, dir_ss = np.random.SeedSequence(seed).spawn(4)
    _, theta0, _ = _initial_parameters(cfg, S, A, np.random.default_rng(init_ss))
    dir_rng = np.random.default_rng(dir_ss)
    T_state = cfg.hyper.T_state if cfg.hyper.T_state != "auto" else cfg.hyper.T_state_max
    objective = EpisodeObjective(env, env.reset(env_ss), zcfg.horizon, int(T_state), np.random.default_rng(act_ss))
    theta = theta0.copy()
    history = []
    per_update = 2 * zcfg.episodes * zcfg.horizon
    m = 0
    while N - len(objective.rewards) >= per_update:
        start = len(objective.rewards)
        g = zopo_gradient_estimate(objective, theta, zcfg, dir_rng)
        history += [theta] * (len(objective.rewards) - start)
        theta = theta + zcfg.step(m) * g
        if not np.all(np.isfinite(theta)):
            raise DivergenceError("theta", step=len(objective.rewards))
        m += 1
    while len(objective.rewards) < N:
        objective.play(theta)
        history.append(theta)
    states = np.array(objective.states + [objective.state.target_cell], dtype=np.int64)
    return RunTrace(
        "zopo", seed, np.array(objective.rewards), np.array(objective.actions, dtype=np.int64), states,
        theta=np.array(history) if store_theta else None, theta0=theta0,
    )


def run_fixed_policy(cfg, theta, seed: int | None = None) -> RunTrace:
    """Monte-Carlo reference: play fixed tables for ``cfg.steps`` steps."""
    seed = cfg.seeds[0] if seed is None else int(seed)
    env = GridWorld(cfg.env)
    env_ss, act_ss, _, _ = np.random.SeedSequence(seed).spawn(4)
    T_state = cfg.hyper.T_state if cfg.hyper.T_state != "auto" else cfg.hyper.T_state_max
    objective = EpisodeObjective(env, env.reset(env_ss), 1, int(T_state), np.random.default_rng(act_ss))
    theta = np.asarray(theta, dtype=np.float64)
    for _ in range(cfg.steps):
        objective.play(theta)
    states = np.array(objective.states + [objective.state.target_cell], dtype=np.int64)
    return RunTrace("fixed", seed, np.array(objective.rewards), np.array(objective.actions, dtype=np.int64), states)
