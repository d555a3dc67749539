"""Radar/target grid world.

Cells of an ``h x h`` grid are indexed row-major. Each radar sits on a fixed
cell and measures its Manhattan distance to the target with Gaussian noise.
Each step every radar "hits" one cell; a hit on the target cell earns 1. The
target then steps within its Moore neighbourhood to the cell furthest (in
minimum Manhattan distance) from the cells just hit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, MaopacError

R_MAX = 1.0


class ActionError(MaopacError, ValueError):
    def __init__(self, agent, action, n_cells):
        self.agent = agent
        super().__init__(f"agent {agent} chose cell {action}, outside [0, {n_cells})")


def cell_coords(cells, grid_side):
    cells = np.asarray(cells)
    return np.stack([cells // grid_side, cells % grid_side], axis=-1)


def manhattan(a, b, grid_side):
    ra, ca = divmod(int(a), grid_side)
    rb, cb = divmod(int(b), grid_side)
    return abs(ra - rb) + abs(ca - cb)


def distance_table(positions, grid_side) -> np.ndarray:
    """(K, S) Manhattan distance from each sensor to each cell."""
    pos = cell_coords(positions, grid_side)
    cells = cell_coords(np.arange(grid_side * grid_side), grid_side)
    return np.abs(pos[:, None, :] - cells[None, :, :]).sum(axis=-1).astype(np.float64)


@dataclass(frozen=True)
class DecPomdpSpec:
    state_count: int
    action_counts: tuple
    agent_count: int
    gamma: float
    reward_bound: float = R_MAX


class RangeSensors:
    """Noisy-distance observation model for a set of sensors.

    Sensors may share a cell here; only the grid world insists on distinct
    radar positions.
    """

    def __init__(self, grid_side: int, positions: Sequence[int], sigma: float):
        if not (sigma >= 0 and math.isfinite(sigma)):
            raise ConfigurationError(f"sigma must be a nonnegative finite number, got {sigma}")
        n = grid_side * grid_side
        for k, p in enumerate(positions):
            if not 0 <= int(p) < n:
                raise ConfigurationError(f"sensor {k} at cell {p}, outside [0, {n})")
        self.grid_side = int(grid_side)
        self.positions = tuple(int(p) for p in positions)
        self.sigma = float(sigma)
        self.distances = distance_table(self.positions, self.grid_side)
        self._log_norm = math.log(self.sigma * math.sqrt(2.0 * math.pi)) if sigma > 0 else None

    @property
    def state_count(self):
        return self.grid_side * self.grid_side

    def sample(self, rng: np.random.Generator, state: int, rounds: int) -> np.ndarray:
        """(rounds, K) noisy distances to ``state``."""
        d = self.distances[:, state]
        return d[None, :] + self.sigma * rng.standard_normal((rounds, len(self.positions)))

    def _require_density(self):
        if self._log_norm is None:
            raise ConfigurationError("likelihood needs sigma > 0; a noiseless sensor has no density")

    def likelihood(self, agent: int, xi: float, s: int) -> float:
        self._require_density()
        z = (xi - self.distances[agent, s]) / self.sigma
        return math.exp(-0.5 * z * z - self._log_norm)

    def log_likelihood(self, xi) -> np.ndarray:
        """Log-densities for a (T, K) observation block, shape (T, K, S)."""
        self._require_density()
        xi = np.asarray(xi, dtype=np.float64)
        z = (xi[..., None] - self.distances) / self.sigma
        return -0.5 * z * z - self._log_norm


@dataclass
class GridEnvState:
    grid_side: int
    target_cell: int
    agent_positions: tuple
    last_hits: tuple
    rng: np.random.Generator = field(repr=False)


@dataclass(frozen=True)
class GridConfig:
    grid_side: int
    agent_positions: tuple
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "agent_positions", tuple(int(p) for p in self.agent_positions))


def grid_violations(cfg: GridConfig) -> list[str]:
    out = []
    h, pos = cfg.grid_side, cfg.agent_positions
    if not isinstance(h, (int, np.integer)) or h < 1:
        return [f"grid_side must be a positive integer, got {h!r}"]
    if len(pos) < 1:
        out.append("at least one agent position is required")
    if len(pos) > h * h:
        out.append(f"{len(pos)} agents do not fit on a {h}x{h} grid ({h * h} cells)")
    bad = [p for p in pos if not 0 <= p < h * h]
    if bad:
        out.append(f"agent positions {bad} outside [0, {h * h})")
    if len(set(pos)) != len(pos):
        out.append(f"agent positions must be distinct cells, got {list(pos)}")
    if not (cfg.sigma >= 0 and math.isfinite(cfg.sigma)):
        out.append(f"sigma must be nonnegative, got {cfg.sigma}")
    return out


class GridWorld:
    """The radar/target dec-POMDP instance."""

    def __init__(self, cfg: GridConfig):
        problems = grid_violations(cfg)
        if problems:
            raise ConfigurationError(problems)
        self.cfg = cfg
        self.grid_side = cfg.grid_side
        self.sensors = RangeSensors(cfg.grid_side, cfg.agent_positions, cfg.sigma)
        h = self.grid_side
        self._coords = cell_coords(np.arange(h * h), h)
        self._moves = [self._neighbourhood(c) for c in range(h * h)]

    @property
    def state_count(self):
        return self.grid_side ** 2

    @property
    def action_count(self):
        return self.grid_side ** 2

    @property
    def agent_count(self):
        return len(self.cfg.agent_positions)

    def decpomdp(self, gamma: float) -> DecPomdpSpec:
        return DecPomdpSpec(self.state_count, (self.action_count,) * self.agent_count, self.agent_count, gamma)

    def _neighbourhood(self, cell):
        h = self.grid_side
        r, c = divmod(cell, h)
        out = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < h:
                    out.append(rr * h + cc)
        return np.array(sorted(out))

    def reset(self, seed) -> GridEnvState:
        rng = np.random.default_rng(seed)
        target = int(rng.integers(self.state_count))
        pos = self.cfg.agent_positions
        return GridEnvState(self.grid_side, target, pos, pos, rng)

    def escape_candidates(self, target, hits) -> np.ndarray:
        """Cells in the target's neighbourhood maximizing min distance to ``hits``."""
        cand = self._moves[int(target)]
        hit_xy = self._coords[np.asarray(hits, dtype=int)]
        d = np.abs(self._coords[cand][:, None, :] - hit_xy[None, :, :]).sum(axis=-1).min(axis=1)
        return cand[d == d.max()]

    def step(self, state: GridEnvState, joint_action):
        actions = [int(a) for a in joint_action]
        if len(actions) != self.agent_count:
            raise ConfigurationError(f"expected {self.agent_count} actions, got {len(actions)}")
        for k, a in enumerate(actions):
            if not 0 <= a < self.state_count:
                raise ActionError(k, a, self.state_count)
        rewards = np.array([1.0 if a == state.target_cell else 0.0 for a in actions])
        best = self.escape_candidates(state.target_cell, actions)
        nxt = int(best[0]) if len(best) == 1 else int(state.rng.choice(best))
        return GridEnvState(self.grid_side, nxt, state.agent_positions, tuple(actions), state.rng), rewards

    def observe(self, state: GridEnvState, agent: int) -> float:
        if not 0 <= agent < self.agent_count:
            raise ConfigurationError(f"agent {agent} outside [0, {self.agent_count})")
        d = self.sensors.distances[agent, state.target_cell]
        return float(d + self.sensors.sigma * state.rng.standard_normal())

    def observe_all(self, state: GridEnvState, rounds: int) -> np.ndarray:
        return self.sensors.sample(state.rng, state.target_cell, rounds)

    def likelihood(self, agent: int, xi: float, s: int) -> float:
        return self.sensors.likelihood(agent, xi, s)

    def log_likelihood(self, xi) -> np.ndarray:
        return self.sensors.log_likelihood(xi)
